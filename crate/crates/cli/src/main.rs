use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandrecon::bounds::FitRange;
use bandrecon::experiments::{
    bound_envelope, condnum_csv, condnum_table, envelope_csv, error_curves, errors_csv, normalized_flat,
    rates_report, simulate_report, RatesReport, SimReport,
};
use bandrecon::simulate::SimConfig;
use bandrecon::spectra::{Autocorrelation, Bandwidth, DensitySpec, SpectralDensity};
use bandrecon::weights::Method;
use bandrecon::{Error, PrecisionConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Reconstruction experiments for bandlimited stationary processes.
#[derive(Parser, Debug)]
#[command(name = "bandrecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Condition numbers of the sinc-kernel Gram matrix.
    Condnum(Options),
    /// Sup-norm reconstruction errors per method and size.
    Errors(Options),
    /// Analytic bounds next to computed errors.
    Bounds(Options),
    /// Fitted exponential decay rates.
    Rates(Options),
    /// Monte Carlo check of the mean-square errors.
    Simulate(Options),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
struct Options {
    /// JSON file with default values for any of the options below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bandwidth, e.g. `pi/2` or `1.2`; condnum accepts a comma list.
    #[arg(long)]
    delta: Option<String>,
    /// Density as inline JSON or a path to a JSON file.
    #[arg(long)]
    density: Option<String>,
    /// Sample sizes: comma list with optional `a..b` ranges.
    #[arg(long = "n", allow_hyphen_values = true)]
    n: Option<String>,
    /// Methods: shannon, a1, a2, optimal.
    #[arg(long)]
    methods: Option<String>,
    /// Number of t-points in [0, 1].
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    precision_bits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the simulated paths as CSV (simulate only).
    #[arg(long)]
    dump_ensemble: Option<PathBuf>,
}

/// Config-file form of [`Options`].
#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    delta: Option<OneOrMany>,
    density: Option<Value>,
    n: Option<Vec<usize>>,
    methods: Option<Vec<Method>>,
    grid: Option<usize>,
    precision_bits: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    dump_ensemble: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Bandwidth),
    Many(Vec<Bandwidth>),
}

/// Fully resolved settings for one command.
#[derive(Debug)]
struct Settings {
    deltas: Vec<Bandwidth>,
    density: Option<SpectralDensity>,
    ns: Vec<usize>,
    methods: Vec<Method>,
    grid: usize,
    bits: usize,
    seed: u64,
    trials: usize,
    out: Option<PathBuf>,
    format: Format,
    dump_ensemble: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn parse_n_list(s: &str) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |x: &str| x.trim().parse::<usize>().or_else(|_| usage(format!("bad size '{x}' in n-list")));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return usage(format!("empty range '{part}' in n-list"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, Error>) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| f(p).map_err(Failure::from))
        .collect()
}

fn load_density(v: &Value) -> Result<SpectralDensity, Failure> {
    let spec: DensitySpec =
        serde_json::from_value(v.clone()).or_else(|e| usage(format!("invalid density JSON: {e}")))?;
    Ok(spec.build()?)
}

fn density_arg(s: &str) -> Result<SpectralDensity, Failure> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        fs::read_to_string(s).or_else(|e| usage(format!("cannot read density file {s}: {e}")))?
    };
    let v: Value = serde_json::from_str(&text).or_else(|e| usage(format!("invalid density JSON: {e}")))?;
    load_density(&v)
}

struct Defaults {
    deltas: Vec<Bandwidth>,
    ns: Vec<usize>,
    methods: Vec<Method>,
    grid: usize,
    trials: usize,
    format: Format,
}

fn bw(num: i64, den: i64) -> Bandwidth {
    Bandwidth::pi_fraction(num, den).expect("valid bandwidth")
}

fn defaults(cmd: &Command) -> Defaults {
    let half = vec![bw(1, 2)];
    let all = vec![Method::Optimal, Method::A1, Method::A2];
    let base = Defaults {
        deltas: half,
        ns: (1..=12).collect(),
        methods: all,
        grid: 101,
        trials: 10_000,
        format: Format::Csv,
    };
    match cmd {
        Command::Condnum(_) => Defaults {
            deltas: vec![bw(3, 4), bw(1, 2), bw(1, 3)],
            ns: vec![1, 3, 5, 7, 9],
            ..base
        },
        Command::Errors(_) => base,
        Command::Bounds(_) => Defaults {
            ns: (1..=10).collect(),
            ..base
        },
        Command::Rates(_) => Defaults {
            ns: (4..=14).collect(),
            format: Format::Json,
            ..base
        },
        Command::Simulate(_) => Defaults {
            ns: vec![6],
            methods: vec![Method::Shannon, Method::A1, Method::A2],
            grid: 11,
            format: Format::Json,
            ..base
        },
    }
}

fn resolve(cmd: &Command, o: &Options) -> Result<Settings, Failure> {
    let file: FileConfig = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).or_else(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text).or_else(|e| usage(format!("invalid config {}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let d = defaults(cmd);

    let deltas = match (&o.delta, file.delta) {
        (Some(s), _) => parse_list(s, Bandwidth::parse)?,
        (None, Some(OneOrMany::One(b))) => vec![b],
        (None, Some(OneOrMany::Many(v))) => v,
        (None, None) => d.deltas,
    };
    if deltas.is_empty() {
        return usage("delta list must be nonempty");
    }
    let density = match (&o.density, &file.density) {
        (Some(s), _) => Some(density_arg(s)?),
        (None, Some(v)) => Some(load_density(v)?),
        (None, None) => None,
    };
    let ns = match (&o.n, file.n) {
        (Some(s), _) => parse_n_list(s)?,
        (None, Some(v)) => v,
        (None, None) => d.ns,
    };
    if ns.is_empty() {
        return usage("n-list must be nonempty");
    }
    let methods = match (&o.methods, file.methods) {
        (Some(s), _) => parse_list(s, Method::parse)?,
        (None, Some(v)) => v,
        (None, None) => d.methods,
    };
    if methods.is_empty() {
        return usage("method list must be nonempty");
    }
    let grid = o.grid.or(file.grid).unwrap_or(d.grid);
    if grid < 3 {
        return usage(format!("grid size must be at least 3, got {grid}"));
    }
    let bits = o.precision_bits.or(file.precision_bits).unwrap_or(bandrecon::precision::DEFAULT_BITS);
    PrecisionConfig::new(bits)?;
    let trials = o.trials.or(file.trials).unwrap_or(d.trials);
    if matches!(cmd, Command::Simulate(_)) && trials < 100 {
        return usage(format!("simulate needs at least 100 trials, got {trials}"));
    }
    Ok(Settings {
        deltas,
        density,
        ns,
        methods,
        grid,
        bits,
        seed: o.seed.or(file.seed).unwrap_or(1),
        trials,
        out: o.out.clone().or(file.out),
        format: o.format.or(file.format).unwrap_or(d.format),
        dump_ensemble: o.dump_ensemble.clone().or(file.dump_ensemble),
    })
}

impl Settings {
    fn single_delta(&self) -> Result<Bandwidth, Failure> {
        match self.deltas.as_slice() {
            [d] => Ok(*d),
            _ => usage("this command takes a single delta"),
        }
    }

    /// The density from `--density`, or the normalized flat one at `delta`.
    fn process(&self, explicit_delta: bool) -> Result<Autocorrelation, Failure> {
        let density = match &self.density {
            Some(d) => {
                if explicit_delta && self.single_delta()? != d.delta() {
                    return usage(format!(
                        "--delta {} disagrees with the density bandwidth {}",
                        self.deltas[0],
                        d.delta()
                    ));
                }
                d.clone()
            }
            None => normalized_flat(self.single_delta()?)?,
        };
        Ok(Autocorrelation::new(density))
    }

    fn precision(&self) -> PrecisionConfig {
        PrecisionConfig::new(self.bits).expect("validated in resolve")
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn rates_csv(r: &RatesReport) -> String {
    let mut out = String::from("method,slope,intercept,r_squared,theoretical_exponent\n");
    for m in &r.rates {
        let th = m.theoretical_exponent.map(|v| format!("{v:?}")).unwrap_or_default();
        out += &format!("{},{:?},{:?},{:?},{th}\n", m.method, m.fit.slope, m.fit.intercept, m.fit.r_squared);
    }
    out
}

fn simulate_csv(r: &SimReport) -> String {
    let mut out = String::from("method,n,t,mse,reference,mean,stderr,z\n");
    for x in &r.rows {
        out += &format!(
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            x.method, x.n, x.t, x.mse, x.reference, x.mean, x.stderr, x.z
        );
    }
    out
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).or_else(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).or_else(|e| usage(format!("cannot write output: {e}")))
        }
    }
}

fn run(cmd: &Command) -> Result<(), Failure> {
    let o = match cmd {
        Command::Condnum(o) | Command::Errors(o) | Command::Bounds(o) | Command::Rates(o) | Command::Simulate(o) => o,
    };
    let s = resolve(cmd, o)?;
    let explicit_delta = o.delta.is_some();
    let text = match cmd {
        Command::Condnum(_) => {
            let rows = condnum_table(&s.deltas, &s.ns, &s.precision())?;
            match s.format {
                Format::Csv => condnum_csv(&rows),
                Format::Json => to_json(&rows),
            }
        }
        Command::Errors(_) => {
            let a = s.process(explicit_delta)?;
            let rows = error_curves(&a, &s.methods, &s.ns, s.grid, &s.precision())?;
            match s.format {
                Format::Csv => errors_csv(&rows),
                Format::Json => to_json(&rows),
            }
        }
        Command::Bounds(_) => {
            let a = s.process(explicit_delta)?;
            let rows = bound_envelope(&a, &s.methods, &s.ns, s.grid, &s.precision())?;
            match s.format {
                Format::Csv => envelope_csv(&rows),
                Format::Json => to_json(&rows),
            }
        }
        Command::Rates(_) => {
            let a = s.process(explicit_delta)?;
            let r = rates_report(&a, &s.methods, &s.ns, s.grid, &s.precision(), FitRange::All)?;
            match s.format {
                Format::Csv => rates_csv(&r),
                Format::Json => to_json(&r),
            }
        }
        Command::Simulate(_) => {
            let a = s.process(explicit_delta)?;
            let cfg = SimConfig::new(s.seed, s.trials);
            let (r, ensembles) = simulate_report(&a, &s.methods, &s.ns, s.grid, &cfg)?;
            if let Some(p) = &s.dump_ensemble {
                let dump: String = ensembles.iter().map(|e| e.to_csv()).collect::<Vec<_>>().join("\n");
                write_out(Some(p), &dump)?;
            }
            if !r.pass {
                eprintln!("warning: {} of {} z-tests exceed 3", r.total - r.passed, r.total);
            }
            match s.format {
                Format::Csv => simulate_csv(&r),
                Format::Json => to_json(&r),
            }
        }
    };
    write_out(s.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
