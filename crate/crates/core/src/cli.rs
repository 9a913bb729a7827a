//! The `ainfty` command line.
//!
//! Exit codes: 0 success, 1 a verifier check failed, 2 bad input or usage,
//! 3 I/O failure. All randomness comes from `--seed`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::characterizations::{
    full_report, ConstantReport, Estimator, Evaluator, Grids, ReportDocument,
};
use crate::error::{Error, Result};
use crate::filtration::{parse_document, Document, Filtration, Weight};
use crate::search::{
    gap_csv, gap_scan, optimize_on, Constraint, FiltrationSpec, Objective, SearchSpec,
};
use crate::verifier::{builtin_weights, run_suite, to_json_lines, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "AINFTY_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ainfty",
    version,
    about = "A∞ weight constants on finite filtrations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report every constant for each weight of a document.
    Analyze(AnalyzeArgs),
    /// Run the verifier suite on a document or on seeded random weights.
    Verify(VerifyArgs),
    /// Search for a weight maximizing an objective.
    Search(SearchArgs),
    /// Emit profile, acon, asw and alambda curves as CSV.
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long = "q-grid", value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    #[arg(long = "s-grid", value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    #[arg(long = "gamma-grid", value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long = "alpha-grid", value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long = "beta-grid", value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    #[arg(long = "eps-grid", value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
}

impl GridArgs {
    pub fn grids(&self) -> Result<Grids> {
        let d = Grids::default();
        let pick = |o: &Option<Vec<f64>>, dflt: Vec<f64>| o.clone().unwrap_or(dflt);
        let g = Grids {
            p: pick(&self.p, d.p),
            q: pick(&self.q, d.q),
            s: pick(&self.s, d.s),
            gamma: pick(&self.gamma, d.gamma),
            alpha: pick(&self.alpha, d.alpha),
            beta: pick(&self.beta, d.beta),
            eps: pick(&self.eps, d.eps),
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Weights to check; without it a seeded log-normal suite is generated.
    #[arg(long, visible_alias = "weights")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Depth of the dyadic filtration for the generated suite.
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Number of generated weights.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Override the slack tolerance of the inequality checks.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Negative control: halve every reported ap constant first.
    #[arg(long)]
    pub corrupt: bool,
    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Use this document's filtration instead of a dyadic one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
    /// `json` for the full result, `csv` for the trace; scans default to csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// `NAME[:PARAM]` or a ratio `A/B` of two such names.
    #[arg(long, default_value = "ap:2")]
    pub objective: String,
    /// `NAME[:PARAM]<=VALUE`
    #[arg(long)]
    pub constraint: Option<String>,
    /// Log-space proposal step.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Inclusive depth range `A..B` for a gap scan.
    #[arg(long)]
    pub scan_depths: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: Output,
    #[command(flatten)]
    pub grids: GridArgs,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidSpec(format!("{THREADS_ENV}={raw} is not a positive integer"))
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Search(a) => cmd_search(&a),
        Command::Profile(a) => cmd_profile(&a),
    }
}

fn read_document(path: &Path) -> Result<Document> {
    parse_document(&fs::read_to_string(path)?)
}

fn read_weights(path: &Path) -> Result<Document> {
    let doc = read_document(path)?;
    if doc.weights.is_empty() {
        return Err(Error::InvalidSpec(format!(
            "{} defines no weights",
            path.display()
        )));
    }
    Ok(doc)
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<i32> {
    let grids = a.grids.grids()?;
    let doc = read_weights(&a.input)?;
    let reports = doc
        .weights
        .iter()
        .map(|w| full_report(&doc.filtration, w, &grids))
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&ReportDocument::new(reports))?;
            s.push('\n');
            s
        }
        Format::Csv => reports_csv(&reports),
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

/// Column order of the analyze CSV.
pub const ANALYZE_COLUMNS: &str = "weight,characterization,parameter,value,level,atom,exact";

pub fn reports_csv(reports: &[ConstantReport]) -> String {
    let mut out = format!("{ANALYZE_COLUMNS}\n");
    for r in reports {
        for wit in &r.witnesses {
            let (name, param) = match wit.estimator.split_once(':') {
                Some((n, p)) => (n, p),
                None => (wit.estimator.as_str(), ""),
            };
            let value = if wit.value.is_finite() {
                wit.value.to_string()
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.weight, name, param, value, wit.level, wit.atom, wit.exact
            ));
        }
    }
    out
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let grids = a.grids.grids()?;
    if let Some(t) = a.tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("tolerance", t, "must be finite and >= 0"));
        }
    }
    let (f, weights) = match &a.input {
        Some(p) => {
            let doc = read_weights(p)?;
            (doc.filtration, doc.weights)
        }
        None => {
            let f = Filtration::dyadic(a.depth)?;
            let ws = builtin_weights(&f, a.count, a.seed)?;
            (f, ws)
        }
    };
    let config = SuiteConfig {
        grids,
        corrupt: a.corrupt,
        tolerance: a.tolerance,
        ..SuiteConfig::default()
    };
    let results = run_suite(&f, &weights, &config)?;
    emit(&a.output, &to_json_lines(&results))?;
    let failed = results.iter().filter(|r| !r.passed).count();
    eprintln!(
        "{} checks on {} weights, {failed} failed",
        results.len(),
        weights.len()
    );
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidSpec(format!("depth range `{s}` is not A..B"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn cmd_search(a: &SearchArgs) -> Result<i32> {
    let objective: Objective = a.objective.parse()?;
    let constraint: Option<Constraint> = a.constraint.as_deref().map(str::parse).transpose()?;
    let filtration = match &a.input {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
            FiltrationSpec::Document(value)
        }
        None => FiltrationSpec::Dyadic { depth: a.depth },
    };
    let spec = SearchSpec {
        filtration,
        objective,
        constraint,
        budget: a.iters,
        seed: a.seed,
        scale: a.scale,
        restarts: a.restarts,
    };
    spec.validate()?;

    if let Some(range) = &a.scan_depths {
        if a.input.is_some() {
            return Err(Error::InvalidSpec(
                "--scan-depths works on dyadic filtrations only".into(),
            ));
        }
        let (lo, hi) = parse_range(range)?;
        let rows = gap_scan(&spec, lo..=hi)?;
        let text = match a.format {
            Some(Format::Json) => serde_json::to_string_pretty(&rows)? + "\n",
            _ => gap_csv(&rows),
        };
        emit(&a.output, &text)?;
        return Ok(EXIT_OK);
    }

    let f = spec.filtration.build()?;
    let result = optimize_on(&f, &spec, None)?;
    let text = match a.format {
        Some(Format::Csv) => result.trace_csv(),
        _ => serde_json::to_string_pretty(&result)? + "\n",
    };
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

/// Column order of the profile CSV.
pub const PROFILE_COLUMNS: &str = "weight,kind,level,atom,param,x,y";

/// `s` values of the asw curve; the last one is close to 1, where the
/// ratio tends to 1.
pub const ASW_CURVE: [f64; 17] = [
    0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99, 0.999,
];

pub fn profile_csv(f: &Filtration, w: &Weight, grids: &Grids) -> Result<String> {
    let ev = Evaluator::new(f, w)?;
    let name = w.name();
    let mut out = String::new();
    let mut row = |kind: &str,
                   level: Option<usize>,
                   atom: Option<usize>,
                   param: Option<f64>,
                   x: f64,
                   y: f64| {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let y = if y.is_finite() {
            y.to_string()
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{name},{kind},{},{},{},{x},{y}\n",
            opt(level.map(|l| l.to_string())),
            opt(atom.map(|a| a.to_string())),
            opt(param.map(|p| p.to_string())),
        ));
    };
    for (n, level) in f.levels().iter().enumerate() {
        for i in 0..level.len() {
            for &(t, h) in &ev.profile(n, i)?.points {
                row("profile", Some(n), Some(i), None, t, h);
            }
        }
    }
    for g in (1..100).map(|k| k as f64 / 100.0) {
        row(
            "acon",
            None,
            None,
            None,
            g,
            ev.estimate(Estimator::Acon(g))?.value,
        );
    }
    for s in ASW_CURVE {
        row(
            "asw",
            None,
            None,
            None,
            s,
            ev.estimate(Estimator::Asw(s))?.value,
        );
    }
    for &beta in &grids.beta {
        for (n, level) in f.levels().iter().enumerate() {
            for i in 0..level.len() {
                for (lambda, r) in ev.alambda_table(n, i, beta)? {
                    row("alambda", Some(n), Some(i), Some(beta), lambda, r);
                }
            }
        }
    }
    Ok(out)
}

pub fn cmd_profile(a: &ProfileArgs) -> Result<i32> {
    let grids = a.grids.grids()?;
    let doc = read_weights(&a.input)?;
    let mut text = format!("{PROFILE_COLUMNS}\n");
    for w in &doc.weights {
        text.push_str(&profile_csv(&doc.filtration, w, &grids)?);
    }
    emit(&a.output, &text)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "ainfty",
            "search",
            "--objective",
            "ap:2",
            "--constraint",
            "amed<=1.5",
            "--depth",
            "6",
            "--iters",
            "2000",
            "--seed",
            "42",
        ])
        .unwrap();
        let Command::Search(s) = cli.command else {
            panic!()
        };
        assert_eq!((s.depth, s.iters, s.seed), (6, 2000, 42));
        let cli =
            Cli::try_parse_from(["ainfty", "analyze", "--input", "x", "--p-grid", "2,3"]).unwrap();
        let Command::Analyze(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.grids.grids().unwrap().p, vec![2.0, 3.0]);
        assert!(Cli::try_parse_from(["ainfty", "analyze"]).is_err());
    }

    #[test]
    fn depth_ranges() {
        assert_eq!(parse_range("3..8").unwrap(), (3, 8));
        assert_eq!(parse_range("3..=8").unwrap(), (3, 8));
        assert!(parse_range("8..3").is_err());
        assert!(parse_range("3-8").is_err());
    }

    #[test]
    fn bad_grid_is_usage_error() {
        let g = GridArgs {
            alpha: Some(vec![1.5]),
            ..GridArgs::default()
        };
        let e = g.grids().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_USAGE);
        let io = Error::Io(std::io::Error::other("x"));
        assert_eq!(exit_code(&io), EXIT_IO);
    }
}
