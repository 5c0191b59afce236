//! `wperm`: exact laws, predictions, samples, and verification runs for
//! weighted random permutations.
//!
//! Every option can also come from a flat `key=value` config file
//! (`--config`); explicit flags win. Runs that write artifacts
//! (`--out DIR`) store the resolved configuration and library version
//! next to the outputs, and re-executing that configuration reproduces
//! them byte for byte.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parse/usage error,
//! 3 degenerate measure (no admissible permutation of the degree).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use wperm::exact;
use wperm::harness::{self, acceptance, Centering, Thresholds};
use wperm::model::{RestrictionRule, WeightModel};
use wperm::sampler::{ConditionedPoissonSampler, RngStream, SequentialSampler};

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "wperm",
    version,
    about = "cycle statistics of weighted random permutations"
)]
struct Cli {
    /// Flat key=value config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: WPERM_THREADS env var, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for artifacts (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Weight model: uniform | ewens:theta=T | perturbed:theta=T,overrides=m:v;...
    /// | custom:file=F,r=R,vartheta=V,K=K
    #[arg(long)]
    model: Option<String>,
    /// Restriction: full | even | odd | tail:a=A | prefix:b=B | exclude:... | list:...
    #[arg(long)]
    restriction: Option<String>,
    /// Degree; a single value, an inclusive range lo..hi, or a comma list.
    #[arg(long)]
    n: Option<String>,
    /// Scalar kind for exact computations: rational | float.
    #[arg(long)]
    kind: Option<String>,
    /// RNG seed; generated and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate normalization constants h_n as CSV.
    Hn(Common),
    /// Exact law of a cycle statistic as CSV (outcome,probability).
    Law {
        #[command(flatten)]
        common: Common,
        /// Statistic: t | ell1 | counts:m1,m2,... | block:x=X
        #[arg(long)]
        stat: Option<String>,
    },
    /// Characteristic function on an s-grid as CSV (s,re,im).
    Charfn {
        #[command(flatten)]
        common: Common,
        /// Quantity: t | bx (block of lengths up to n^x)
        #[arg(long)]
        quantity: Option<String>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        s_min: Option<f64>,
        #[arg(long)]
        s_max: Option<f64>,
        #[arg(long)]
        s_steps: Option<u64>,
    },
    /// Leading-order asymptotic predictions as JSON records.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Quantity: hn | char_t | char_b | char_even_odd
        #[arg(long)]
        quantity: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        s2: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
    },
    /// Draw permutations; one CSV row per draw or aggregated statistics.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Sampler: sequential | poisson
        #[arg(long)]
        sampler: Option<String>,
        /// Tilt override for the conditioned-Poisson sampler.
        #[arg(long)]
        tilt: Option<f64>,
        /// Emit aggregated statistics instead of per-draw rows.
        #[arg(long)]
        aggregate: bool,
    },
    /// Run one verification check; exits 1 unless the verdict is Pass.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Check: poisson | clt | modpoisson | pd | flt | flt-restricted
        /// | flt-parity | cross
        #[arg(long)]
        check: Option<String>,
        /// Tail-restriction exponent for flt-restricted.
        #[arg(long)]
        a: Option<f64>,
        /// Marker lengths for the poisson check.
        #[arg(long)]
        markers: Option<String>,
        /// Centering for normalized processes: l-series (default, kills the
        /// finite-degree constant) | theta-log-n.
        #[arg(long)]
        centering: Option<String>,
    },
    /// Run the full acceptance suite; exits 1 if any criterion fails.
    All(Common),
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Degenerate(String),
    VerifyFail(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::VerifyFail(_) => EXIT_VERIFY_FAIL,
            CliError::Io(_) => EXIT_PARSE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate measure: {m}"),
            CliError::VerifyFail(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

fn from_exact(e: exact::ExactError) -> CliError {
    match e {
        exact::ExactError::DegenerateMeasure { n } => CliError::Degenerate(format!("h_{n} = 0")),
        other => CliError::Parse(other.to_string()),
    }
}

fn from_sampler(e: wperm::sampler::SamplerError) -> CliError {
    match e {
        wperm::sampler::SamplerError::Exact(inner) => from_exact(inner),
        other => CliError::Parse(other.to_string()),
    }
}

/// 17 significant digits, so CSV floats round-trip exactly.
fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wperm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// The fully resolved configuration of a run; written next to artifacts
/// and sufficient to reproduce them.
#[derive(Debug, Serialize)]
struct ResolvedConfig {
    command: String,
    options: BTreeMap<String, String>,
    library_version: String,
}

struct Run {
    config: ResolvedConfig,
    out: Option<PathBuf>,
    file_overrides: BTreeMap<String, String>,
}

impl Run {
    fn new(
        command: &str,
        out: Option<PathBuf>,
        config_file: Option<&Path>,
    ) -> Result<Self, CliError> {
        let file_overrides = match config_file {
            None => BTreeMap::new(),
            Some(path) => parse_config_file(path)?,
        };
        Ok(Run {
            config: ResolvedConfig {
                command: command.to_owned(),
                options: BTreeMap::new(),
                library_version: wperm::VERSION.to_owned(),
            },
            out,
            file_overrides,
        })
    }

    /// Resolve an option: explicit flag, then config file, then default.
    fn opt<T: Clone + std::fmt::Display, E: std::fmt::Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        parse: impl Fn(&str) -> Result<T, E>,
        default: Option<T>,
    ) -> Result<T, CliError> {
        let value = if let Some(v) = flag {
            v
        } else if let Some(raw) = self.file_overrides.get(key) {
            parse(raw).map_err(|e| CliError::Parse(format!("config {key}={raw}: {e}")))?
        } else if let Some(d) = default {
            d
        } else {
            return Err(CliError::Parse(format!("missing required option --{key}")));
        };
        self.config
            .options
            .insert(key.to_owned(), value.to_string());
        Ok(value)
    }

    fn record(&mut self, key: &str, value: impl std::fmt::Display) {
        self.config
            .options
            .insert(key.to_owned(), value.to_string());
    }

    /// Emit a named artifact: a file under the output directory, or stdout.
    fn emit(&self, name: &str, contents: &str) -> Result<(), CliError> {
        match &self.out {
            None => {
                print!("{contents}");
                Ok(())
            }
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
                let path = dir.join(name);
                fs::write(&path, contents).map_err(|e| CliError::Io(e.to_string()))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
        }
    }

    fn finish(&self) -> Result<(), CliError> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
            let path = dir.join("run_config.json");
            let json = serde_json::to_string_pretty(&self.config).expect("config serializes");
            fs::write(&path, json).map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Parse(format!(
                "{}:{}: expected key=value",
                path.display(),
                idx + 1
            ))
        })?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

fn parse_model(spec: &str) -> Result<WeightModel, String> {
    if let Some(rest) = spec.strip_prefix("custom:") {
        return parse_custom_model(rest).map_err(|e| e.to_string());
    }
    WeightModel::parse(spec).map_err(|e| e.to_string())
}

fn parse_custom_model(rest: &str) -> Result<WeightModel, CliError> {
    let mut file = None;
    let mut r = None;
    let mut vartheta = None;
    let mut k = 0.0f64;
    for part in rest.split(',') {
        let (key, value) = part.split_once('=').ok_or_else(|| {
            CliError::Parse(format!("custom model: expected key=value in {part}"))
        })?;
        match key {
            "file" => file = Some(value.to_owned()),
            "r" => r = value.parse().ok(),
            "vartheta" => vartheta = value.parse().ok(),
            "K" => {
                k = value
                    .parse()
                    .map_err(|_| CliError::Parse("custom model: bad K".into()))?
            }
            _ => return Err(CliError::Parse(format!("custom model: unknown key {key}"))),
        }
    }
    let file = file.ok_or_else(|| CliError::Parse("custom model needs file=".into()))?;
    let (r, vartheta) = (
        r.ok_or_else(|| CliError::Parse("custom model needs r=".into()))?,
        vartheta.ok_or_else(|| CliError::Parse("custom model needs vartheta=".into()))?,
    );
    let text = fs::read_to_string(&file).map_err(|e| CliError::Io(format!("{file}: {e}")))?;
    // rows m,theta_m; indices must cover 1..=max contiguously
    let mut entries: Vec<(u64, f64)> = Vec::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let (m, theta) = line
            .split_once(',')
            .ok_or_else(|| CliError::Parse(format!("{file}: expected m,theta_m rows")))?;
        let m: u64 = m
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("{file}: bad index {m}")))?;
        let theta: f64 = theta
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("{file}: bad weight {theta}")))?;
        entries.push((m, theta));
    }
    entries.sort_by_key(|&(m, _)| m);
    let mut weights = Vec::with_capacity(entries.len());
    for (expect, (m, theta)) in entries.iter().enumerate() {
        if *m != expect as u64 + 1 {
            return Err(CliError::Parse(format!(
                "{file}: weight rows must cover 1..=N contiguously, missing {}",
                expect + 1
            )));
        }
        weights.push(*theta);
    }
    WeightModel::custom(weights, r, vartheta, k, &file).map_err(|e| CliError::Parse(e.to_string()))
}

fn parse_n_values(spec: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|_| "bad range start".to_owned())?;
        let hi: u64 = hi.trim().parse().map_err(|_| "bad range end".to_owned())?;
        if lo > hi {
            return Err("empty range".into());
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad degree {p}"))
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Rational,
    Float,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kind::Rational => write!(f, "rational"),
            Kind::Float => write!(f, "float"),
        }
    }
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    match s {
        "rational" => Ok(Kind::Rational),
        "float" => Ok(Kind::Float),
        other => Err(format!("kind must be rational|float, got {other}")),
    }
}

fn init_threads(flag: Option<usize>) {
    let threads = flag.or_else(|| {
        std::env::var("WPERM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.threads);
    let config_file = cli.config.clone();
    match cli.command {
        Command::Hn(common) => cmd_hn(common, cli.out, config_file.as_deref()),
        Command::Law { common, stat } => cmd_law(common, stat, cli.out, config_file.as_deref()),
        Command::Charfn {
            common,
            quantity,
            x,
            s_min,
            s_max,
            s_steps,
        } => cmd_charfn(
            common,
            quantity,
            x,
            (s_min, s_max, s_steps),
            cli.out,
            config_file.as_deref(),
        ),
        Command::Predict {
            common,
            quantity,
            s,
            s2,
            x,
        } => cmd_predict(common, quantity, s, s2, x, cli.out, config_file.as_deref()),
        Command::Sample {
            common,
            sampler,
            tilt,
            aggregate,
        } => cmd_sample(
            common,
            sampler,
            tilt,
            aggregate,
            cli.out,
            config_file.as_deref(),
        ),
        Command::Verify {
            common,
            check,
            a,
            markers,
            centering,
        } => cmd_verify(
            common,
            check,
            a,
            markers,
            centering,
            cli.out,
            config_file.as_deref(),
        ),
        Command::All(common) => cmd_all(common, cli.out, config_file.as_deref()),
    }
}

fn resolve_model_restriction(
    run: &mut Run,
    common: &Common,
) -> Result<(WeightModel, RestrictionRule), CliError> {
    let model = run.opt(
        "model",
        common.model.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        None,
    )?;
    let restriction = run.opt(
        "restriction",
        common.restriction.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        Some("full".to_owned()),
    )?;
    let model = parse_model(&model).map_err(CliError::Parse)?;
    let rule = RestrictionRule::parse(&restriction).map_err(|e| CliError::Parse(e.to_string()))?;
    // canonical forms into the recorded config
    run.record("model", model.spec_string());
    run.record("restriction", rule.spec_string());
    Ok((model, rule))
}

fn resolve_seed(run: &mut Run, common: &Common) -> Result<u64, CliError> {
    let seed = match common.seed {
        Some(s) => s,
        None => match run.file_overrides.get("seed") {
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Parse(format!("config seed={raw}")))?,
            None => {
                let s: u64 = rand::random();
                eprintln!("seed: {s}");
                s
            }
        },
    };
    run.record("seed", seed);
    Ok(seed)
}

fn cmd_hn(common: Common, out: Option<PathBuf>, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut run = Run::new("hn", out, cfg)?;
    let (model, rule) = resolve_model_restriction(&mut run, &common)?;
    let ns = run.opt(
        "n",
        common.n.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        None,
    )?;
    let ns = parse_n_values(&ns).map_err(CliError::Parse)?;
    let kind = run.opt(
        "kind",
        common
            .kind
            .clone()
            .map(|k| parse_kind(&k))
            .transpose()
            .map_err(CliError::Parse)?,
        parse_kind,
        Some(Kind::Rational),
    )?;
    let mut csv = String::from("n,h\n");
    match kind {
        Kind::Rational => {
            // one table at the largest degree serves every requested n for
            // n-independent rules; n-dependent rules rebuild per n
            for &n in &ns {
                let a = rule.at(n.max(1));
                let table = exact::h_table_q(&model, &a);
                let h = if n == 0 {
                    "1".to_owned()
                } else {
                    let v = table.h(n as usize);
                    if num_traits::One::is_one(v.denom()) {
                        v.numer().to_string()
                    } else {
                        format!("{}/{}", v.numer(), v.denom())
                    }
                };
                let _ = writeln!(csv, "{n},{h}");
            }
        }
        Kind::Float => {
            for &n in &ns {
                let a = rule.at(n.max(1));
                let table = exact::h_table_f(&model, &a);
                let _ = writeln!(
                    csv,
                    "{n},{}",
                    g17(if n == 0 {
                        1.0
                    } else {
                        table.h_scaled(n as usize)
                    })
                );
            }
        }
    }
    run.emit("hn.csv", &csv)?;
    run.finish()
}

fn cmd_law(
    common: Common,
    stat: Option<String>,
    out: Option<PathBuf>,
    cfg: Option<&Path>,
) -> Result<(), CliError> {
    let mut run = Run::new("law", out, cfg)?;
    let (model, rule) = resolve_model_restriction(&mut run, &common)?;
    let n_spec = run.opt(
        "n",
        common.n.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        None,
    )?;
    let n = *parse_n_values(&n_spec)
        .map_err(CliError::Parse)?
        .first()
        .ok_or_else(|| CliError::Parse("law needs a single degree".into()))?;
    let kind = run.opt(
        "kind",
        common
            .kind
            .clone()
            .map(|k| parse_kind(&k))
            .transpose()
            .map_err(CliError::Parse)?,
        parse_kind,
        Some(Kind::Rational),
    )?;
    let stat = run.opt("stat", stat, |s| Ok::<_, String>(s.to_owned()), None)?;
    let a = rule.at(n);
    let law = match (stat.as_str(), kind) {
        ("t", Kind::Rational) => exact::law_of_t_q(&model, &a),
        ("t", Kind::Float) => exact::law_of_t_f(&model, &a),
        ("ell1", Kind::Rational) => exact::ell1_law_q(&model, &a),
        ("ell1", Kind::Float) => exact::ell1_law_f(&model, &a),
        (s, kind) if s.starts_with("counts:") => {
            let ms: Vec<u64> = s["counts:".len()..]
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| CliError::Parse(format!("bad marker {p}")))
                })
                .collect::<Result<_, _>>()?;
            match kind {
                Kind::Rational => exact::joint_cycle_count_law_q(&model, &a, &ms),
                Kind::Float => exact::joint_cycle_count_law_f(&model, &a, &ms),
            }
        }
        (s, _) if s.starts_with("block:x=") => {
            let x: f64 = s["block:x=".len()..]
                .parse()
                .map_err(|_| CliError::Parse("bad block exponent".into()))?;
            let cutoff = (n as f64).powf(x).floor().max(1.0) as u64;
            let block: std::collections::BTreeSet<u64> = (1..=cutoff).collect();
            exact::block_count_law_q(&model, &a, &block)
        }
        (other, _) => {
            return Err(CliError::Parse(format!(
                "unknown stat {other} (expected t|ell1|counts:...|block:x=...)"
            )))
        }
    }
    .map_err(from_exact)?;
    // rational probabilities are printed exactly when requested
    let csv = if law.is_exact() && kind == Kind::Rational {
        let mut s = String::from("outcome,probability\n");
        for o in law.outcomes() {
            let p = law.prob_q(o).map_err(from_exact)?;
            let _ = writeln!(s, "{o},{}/{}", p.numer(), p.denom());
        }
        s
    } else {
        law.to_csv()
    };
    run.emit("law.csv", &csv)?;
    run.finish()
}

fn cmd_charfn(
    common: Common,
    quantity: Option<String>,
    x: Option<f64>,
    grid: (Option<f64>, Option<f64>, Option<u64>),
    out: Option<PathBuf>,
    cfg: Option<&Path>,
) -> Result<(), CliError> {
    let mut run = Run::new("charfn", out, cfg)?;
    let (model, rule) = resolve_model_restriction(&mut run, &common)?;
    let n_spec = run.opt(
        "n",
        common.n.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        None,
    )?;
    let n = parse_n_values(&n_spec).map_err(CliError::Parse)?[0];
    let quantity = run.opt(
        "quantity",
        quantity,
        |s| Ok::<_, String>(s.to_owned()),
        Some("t".into()),
    )?;
    let s_min = run.opt(
        "s-min",
        grid.0,
        |s| s.parse::<f64>().map_err(|e| e.to_string()),
        Some(-std::f64::consts::PI),
    )?;
    let s_max = run.opt(
        "s-max",
        grid.1,
        |s| s.parse::<f64>().map_err(|e| e.to_string()),
        Some(std::f64::consts::PI),
    )?;
    let s_steps = run.opt(
        "s-steps",
        grid.2,
        |s| s.parse::<u64>().map_err(|e| e.to_string()),
        Some(33),
    )?;
    let a = rule.at(n);
    let s_grid: Vec<f64> = (0..s_steps)
        .map(|i| s_min + (s_max - s_min) * i as f64 / (s_steps.saturating_sub(1).max(1)) as f64)
        .collect();
    let values: Vec<Complex64> = match quantity.as_str() {
        "t" => exact::char_t_grid(&model, &a, &s_grid).map_err(from_exact)?,
        "bx" => {
            let x = run.opt(
                "x",
                x,
                |s| s.parse::<f64>().map_err(|e| e.to_string()),
                None,
            )?;
            let cutoff = (n as f64).powf(x).floor().max(1.0) as u64;
            let block: std::collections::BTreeSet<u64> = (1..=cutoff).collect();
            s_grid
                .iter()
                .map(|&s| exact::char_blocks(&model, &a, &[(block.clone(), s)]))
                .collect::<Result<_, _>>()
                .map_err(from_exact)?
        }
        other => return Err(CliError::Parse(format!("unknown quantity {other}"))),
    };
    let mut csv = String::from("s,re,im\n");
    for (s, v) in s_grid.iter().zip(&values) {
        let _ = writeln!(csv, "{},{},{}", g17(*s), g17(v.re), g17(v.im));
    }
    run.emit("charfn.csv", &csv)?;
    run.finish()
}

fn cmd_predict(
    common: Common,
    quantity: Option<String>,
    s: Option<f64>,
    s2: Option<f64>,
    x: Option<f64>,
    out: Option<PathBuf>,
    cfg: Option<&Path>,
) -> Result<(), CliError> {
    let mut run = Run::new("predict", out, cfg)?;
    let (model, rule) = resolve_model_restriction(&mut run, &common)?;
    let n_spec = run.opt(
        "n",
        common.n.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        None,
    )?;
    let ns = parse_n_values(&n_spec).map_err(CliError::Parse)?;
    let quantity = run.opt(
        "quantity",
        quantity,
        |s| Ok::<_, String>(s.to_owned()),
        Some("hn".into()),
    )?;
    let mut lines = String::new();
    for &n in &ns {
        let a = rule.at(n);
        let prediction = match quantity.as_str() {
            "hn" => wperm::asymptotics::predict_h_n(&model, &a),
            "char_t" => {
                let s = run.opt(
                    "s",
                    s,
                    |v| v.parse::<f64>().map_err(|e| e.to_string()),
                    Some(0.5),
                )?;
                wperm::asymptotics::predict_char_t(&model, &a, s)
            }
            "char_b" => {
                let s = run.opt(
                    "s",
                    s,
                    |v| v.parse::<f64>().map_err(|e| e.to_string()),
                    Some(0.5),
                )?;
                let x = run.opt(
                    "x",
                    x,
                    |v| v.parse::<f64>().map_err(|e| e.to_string()),
                    Some(0.5),
                )?;
                wperm::asymptotics::predict_char_b(&model, n, x, s)
            }
            "char_even_odd" => {
                let s = run.opt(
                    "s",
                    s,
                    |v| v.parse::<f64>().map_err(|e| e.to_string()),
                    Some(0.5),
                )?;
                let s2 = run.opt(
                    "s2",
                    s2,
                    |v| v.parse::<f64>().map_err(|e| e.to_string()),
                    Some(-0.5),
                )?;
                wperm::asymptotics::predict_char_even_odd(&model, n, s, s2)
            }
            other => return Err(CliError::Parse(format!("unknown quantity {other}"))),
        }
        .map_err(|e| CliError::Parse(e.to_string()))?;
        lines.push_str(&prediction.to_json());
        lines.push('\n');
    }
    run.emit("predictions.jsonl", &lines)?;
    run.finish()
}

fn cmd_sample(
    common: Common,
    sampler: Option<String>,
    tilt: Option<f64>,
    aggregate: bool,
    out: Option<PathBuf>,
    cfg: Option<&Path>,
) -> Result<(), CliError> {
    let mut run = Run::new("sample", out, cfg)?;
    let (model, rule) = resolve_model_restriction(&mut run, &common)?;
    let n_spec = run.opt(
        "n",
        common.n.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        None,
    )?;
    let n = parse_n_values(&n_spec).map_err(CliError::Parse)?[0];
    let samples = run.opt(
        "samples",
        common.samples,
        |s| s.parse::<u64>().map_err(|e| e.to_string()),
        Some(100),
    )?;
    let which = run.opt(
        "sampler",
        sampler,
        |s| Ok::<_, String>(s.to_owned()),
        Some("sequential".into()),
    )?;
    let seed = resolve_seed(&mut run, &common)?;
    run.record("aggregate", aggregate);
    let a = rule.at(n);
    let mut rng = RngStream { seed, stream: 0 }.rng();
    let draws: Vec<wperm::sampler::CycleCountVector> = match which.as_str() {
        "sequential" => {
            let s = SequentialSampler::new(&model, &a).map_err(from_sampler)?;
            (0..samples).map(|_| s.sample(&mut rng)).collect()
        }
        "poisson" => {
            if let Some(t) = tilt {
                run.record("tilt", t);
            }
            let s = ConditionedPoissonSampler::new(&model, &a, tilt, 100_000_000)
                .map_err(from_sampler)?;
            (0..samples)
                .map(|_| s.sample(&mut rng))
                .collect::<Result<_, _>>()
                .map_err(from_sampler)?
        }
        other => return Err(CliError::Parse(format!("unknown sampler {other}"))),
    };
    let csv = if aggregate {
        let count = draws.len() as f64;
        let ts: Vec<f64> = draws.iter().map(|v| v.total_cycles() as f64).collect();
        let largest: Vec<f64> = draws
            .iter()
            .map(|v| v.largest() as f64 / n as f64)
            .collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / count;
        let var = |xs: &[f64]| {
            let m = mean(xs);
            xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (count - 1.0)
        };
        format!(
            "statistic,value\ndraws,{}\nmean_total_cycles,{}\nvar_total_cycles,{}\nmean_largest_over_n,{}\n",
            draws.len(),
            g17(mean(&ts)),
            g17(var(&ts)),
            g17(mean(&largest)),
        )
    } else {
        let mut csv = String::from("draw_id,cycles\n");
        for (i, v) in draws.iter().enumerate() {
            let sparse: Vec<String> = v.iter().map(|(m, c)| format!("{m}:{c}")).collect();
            let _ = writeln!(csv, "{i},{}", sparse.join(" "));
        }
        csv
    };
    run.emit("samples.csv", &csv)?;
    run.finish()
}

fn write_report(run: &Run, report: &harness::ComparisonReport) -> Result<(), CliError> {
    run.emit("report.json", &format!("{}\n", report.to_json()))?;
    if run.out.is_some() {
        run.emit("report.csv", &report.to_csv())?;
    }
    Ok(())
}

fn parse_centering(s: &str) -> Result<Centering, String> {
    match s {
        "l-series" => Ok(Centering::LSeries),
        "theta-log-n" => Ok(Centering::ThetaLogN),
        other => Err(format!(
            "centering must be l-series|theta-log-n, got {other}"
        )),
    }
}

fn centering_name(c: Centering) -> &'static str {
    match c {
        Centering::LSeries => "l-series",
        Centering::ThetaLogN => "theta-log-n",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    common: Common,
    check: Option<String>,
    a_exp: Option<f64>,
    markers: Option<String>,
    centering: Option<String>,
    out: Option<PathBuf>,
    cfg: Option<&Path>,
) -> Result<(), CliError> {
    let mut run = Run::new("verify", out, cfg)?;
    let thresholds = Thresholds::default();
    let check = run.opt("check", check, |s| Ok::<_, String>(s.to_owned()), None)?;
    let centering = centering
        .as_deref()
        .or_else(|| run.file_overrides.get("centering").map(String::as_str))
        .map(parse_centering)
        .transpose()
        .map_err(CliError::Parse)?
        .unwrap_or(Centering::LSeries);
    run.record("centering", centering_name(centering));
    let (model, rule) = resolve_model_restriction(&mut run, &common)?;
    let n_spec = run.opt(
        "n",
        common.n.clone(),
        |s| Ok::<_, String>(s.to_owned()),
        Some("1000".into()),
    )?;
    let ns = parse_n_values(&n_spec).map_err(CliError::Parse)?;
    let n = *ns.last().unwrap();
    let report = match check.as_str() {
        "poisson" => {
            let ms: Vec<u64> = run
                .opt("markers", markers, |s| Ok::<_, String>(s.to_owned()), Some("1".into()))?
                .split(',')
                .map(|p| p.trim().parse().map_err(|_| CliError::Parse(format!("bad marker {p}"))))
                .collect::<Result<_, _>>()?;
            let ladder = if ns.len() >= 2 { ns.clone() } else { vec![n, n * 4] };
            harness::verify_poisson_cycle_counts(&model, &rule, &ms, &ladder, &thresholds)
                .map_err(from_exact)?
        }
        "clt" => {
            let samples = run.opt("samples", common.samples, |s| s.parse::<u64>().map_err(|e| e.to_string()), Some(10_000))?;
            let seed = resolve_seed(&mut run, &common)?;
            let ladder = if ns.len() >= 2 {
                ns.clone()
            } else {
                vec![n / 100, n / 10, n]
            };
            let rungs: Vec<(u64, u64)> = ladder.iter().map(|&m| (m.max(10), samples)).collect();
            harness::verify_clt_t(&model, &rule, &rungs, centering, seed, &thresholds)
                .map_err(from_sampler)?
        }
        "modpoisson" => {
            let ladder = if ns.len() >= 2 { ns.clone() } else { vec![n / 10, n] };
            let s_grid: Vec<f64> = (0..=16)
                .map(|i| -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 16.0)
                .collect();
            harness::verify_mod_poisson_t(&model, &rule, &ladder, &s_grid, &thresholds)
                .map_err(from_exact)?
        }
        "pd" => {
            let samples = run.opt("samples", common.samples, |s| s.parse::<u64>().map_err(|e| e.to_string()), Some(10_000))?;
            let seed = resolve_seed(&mut run, &common)?;
            harness::verify_pd_large_cycles(
                &model, &rule, 2_000, n, samples, 3, 1_000_000, seed, &thresholds,
            )
            .map_err(from_sampler)?
        }
        "flt" => {
            let samples = run.opt("samples", common.samples, |s| s.parse::<u64>().map_err(|e| e.to_string()), Some(10_000))?;
            let seed = resolve_seed(&mut run, &common)?;
            harness::verify_flt(
                &model,
                &[0.25, 0.5, 0.75],
                n,
                samples,
                centering,
                ((0.0, 0.4), (0.4, 0.9)),
                seed,
                &thresholds,
            )
            .map_err(from_sampler)?
        }
        "flt-restricted" => {
            let samples = run.opt("samples", common.samples, |s| s.parse::<u64>().map_err(|e| e.to_string()), Some(10_000))?;
            let a_exp = run.opt("a", a_exp, |s| s.parse::<f64>().map_err(|e| e.to_string()), Some(0.3))?;
            let seed = resolve_seed(&mut run, &common)?;
            harness::verify_flt_restricted(
                &model,
                a_exp,
                &[0.1, a_exp, (a_exp + 1.0) / 2.0, 0.8],
                n,
                samples,
                seed,
                &thresholds,
            )
            .map_err(from_sampler)?
        }
        "flt-parity" => {
            let samples = run.opt("samples", common.samples, |s| s.parse::<u64>().map_err(|e| e.to_string()), Some(10_000))?;
            let seed = resolve_seed(&mut run, &common)?;
            let s_points = [
                (std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_4),
                (std::f64::consts::FRAC_PI_4 / 2.0, std::f64::consts::FRAC_PI_4),
            ];
            harness::verify_flt_parity(
                &model,
                &[0.5, 1.0],
                n,
                samples,
                (250, 500),
                &s_points,
                seed,
                &thresholds,
            )
            .map_err(from_sampler)?
        }
        "cross" => {
            let samples = run.opt("samples", common.samples, |s| s.parse::<u64>().map_err(|e| e.to_string()), Some(100_000))?;
            let seed = resolve_seed(&mut run, &common)?;
            harness::verify_sampler_cross(&model, &rule, n.min(12), samples, seed, &thresholds)
                .map_err(from_sampler)?
        }
        other => {
            return Err(CliError::Parse(format!(
                "unknown check {other} (expected poisson|clt|modpoisson|pd|flt|flt-restricted|flt-parity|cross)"
            )))
        }
    };
    write_report(&run, &report)?;
    run.finish()?;
    if !report.is_pass() {
        return Err(CliError::VerifyFail(format!(
            "{} verdict {:?}",
            report.quantity, report.verdict
        )));
    }
    Ok(())
}

fn cmd_all(common: Common, out: Option<PathBuf>, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut run = Run::new("all", out, cfg)?;
    if let Some(seed) = common.seed {
        run.record("seed", seed);
        eprintln!("note: the acceptance suite uses the pre-registered fixture seeds; --seed {seed} is recorded but not applied");
    }
    let thresholds = Thresholds::default();
    let outcomes = acceptance::run_all(&thresholds);
    let mut text = String::new();
    for o in &outcomes {
        let _ = writeln!(text, "{}", o.line());
    }
    print!("{text}");
    let json = serde_json::to_string_pretty(&outcomes).expect("outcomes serialize");
    run.emit("acceptance.json", &format!("{json}\n"))?;
    run.finish()?;
    if outcomes.iter().any(|o| !o.pass) {
        return Err(CliError::VerifyFail("acceptance suite has failures".into()));
    }
    Ok(())
}
