use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hdmean::corrmat::{ar1, block_spiked, compound_symmetric, from_spectrum};
use hdmean::io::{read_corr4, read_spectrum, read_table_path, write_matrix, write_rows};
use hdmean::limit_law::{density, example1_law, example3_law, LawCdf, PlugIn, DEFAULT_MC_DRAWS};
use hdmean::mean_tests::{test_one_sample, test_two_sample, LawSpec, PValueOptions};
use hdmean::moments::{closed_form_moment, cov_b1_b2, isserlis_moment, MomentKind};
use hdmean::sim_harness::{run_null_experiment, ExperimentConfig};
use hdmean::{with_workers, CdfMethod, Dataset, Error, MixtureLaw, SeedSpec, SpectrumSpec, Variant};

#[derive(Parser, Debug)]
#[command(
    name = "hdmean",
    version,
    about = "High-dimensional mean tests and null-law simulations"
)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "HDMEAN_SEED")]
    seed: Option<u64>,

    /// Worker threads for replicate loops; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// How the reference law's distribution function is evaluated.
    #[arg(long, global = true, default_value = "mc", value_parser = parse_method)]
    method: CdfMethod,

    /// Draws for the Monte Carlo distribution function.
    #[arg(long, global = true, default_value_t = DEFAULT_MC_DRAWS)]
    mc_draws: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-sample test of H0: mu = 0.
    Test1 {
        data: PathBuf,
        #[arg(long, default_value = "tp1", value_parser = parse_variant)]
        variant: Variant,
        #[command(flatten)]
        law: LawArg,
    },
    /// Two-sample test of H0: mu1 = mu2.
    Test2 {
        data1: PathBuf,
        data2: PathBuf,
        #[arg(long, default_value = "tp2", value_parser = parse_variant)]
        variant: Variant,
        #[command(flatten)]
        law: LawArg,
    },
    /// Null simulation from a JSON experiment config.
    Simulate {
        config: PathBuf,
        /// Directory for draws.csv, density.csv and summary.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a correlation matrix as CSV.
    Matgen(MatgenArgs),
    /// Closed-form fourth-order moments next to their pairing sums.
    Moments {
        corr4: PathBuf,
        /// Also report Cov(r̂12², r̂34²) at this sample size.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Evaluate a mixture law: distribution function, right tail and density.
    Law(LawEvalArgs),
}

#[derive(Args, Debug)]
struct LawArg {
    /// auto (plug-in spikes), normal, or a file of rho weights.
    #[arg(long, default_value = "auto")]
    law: String,
    /// Largest number of plug-in spikes.
    #[arg(long, default_value_t = PlugIn::default().k_max)]
    k_max: usize,
    /// Smallest plug-in weight kept.
    #[arg(long, default_value_t = PlugIn::default().eps)]
    eps: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MatModel {
    /// Compound symmetry (1-r)I + rJ.
    Cs,
    /// Block model with a spike of order p^r.
    Block,
    Ar1,
    /// A matrix with the given eigenvalues.
    Spectrum,
}

#[derive(Args, Debug)]
struct MatgenArgs {
    #[arg(long, value_enum)]
    model: MatModel,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Eigenvalues, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "spectrum_file")]
    lambdas: Option<Vec<f64>>,
    /// Eigenvalues from a CSV file.
    #[arg(long)]
    spectrum_file: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LawEvalArgs {
    /// Chi-square weights, comma separated; b is implied by normalization.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho: Option<Vec<f64>>,
    /// Compound symmetry limit with r = c/sqrt(p); "inf" for fixed r.
    #[arg(long, conflicts_with = "rho")]
    example1: Option<f64>,
    /// Geometric spikes with ratio 1/2 and this tau.
    #[arg(long, conflicts_with_all = ["rho", "example1"])]
    example3: Option<f64>,
    /// Points at which to evaluate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    at: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<CdfMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_degenerate_data() { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

struct Ctx {
    seed: SeedSpec,
    seed_given: bool,
    method: CdfMethod,
    mc_draws: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ctx = Ctx {
        seed: SeedSpec::from_master(cli.seed.unwrap_or(0)),
        seed_given: cli.seed.is_some(),
        method: cli.method,
        mc_draws: cli.mc_draws,
    };
    let run = || run(&ctx, &cli.command);
    let outcome = match cli.threads {
        Some(t) => with_workers(t, run),
        None => run(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(ctx: &Ctx, cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Test1 { data, variant, law } => {
            if variant.is_two_sample() {
                return Err(Failure::usage(format!("{variant} needs test2")));
            }
            let d = load_dataset(data)?;
            let opts = pvalue_options(ctx, law)?;
            let report = with_column_names(test_one_sample(&d.data, *variant, &opts), &[&d])?;
            print_json(&serde_json::to_value(report)?)
        }
        Command::Test2 {
            data1,
            data2,
            variant,
            law,
        } => {
            if !variant.is_two_sample() {
                return Err(Failure::usage(format!("{variant} needs test1")));
            }
            let (a, b) = (load_dataset(data1)?, load_dataset(data2)?);
            if a.data.p() != b.data.p() {
                return Err(Failure::usage(format!(
                    "{} has {} columns but {} has {}",
                    data1.display(),
                    a.data.p(),
                    data2.display(),
                    b.data.p()
                )));
            }
            let opts = pvalue_options(ctx, law)?;
            let report = with_column_names(test_two_sample(&a.data, &b.data, *variant, &opts), &[&a, &b])?;
            print_json(&serde_json::to_value(report)?)
        }
        Command::Simulate { config, out } => simulate(ctx, config, out),
        Command::Matgen(args) => matgen(ctx, args),
        Command::Moments { corr4, m, format } => moments(corr4, *m, *format),
        Command::Law(args) => law_eval(ctx, args),
    }
}

struct Loaded {
    data: Dataset,
    header: Option<Vec<String>>,
}

fn load_dataset(path: &Path) -> CliResult<Loaded> {
    let t = read_table_path(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let data = Dataset::from_rows(&t.rows, path.display().to_string())
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(Loaded { data, header: t.header })
}

/// Adds the header name of a constant column to the diagnostic.
fn with_column_names<T>(r: hdmean::Result<T>, files: &[&Loaded]) -> CliResult<T> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        if let Some(col) = zero_variance_column(&f.message) {
            let names: Vec<&str> = files
                .iter()
                .filter_map(|l| l.header.as_ref()?.get(col).map(String::as_str))
                .collect();
            if let Some(name) = names.first() {
                f.message = format!("{} ({name:?})", f.message);
            }
        }
        f
    })
}

fn zero_variance_column(message: &str) -> Option<usize> {
    let rest = message.strip_prefix("degenerate data: column ")?;
    let (num, tail) = rest.split_once(' ')?;
    tail.starts_with("has zero sample variance").then_some(())?;
    num.parse::<usize>().ok()?.checked_sub(1)
}

fn pvalue_options(ctx: &Ctx, arg: &LawArg) -> CliResult<PValueOptions> {
    let law = match arg.law.as_str() {
        "auto" => LawSpec::Auto(PlugIn {
            k_max: arg.k_max,
            eps: arg.eps,
        }),
        "normal" => LawSpec::Normal,
        path => {
            let rho = read_spectrum(fs::File::open(path).map_err(|e| Failure::usage(format!("{path}: {e}")))?)
                .map_err(|e| Failure::usage(format!("{path}: {e}")))?;
            LawSpec::Given(MixtureLaw::from_rho(rho.into_vec())?)
        }
    };
    Ok(PValueOptions {
        law,
        method: ctx.method,
        n_draws: ctx.mc_draws,
        seed: ctx.seed,
    })
}

fn print_json(v: &Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn simulate(ctx: &Ctx, config: &Path, out: &Path) -> CliResult<()> {
    let text = fs::read_to_string(config).map_err(|e| Failure::usage(format!("{}: {e}", config.display())))?;
    let mut raw: Value =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", config.display())))?;
    if let Some(obj) = raw.as_object_mut() {
        if ctx.seed_given || !obj.contains_key("seed") {
            obj.insert("seed".into(), serde_json::to_value(ctx.seed)?);
        }
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(raw).map_err(|e| Failure::usage(format!("invalid config: {e}")))?;
    cfg.validate()
        .map_err(|e| Failure::usage(format!("invalid config: {e}")))?;

    let start = Instant::now();
    let summary = run_null_experiment(&cfg)?;
    let runtime = start.elapsed().as_secs_f64();

    fs::create_dir_all(out)?;
    write_rows(
        BufWriter::new(fs::File::create(out.join("draws.csv"))?),
        Some(&[cfg.variant.short_name()]),
        summary.draws.iter().map(|&x| [x]),
    )?;
    write_rows(
        BufWriter::new(fs::File::create(out.join("density.csv"))?),
        Some(&["x", "empirical", "theoretical"]),
        summary.density_grid.iter().map(|d| [d.x, d.empirical, d.theoretical]),
    )?;
    let doc = json!({
        "config": cfg,
        "variant": summary.variant,
        "reps": summary.draws.len(),
        "seed": cfg.seed,
        "law": summary.law,
        "ks": summary.ks_vs_law,
        "mean": summary.mean,
        "sd": summary.sd,
        "trace": summary.trace,
        "runtime_seconds": runtime,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    print_json(&doc)
}

fn require<T: Copy>(v: Option<T>, flag: &str, model: MatModel) -> CliResult<T> {
    v.ok_or_else(|| Failure::usage(format!("--{flag} is required for --model {model:?}").to_lowercase()))
}

fn matgen(ctx: &Ctx, a: &MatgenArgs) -> CliResult<()> {
    let m = match a.model {
        MatModel::Cs => compound_symmetric(require(a.p, "p", a.model)?, require(a.r, "r", a.model)?)?,
        MatModel::Block => block_spiked(require(a.p, "p", a.model)?, require(a.r, "r", a.model)?)?,
        MatModel::Ar1 => ar1(require(a.p, "p", a.model)?, require(a.gamma, "gamma", a.model)?)?,
        MatModel::Spectrum => {
            let spec = match (&a.lambdas, &a.spectrum_file) {
                (Some(l), _) => SpectrumSpec::from_unsorted(l.clone()),
                (None, Some(path)) => read_spectrum(fs::File::open(path)?)?,
                (None, None) => return Err(Failure::usage("--model spectrum needs --lambdas or --spectrum-file")),
            };
            if let Some(p) = a.p {
                if p != spec.len() {
                    return Err(Failure::usage(format!("--p {p} but {} eigenvalues given", spec.len())));
                }
            }
            from_spectrum(&spec, Some(ctx.seed))?
        }
    };
    match &a.out {
        Some(path) => write_matrix(BufWriter::new(fs::File::create(path)?), m.as_matrix())?,
        None => write_matrix(io::stdout().lock(), m.as_matrix())?,
    }
    Ok(())
}

fn moments(path: &Path, m: Option<usize>, format: Format) -> CliResult<()> {
    let r4 = read_corr4(fs::File::open(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for kind in MomentKind::ALL {
        let closed = closed_form_moment(kind, &r4);
        let pairing = isserlis_moment(kind.indices(), r4.as_corr())?;
        rows.push((kind, closed, pairing));
    }
    let cov = m.map(|m| cov_b1_b2(&r4, m)).transpose()?;
    match format {
        Format::Csv => {
            let mut out = io::stdout().lock();
            writeln!(out, "kind,closed_form,isserlis,abs_diff")?;
            for (kind, c, i) in &rows {
                writeln!(out, "{},{c},{i},{}", kind.name(), (c - i).abs())?;
            }
            if let (Some(m), Some(cov)) = (m, cov) {
                writeln!(out, "cov_b1_b2(m={m}),{cov},,")?;
            }
            Ok(())
        }
        Format::Json => {
            let kinds: Vec<Value> = rows
                .iter()
                .map(|(kind, c, i)| {
                    json!({
                        "kind": kind.name(),
                        "indices": kind.indices(),
                        "closed_form": c,
                        "isserlis": i,
                        "abs_diff": (c - i).abs(),
                    })
                })
                .collect();
            let mut doc = json!({ "corr4": r4.off_diagonal(), "moments": kinds });
            if let (Some(m), Some(cov)) = (m, cov) {
                doc["cov_b1_b2"] = json!({ "m": m, "value": cov });
            }
            print_json(&doc)
        }
    }
}

fn law_eval(ctx: &Ctx, a: &LawEvalArgs) -> CliResult<()> {
    let law = match (&a.rho, a.example1, a.example3) {
        (Some(rho), _, _) => MixtureLaw::from_rho(rho.clone())?,
        (None, Some(c), _) => example1_law(c)?,
        (None, None, Some(tau)) => example3_law(tau, 64)?,
        (None, None, None) => MixtureLaw::standard_normal(),
    };
    let cdf = LawCdf::new(&law, ctx.method, ctx.mc_draws, ctx.seed)?;
    let dens = density(&law, &a.at)?;
    let points: Vec<(f64, f64, f64, f64)> =
        a.at.iter()
            .zip(&dens)
            .map(|(&x, &d)| (x, cdf.eval(x), cdf.upper_tail(x), d))
            .collect();
    match a.format {
        Format::Csv => write_rows(
            io::stdout().lock(),
            Some(&["x", "cdf", "upper_tail", "density"]),
            points.iter().map(|&(x, c, u, d)| [x, c, u, d]),
        )
        .map_err(Failure::from),
        Format::Json => {
            let pts: Vec<Value> = points
                .iter()
                .map(|&(x, c, u, d)| json!({ "x": x, "cdf": c, "upper_tail": u, "density": d }))
                .collect();
            print_json(&json!({ "law": law, "method": ctx.method, "points": pts }))
        }
    }
}
