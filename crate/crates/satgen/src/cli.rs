//! Command surface: argument parsing, config-file defaults, seed fan-out
//! and report emission. Every artifact carries an echoed configuration
//! header, and a fixed master seed reproduces every byte.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline;
use crate::error::{Error, Result};
use crate::generator::{self, GenParams, SyntheticRecord};
use crate::hapdata::{self, AlleleMatrix, MatrixFormat};
use crate::metrics;
use crate::privacy;
use crate::report::{Csv, TextReport};
use crate::reverse;
use crate::seed::derive;

#[derive(Parser, Debug)]
#[command(name = "satgen", version, about = "Constraint-based synthetic sequence generator and privacy auditor")]
pub struct Cli {
    /// Master seed; every internal seed derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Output bytes do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key = value` defaults, overridden by flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output format where applicable.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatOpt>,
    /// Write each generated record's formula (DIMACS + cardinality lines).
    #[arg(long, global = true, value_name = "PATH")]
    dump_cnf: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic records from a cohort.
    Gen(GenArgs),
    /// Reconstruct candidate input sets for a witnessed record.
    Reverse(ReverseArgs),
    /// Privacy experiments.
    #[command(subcommand)]
    Audit(AuditCmd),
    /// Accuracy metrics.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Generation timing over a doubling site-count ladder.
    Bench(BenchArgs),
    /// Convert between matrix file formats.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodOpt {
    Genomator,
    Markov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatOpt {
    Hap,
    Vcf,
}

impl From<FormatOpt> for MatrixFormat {
    fn from(f: FormatOpt) -> MatrixFormat {
        match f {
            FormatOpt::Hap => MatrixFormat::Hap,
            FormatOpt::Vcf => MatrixFormat::Vcf,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodOpt::Genomator)]
    method: MethodOpt,
    /// Records to generate.
    #[arg(long)]
    count: Option<usize>,
    /// Cluster size (constraint method).
    #[arg(long)]
    n: Option<usize>,
    /// Stochastic strengthening level.
    #[arg(long)]
    z: Option<f64>,
    /// Number of overlapping clusters to build (1 = one shared cluster).
    #[arg(long)]
    clusters: Option<usize>,
    /// Markov window size.
    #[arg(long)]
    window: Option<usize>,
    /// Minimum Hamming distance each record keeps from earlier outputs.
    #[arg(long)]
    diversity: Option<usize>,
    /// Fresh attempts after an infeasible instance.
    #[arg(long)]
    retries: Option<usize>,
    /// Provenance sidecar path (default: `<output>.prov.txt`).
    #[arg(long)]
    provenance: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReverseArgs {
    /// Cohort the record is audited against.
    #[arg(short, long)]
    input: PathBuf,
    /// File holding the witnessed synthetic record(s).
    #[arg(long)]
    synth: PathBuf,
    /// Which record of the synth file to audit.
    #[arg(long, default_value_t = 0)]
    record_index: usize,
    /// Report path prefix (writes `<prefix>.csv` and `<prefix>.txt`).
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Also evaluate the exact membership posterior for this sample id.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Subcommand, Debug)]
enum AuditCmd {
    /// Attribute-inference distances over a split cohort.
    Attr(AttrArgs),
    /// Private vs fictitious k-tuple revelation.
    Ktuple(KtupleArgs),
    /// Exposure probability over repeated generate-and-invert runs.
    Exposure(ExposureArgs),
    /// Exact membership posterior on a desk-scale instance.
    Posterior(PosteriorArgs),
}

#[derive(Args, Debug)]
struct AttrArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodOpt::Genomator)]
    method: MethodOpt,
    /// Records per half (default: the half's size).
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    retries: Option<usize>,
}

#[derive(Args, Debug)]
struct KtupleArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Synthetic dataset file(s).
    #[arg(long, required = true, num_args = 1..)]
    synth: Vec<PathBuf>,
    /// Tuple order.
    #[arg(short, long)]
    k: Option<usize>,
    /// Tuples per class.
    #[arg(long)]
    count: Option<usize>,
    /// Score occurrence per dataset instead of pooled.
    #[arg(long)]
    per_dataset: bool,
}

#[derive(Args, Debug)]
struct ExposureArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Generate-and-invert repetitions.
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    retries: Option<usize>,
}

#[derive(Args, Debug)]
struct PosteriorArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long, default_value_t = 0)]
    record_index: usize,
    /// Target sample id.
    #[arg(long)]
    target: String,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum EvalCmd {
    /// LD reproduction error between a reference and a synthetic matrix.
    Ld(LdArgs),
    /// Principal components of a matrix's dosage encoding.
    Pca(PcaArgs),
    /// Sliced Wasserstein distance between two matrices.
    Wasserstein(WassersteinArgs),
    /// Per-site allele frequencies.
    Freq(FreqArgs),
}

#[derive(Args, Debug)]
struct LdArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Sliding-window mode with this width (default: binned by distance).
    #[arg(long)]
    window: Option<usize>,
    /// Also write every compared pair (site_a, site_b, r2 values).
    #[arg(long)]
    pairs_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PcaArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(short, long)]
    k: Option<usize>,
    /// Project a second matrix onto the fitted components.
    #[arg(long)]
    project: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WassersteinArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    projections: Option<usize>,
}

#[derive(Args, Debug)]
struct FreqArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Restrict to one site id.
    #[arg(long)]
    site: Option<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Starting site count of the doubling ladder.
    #[arg(long)]
    sites: Option<usize>,
    /// Ladder steps.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Samples in the random cohort (default: cluster size).
    #[arg(long)]
    samples: Option<usize>,
    /// Time against prefixes of a real file instead of random data.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Source format (default: by extension).
    #[arg(long, value_enum)]
    from: Option<FormatOpt>,
}

/// Config-file defaults: numeric keys matching the long flag names.
struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Settings> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Error::InvalidParams(format!(
                        "config line {}: expected `key = value`",
                        i + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Settings { map })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParams(format!("config key `{key}`: bad value `{raw}`"))
            }),
        }
    }

    fn resolve<T: std::str::FromStr + Copy>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T> {
        Ok(flag.or(self.get(key)?).unwrap_or(default))
    }
}

/// Entry point used by both `main` and the test harness. Exit codes:
/// 0 success, 1 domain error, 2 usage error.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Error::InvalidParams(msg)) => {
            eprintln!("satgen: usage error: {msg}");
            2
        }
        Err(err) => {
            eprintln!("satgen: error: {err}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.resolve(cli.seed, "seed", 0u64)?;

    match &cli.command {
        Command::Gen(args) => cmd_gen(&cli, &settings, seed, args),
        Command::Reverse(args) => cmd_reverse(&settings, seed, args),
        Command::Audit(AuditCmd::Attr(args)) => cmd_audit_attr(&settings, seed, args),
        Command::Audit(AuditCmd::Ktuple(args)) => cmd_audit_ktuple(&settings, seed, args),
        Command::Audit(AuditCmd::Exposure(args)) => cmd_audit_exposure(&settings, seed, args),
        Command::Audit(AuditCmd::Posterior(args)) => cmd_audit_posterior(&settings, seed, args),
        Command::Eval(EvalCmd::Ld(args)) => cmd_eval_ld(seed, args),
        Command::Eval(EvalCmd::Pca(args)) => cmd_eval_pca(&settings, seed, args),
        Command::Eval(EvalCmd::Wasserstein(args)) => cmd_eval_wasserstein(&settings, seed, args),
        Command::Eval(EvalCmd::Freq(args)) => cmd_eval_freq(args),
        Command::Bench(args) => cmd_bench(&settings, seed, args),
        Command::Convert(args) => cmd_convert(&cli, args),
    }
}

fn sniff_format(path: &Path) -> MatrixFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("vcf") => MatrixFormat::Vcf,
        _ => MatrixFormat::Hap,
    }
}

fn load_matrix(path: &Path, format: Option<MatrixFormat>) -> Result<AlleleMatrix> {
    let text = std::fs::read_to_string(path)?;
    hapdata::parse_matrix(&text, format.unwrap_or_else(|| sniff_format(path)))
}

fn output_format(cli_format: Option<FormatOpt>, path: &Path) -> MatrixFormat {
    cli_format.map(MatrixFormat::from).unwrap_or_else(|| sniff_format(path))
}

fn records_matrix_for(
    source: &AlleleMatrix,
    records: &[SyntheticRecord],
    format: MatrixFormat,
) -> Result<AlleleMatrix> {
    match format {
        MatrixFormat::Hap => generator::records_to_matrix(source, records, "synth_"),
        MatrixFormat::Vcf => {
            if records.len() % 2 != 0 {
                return Err(Error::Unwritable {
                    format: "VCF".into(),
                    reason: "phased output needs an even record count".into(),
                });
            }
            let ids: Vec<String> = (0..records.len())
                .map(|i| format!("synth{}_{}", i / 2, i % 2))
                .collect();
            let rows: Vec<Vec<&str>> = (0..source.sites())
                .map(|j| records.iter().map(|r| source.token(r.tokens[j])).collect())
                .collect();
            AlleleMatrix::from_rows(source.site_ids().to_vec(), ids, &rows)
        }
    }
}

fn cmd_gen(cli: &Cli, settings: &Settings, seed: u64, args: &GenArgs) -> Result<()> {
    let count = settings.resolve(args.count, "count", 1usize)?;
    if count == 0 {
        return Err(Error::InvalidParams("--count must be at least 1".into()));
    }
    let cohort = load_matrix(&args.input, None)?;
    let out_format = output_format(cli.format, &args.output);

    let (records, method_desc) = match args.method {
        MethodOpt::Genomator => {
            let n = settings.resolve(args.n, "n", 10usize)?;
            let z = settings.resolve(args.z, "z", 0.0f64)?;
            let clusters = settings.resolve(args.clusters, "clusters", cohort.samples())?;
            let diversity = args.diversity.or(settings.get("diversity")?);
            let retries = settings.resolve(args.retries, "retries", 0usize)?;
            let params = GenParams {
                n,
                z_max: z,
                seed: derive(seed, "generator", 0),
                diversity_min_distance: diversity,
                retries,
                ..GenParams::default()
            };
            params.validate(cohort.sites())?;
            if n > cohort.samples() {
                return Err(Error::InvalidParams(format!(
                    "--n {n} exceeds the cohort's {} samples",
                    cohort.samples()
                )));
            }
            let plan =
                hapdata::build_clusters(&cohort, n, clusters, derive(seed, "clusters", 0))?;
            let records = generator::generate_cohort(&cohort, &plan, &params, count)?;
            if let Some(dump) = &cli.dump_cnf {
                dump_formulas(dump, &cohort, &plan, &params, &records)?;
            }
            (records, format!("genomator n={n} z={z} clusters={clusters}"))
        }
        MethodOpt::Markov => {
            if cli.dump_cnf.is_some() {
                return Err(Error::InvalidParams(
                    "--dump-cnf applies to the constraint method only".into(),
                ));
            }
            let window = settings.resolve(args.window, "window", 10usize)?;
            let model = baseline::markov_fit(&cohort, window)?;
            let records = baseline::markov_generate(&model, count, derive(seed, "markov", 0))?;
            (records, format!("markov window={window}"))
        }
    };

    let out_matrix = records_matrix_for(&cohort, &records, out_format)?;
    std::fs::write(&args.output, hapdata::write_matrix(&out_matrix, out_format)?)?;

    let mut prov = TextReport::new("gen");
    prov.config("seed", seed)
        .config("input", args.input.display())
        .config("output", args.output.display())
        .config("method", &method_desc)
        .config("count", count);
    let mut body = prov.render();
    for (i, r) in records.iter().enumerate() {
        body.push_str(&format!(
            "record={} cluster={} seed={} {}\n",
            i,
            r.provenance
                .cluster
                .map_or("-".to_string(), |c| c.to_string()),
            r.provenance.seed,
            r.provenance.params
        ));
    }
    let prov_path = args
        .provenance
        .clone()
        .unwrap_or_else(|| sibling(&args.output, ".prov.txt"));
    std::fs::write(prov_path, body)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Rebuild each record's formula from its recorded provenance and export.
fn dump_formulas(
    base: &Path,
    cohort: &AlleleMatrix,
    plan: &hapdata::ClusterPlan,
    params: &GenParams,
    records: &[SyntheticRecord],
) -> Result<()> {
    for (i, record) in records.iter().enumerate() {
        let cluster = record
            .provenance
            .cluster
            .expect("constraint records carry a cluster id");
        let (table, mut formula) = generator::build_formula(
            cohort,
            plan.cluster(cluster),
            params.z_max,
            derive(record.provenance.seed, "pair-z", 0),
        );
        if let Some(d) = params.diversity_min_distance {
            let others: Vec<&[crate::hapdata::TokenId]> =
                records[..i].iter().map(|r| r.tokens.as_slice()).collect();
            generator::add_diversity_constraints(&mut formula, &table, &others, d)?;
        }
        let path = if records.len() == 1 {
            base.to_path_buf()
        } else {
            sibling(base, &format!(".{i}"))
        };
        std::fs::write(path, satcore::export_dimacs(&formula))?;
    }
    Ok(())
}

fn cmd_reverse(settings: &Settings, seed: u64, args: &ReverseArgs) -> Result<()> {
    let cohort = load_matrix(&args.input, None)?;
    let synth_matrix = load_matrix(&args.synth, None)?;
    if args.record_index >= synth_matrix.samples() {
        return Err(Error::InvalidParams(format!(
            "--record-index {} out of range ({} records)",
            args.record_index,
            synth_matrix.samples()
        )));
    }
    let n = settings.resolve(args.n, "n", 10usize)?;
    let z = settings.resolve(args.z, "z", 0.0f64)?;
    let trials = settings.resolve(args.trials, "trials", 500usize)?;
    let params = reverse::ReverseParams {
        n,
        z_max: z,
        seed: derive(seed, "reverse", 0),
        ..reverse::ReverseParams::default()
    };
    let tokens = reverse::map_record(&cohort, &synth_matrix, args.record_index)?;
    let problem = reverse::build_reverse_constraints(&tokens, &cohort, &params)?;
    let sampling = reverse::sample_candidate_sets(&problem, trials, params.seed)?;
    let report = reverse::exposure_report(&sampling, cohort.samples());

    let mut csv = Csv::new(&["sample_id", "frequency", "wilson90_lo", "wilson90_hi", "exposed"]);
    let successes = sampling.sets.len();
    for (i, id) in cohort.sample_ids().iter().enumerate() {
        let appearances = (report.frequencies[i] * successes as f64).round() as usize;
        let (lo, hi) = reverse::wilson90(appearances, successes);
        csv.row(&[
            id.clone(),
            report.frequencies[i].to_string(),
            lo.to_string(),
            hi.to_string(),
            report.exposed.contains(&i).to_string(),
        ]);
    }
    csv.comment(&format!(
        "command = reverse; seed = {seed}; n = {n}; z = {z}; trials = {trials}; record_index = {}",
        args.record_index
    ));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    let mut text = TextReport::new("reverse");
    text.config("seed", seed)
        .config("input", args.input.display())
        .config("synth", args.synth.display())
        .config("record_index", args.record_index)
        .config("n", n)
        .config("z", z)
        .config("trials", trials);
    text.result("successful_trials", successes)
        .result("infeasible_trials", report.infeasible_trials)
        .result(
            "exposed",
            if report.exposed.is_empty() {
                "none".to_string()
            } else {
                report
                    .exposed
                    .iter()
                    .map(|&i| cohort.sample_ids()[i].clone())
                    .collect::<Vec<_>>()
                    .join(";")
            },
        )
        .result("exposed_count", report.exposed.len());
    if let Some(target) = &args.target {
        let target_idx = sample_index(&cohort, target)?;
        let posterior = reverse::theorem1_posterior(&tokens, &cohort, target_idx, &params)?;
        text.result("posterior_target", target)
            .result("posterior_zeta", posterior.zeta)
            .result("posterior_r", posterior.r)
            .result("posterior", posterior.posterior);
    }
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn sample_index(matrix: &AlleleMatrix, id: &str) -> Result<usize> {
    matrix
        .sample_ids()
        .iter()
        .position(|s| s == id)
        .ok_or_else(|| Error::InvalidParams(format!("no sample named `{id}`")))
}

/// Generate a synthetic set from a cohort with either method.
fn synthesize(
    cohort: &AlleleMatrix,
    method: MethodOpt,
    n: usize,
    z: f64,
    clusters: usize,
    window: usize,
    retries: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<SyntheticRecord>> {
    match method {
        MethodOpt::Genomator => {
            let params = GenParams {
                n,
                z_max: z,
                seed: derive(seed, "generator", 0),
                retries,
                ..GenParams::default()
            };
            let plan = hapdata::build_clusters(cohort, n, clusters, derive(seed, "clusters", 0))?;
            generator::generate_cohort(cohort, &plan, &params, count)
        }
        MethodOpt::Markov => {
            let model = baseline::markov_fit(cohort, window)?;
            baseline::markov_generate(&model, count, derive(seed, "markov", 0))
        }
    }
}

fn cmd_audit_attr(settings: &Settings, seed: u64, args: &AttrArgs) -> Result<()> {
    let cohort = load_matrix(&args.input, None)?;
    let n = settings.resolve(args.n, "n", 10usize)?;
    let z = settings.resolve(args.z, "z", 0.0f64)?;
    let window = settings.resolve(args.window, "window", 10usize)?;
    let retries = settings.resolve(args.retries, "retries", 0usize)?;

    let (first, second) = hapdata::split_cohort(&cohort, derive(seed, "attr-split", 0))?;
    let count = settings.resolve(args.count, "count", first.samples())?;
    let clusters = settings.resolve(args.clusters, "clusters", first.samples().max(1))?;
    let n_eff = n.min(first.samples());

    let synth_first = generator::records_to_matrix(
        &first,
        &synthesize(
            &first,
            args.method,
            n_eff,
            z,
            clusters,
            window,
            retries,
            count,
            derive(seed, "attr-first", 0),
        )?,
        "synth_",
    )?;
    let synth_second = generator::records_to_matrix(
        &second,
        &synthesize(
            &second,
            args.method,
            n_eff.min(second.samples()),
            z,
            clusters,
            window,
            retries,
            count,
            derive(seed, "attr-second", 1),
        )?,
        "synth_",
    )?;

    let in_first: Vec<bool> = cohort
        .sample_ids()
        .iter()
        .map(|id| first.sample_ids().contains(id))
        .collect();
    let desc = match args.method {
        MethodOpt::Genomator => format!("genomator n={n_eff} z={z}"),
        MethodOpt::Markov => format!("markov window={window}"),
    };
    let report =
        privacy::attr_inference_distances(&cohort, &in_first, &synth_first, &synth_second, desc.clone())?;

    let mut csv = Csv::new(&[
        "method",
        "n",
        "z",
        "window",
        "in_distance",
        "out_minus_in",
        "frontier_distance",
    ]);
    let (m_n, m_z, m_w) = match args.method {
        MethodOpt::Genomator => (n_eff.to_string(), z.to_string(), String::new()),
        MethodOpt::Markov => (String::new(), String::new(), window.to_string()),
    };
    csv.row(&[
        format!("{:?}", args.method).to_lowercase(),
        m_n,
        m_z,
        m_w,
        report.in_distance.to_string(),
        report.difference.to_string(),
        report.frontier_distance().to_string(),
    ]);
    csv.comment(&format!("command = audit attr; seed = {seed}; count = {count}"));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    let mut text = TextReport::new("audit attr");
    text.config("seed", seed)
        .config("input", args.input.display())
        .config("method", desc)
        .config("count", count);
    text.result("in_distance", report.in_distance)
        .result("out_distance", report.out_distance)
        .result("difference", report.difference)
        .result("frontier_distance", report.frontier_distance())
        .result("targets", report.targets);
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn cmd_audit_ktuple(settings: &Settings, seed: u64, args: &KtupleArgs) -> Result<()> {
    let cohort = load_matrix(&args.input, None)?;
    let k = settings.resolve(args.k, "k", 4usize)?;
    let count = settings.resolve(args.count, "count", 1000usize)?;
    let corpus: Vec<AlleleMatrix> = args
        .synth
        .iter()
        .map(|p| load_matrix(p, None))
        .collect::<Result<_>>()?;

    let mut tuples =
        privacy::sample_ktuples(&cohort, k, privacy::KTupleClass::Private, count, derive(seed, "ktuple-private", 0))?;
    let fict = privacy::sample_ktuples(
        &cohort,
        k,
        privacy::KTupleClass::Fictitious,
        count,
        derive(seed, "ktuple-fictitious", 1),
    )?;
    let complete = tuples.complete && fict.complete;
    tuples.tuples.extend(fict.tuples);

    let mode = if args.per_dataset {
        privacy::OccurrenceMode::PerDataset
    } else {
        privacy::OccurrenceMode::Pooled
    };
    let report = privacy::revelation_rates(&cohort, &tuples.tuples, &corpus, mode)?;

    let mut csv = Csv::new(&[
        "k",
        "private_rate",
        "fictitious_rate",
        "private_sampled",
        "fictitious_sampled",
        "corpus_records",
        "complete",
    ]);
    csv.row(&[
        k.to_string(),
        report.private_rate.to_string(),
        report.fictitious_rate.to_string(),
        report.private_sampled.to_string(),
        report.fictitious_sampled.to_string(),
        report.corpus_records.to_string(),
        complete.to_string(),
    ]);
    csv.comment(&format!("command = audit ktuple; seed = {seed}; count = {count}"));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    let mut text = TextReport::new("audit ktuple");
    text.config("seed", seed)
        .config("input", args.input.display())
        .config("k", k)
        .config("count", count)
        .config("mode", if args.per_dataset { "per-dataset" } else { "pooled" });
    text.result("private_rate", report.private_rate)
        .result("fictitious_rate", report.fictitious_rate)
        .result("private_sampled", report.private_sampled)
        .result("fictitious_sampled", report.fictitious_sampled)
        .result("sampling_complete", complete);
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn cmd_audit_exposure(settings: &Settings, seed: u64, args: &ExposureArgs) -> Result<()> {
    let cohort = load_matrix(&args.input, None)?;
    let n = settings.resolve(args.n, "n", 10usize)?;
    let z = settings.resolve(args.z, "z", 0.0f64)?;
    let trials = settings.resolve(args.trials, "trials", 500usize)?;
    let repetitions = settings.resolve(args.repetitions, "repetitions", 20usize)?;
    let retries = settings.resolve(args.retries, "retries", 0usize)?;
    if repetitions == 0 {
        return Err(Error::InvalidParams("--repetitions must be at least 1".into()));
    }

    let mut csv = Csv::new(&["repetition", "exposed_count", "exposed_samples", "infeasible_trials"]);
    let mut events = 0usize;
    for rep in 0..repetitions {
        let rep_seed = derive(seed, "exposure-rep", rep as u64);
        let records = synthesize(
            &cohort,
            MethodOpt::Genomator,
            n,
            z,
            cohort.samples(),
            0,
            retries,
            1,
            rep_seed,
        )?;
        let params = reverse::ReverseParams {
            n,
            z_max: z,
            seed: derive(rep_seed, "reverse", 0),
            ..reverse::ReverseParams::default()
        };
        let problem = reverse::build_reverse_constraints(&records[0].tokens, &cohort, &params)?;
        let sampling = reverse::sample_candidate_sets(&problem, trials, params.seed)?;
        let report = reverse::exposure_report(&sampling, cohort.samples());
        if !report.exposed.is_empty() {
            events += 1;
        }
        csv.row(&[
            rep.to_string(),
            report.exposed.len().to_string(),
            report
                .exposed
                .iter()
                .map(|&i| cohort.sample_ids()[i].clone())
                .collect::<Vec<_>>()
                .join(";"),
            report.infeasible_trials.to_string(),
        ]);
    }
    let (lo, hi) = reverse::wilson90(events, repetitions);
    csv.comment(&format!(
        "command = audit exposure; seed = {seed}; n = {n}; z = {z}; trials = {trials}; repetitions = {repetitions}"
    ));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    let mut text = TextReport::new("audit exposure");
    text.config("seed", seed)
        .config("n", n)
        .config("z", z)
        .config("trials", trials)
        .config("repetitions", repetitions);
    text.result("exposure_events", events)
        .result("exposure_rate", events as f64 / repetitions as f64)
        .result("wilson90_lo", lo)
        .result("wilson90_hi", hi);
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn cmd_audit_posterior(settings: &Settings, seed: u64, args: &PosteriorArgs) -> Result<()> {
    let cohort = load_matrix(&args.input, None)?;
    let synth_matrix = load_matrix(&args.synth, None)?;
    let n = settings.resolve(args.n, "n", 3usize)?;
    let target = sample_index(&cohort, &args.target)?;
    let params = reverse::ReverseParams {
        n,
        z_max: 0.0,
        seed: derive(seed, "posterior", 0),
        ..reverse::ReverseParams::default()
    };
    let tokens = reverse::map_record(&cohort, &synth_matrix, args.record_index)?;
    let report = reverse::theorem1_posterior(&tokens, &cohort, target, &params)?;

    let mut csv = Csv::new(&["members", "model_count", "contains_target"]);
    for c in &report.combinations {
        csv.row(&[
            c.members
                .iter()
                .map(|&i| cohort.sample_ids()[i].clone())
                .collect::<Vec<_>>()
                .join(";"),
            c.model_count.to_string(),
            c.contains_target.to_string(),
        ]);
    }
    csv.comment(&format!(
        "command = audit posterior; seed = {seed}; n = {n}; target = {}",
        args.target
    ));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    let mut text = TextReport::new("audit posterior");
    text.config("seed", seed)
        .config("n", n)
        .config("target", &args.target)
        .config("record_index", args.record_index);
    text.result("compatible_with_target", report.n_in)
        .result("compatible_without_target", report.n_out)
        .result("zeta", report.zeta)
        .result("r", report.r)
        .result("posterior", report.posterior)
        .result("target_never_present", report.target_never_present);
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn cmd_eval_ld(seed: u64, args: &LdArgs) -> Result<()> {
    let real = load_matrix(&args.real, None)?;
    let synth = load_matrix(&args.synth, None)?;
    let mode = match args.window {
        Some(w) => metrics::LdMode::Windowed(w),
        None => metrics::LdMode::Binned,
    };
    let report = metrics::ld_square_error(&real, &synth, mode)?;

    let group_col = if args.window.is_some() { "window_start" } else { "distance" };
    let mut csv = Csv::new(&[group_col, "mean_square_error", "pairs"]);
    for &(g, e, c) in &report.groups {
        csv.row(&[g.to_string(), e.to_string(), c.to_string()]);
    }
    csv.comment(&format!(
        "command = eval ld; seed = {seed}; mode = {:?}; overall = {}; reference_mean_ld = {}; percent_of_reference = {}",
        report.mode, report.overall, report.reference_mean_ld, report.percent_of_reference
    ));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    if let Some(pairs_path) = &args.pairs_out {
        let mut pairs = Csv::new(&["site_a", "site_b", "r2_real", "r2_synth", "square_error"]);
        for a in 0..real.sites() {
            for b in (a + 1)..real.sites() {
                if let (Some(rr), Some(rs)) =
                    (metrics::ld_r2(&real, a, b), metrics::ld_r2(&synth, a, b))
                {
                    pairs.row(&[
                        real.site_ids()[a].clone(),
                        real.site_ids()[b].clone(),
                        rr.to_string(),
                        rs.to_string(),
                        ((rs - rr) * (rs - rr)).to_string(),
                    ]);
                }
            }
        }
        std::fs::write(pairs_path, pairs.render())?;
    }

    let mut text = TextReport::new("eval ld");
    text.config("seed", seed)
        .config("real", args.real.display())
        .config("synth", args.synth.display())
        .config("mode", format!("{:?}", report.mode));
    text.result("overall_square_error", report.overall)
        .result("reference_mean_ld", report.reference_mean_ld)
        .result("percent_of_reference", report.percent_of_reference)
        .result("compared_pairs", report.compared_pairs)
        .result("skipped_pairs", report.skipped_pairs);
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn cmd_eval_pca(settings: &Settings, seed: u64, args: &PcaArgs) -> Result<()> {
    let matrix = load_matrix(&args.input, None)?;
    let k = settings.resolve(args.k, "k", 2usize)?;
    let rows = metrics::dosage_rows(&matrix);
    let model = metrics::pca_fit(&rows, k)?;
    let coords = metrics::pca_project(&model, &rows)?;

    let mut columns: Vec<String> = vec!["sample_id".into()];
    columns.extend((1..=k).map(|i| format!("pc{i}")));
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&column_refs);
    for (i, id) in matrix.sample_ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(coords[i].iter().map(|x| x.to_string()));
        csv.row(&row);
    }
    csv.comment(&format!(
        "command = eval pca; seed = {seed}; k = {k}; explained_variances = {:?}; total_variance = {}",
        model.explained_variances, model.total_variance
    ));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;

    if let Some(project) = &args.project {
        let other = load_matrix(project, None)?;
        if other.sites() != matrix.sites() {
            return Err(Error::DimensionMismatch(
                "projection input must match the fitted sites".into(),
            ));
        }
        let other_rows = metrics::dosage_rows(&other);
        let other_coords = metrics::pca_project(&model, &other_rows)?;
        let mut proj = Csv::new(&column_refs);
        for (i, id) in other.sample_ids().iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(other_coords[i].iter().map(|x| x.to_string()));
            proj.row(&row);
        }
        std::fs::write(sibling(&args.output, ".projected.csv"), proj.render())?;
    }
    Ok(())
}

fn cmd_eval_wasserstein(settings: &Settings, seed: u64, args: &WassersteinArgs) -> Result<()> {
    let real = load_matrix(&args.real, None)?;
    let synth = load_matrix(&args.synth, None)?;
    if real.sites() != synth.sites() {
        return Err(Error::DimensionMismatch(
            "matrices must share their site set".into(),
        ));
    }
    let projections = settings.resolve(args.projections, "projections", 50usize)?;
    let report = metrics::sliced_wasserstein(
        &metrics::dosage_rows(&real),
        &metrics::dosage_rows(&synth),
        projections,
        derive(seed, "wasserstein", 0),
    )?;

    let mut text = TextReport::new("eval wasserstein");
    text.config("seed", seed)
        .config("real", args.real.display())
        .config("synth", args.synth.display())
        .config("projections", projections);
    text.result("distance", report.distance)
        .result("percent_error", report.percent_error);
    std::fs::write(sibling(&args.output, ".txt"), text.render())?;
    Ok(())
}

fn cmd_eval_freq(args: &FreqArgs) -> Result<()> {
    let matrix = load_matrix(&args.input, None)?;
    let mut csv = Csv::new(&["site_id", "token", "frequency"]);
    for j in 0..matrix.sites() {
        let site_id = &matrix.site_ids()[j];
        if let Some(only) = &args.site {
            if site_id != only {
                continue;
            }
        }
        for &tok in matrix.site_decl(j) {
            let f = metrics::allele_frequency(&matrix, j, matrix.token(tok))?;
            csv.row(&[site_id.clone(), matrix.token(tok).to_string(), f.to_string()]);
        }
    }
    csv.comment(&format!("command = eval freq; input = {}", args.input.display()));
    std::fs::write(sibling(&args.output, ".csv"), csv.render())?;
    Ok(())
}

fn cmd_bench(settings: &Settings, seed: u64, args: &BenchArgs) -> Result<()> {
    let start_sites = settings.resolve(args.sites, "sites", 1000usize)?;
    let steps = settings.resolve(args.steps, "steps", 4usize)?;
    let n = settings.resolve(args.n, "n", 10usize)?;
    let samples = settings.resolve(args.samples, "samples", n)?;
    if start_sites == 0 || steps == 0 || n == 0 || samples < n {
        return Err(Error::InvalidParams(
            "bench needs sites, steps, n >= 1 and samples >= n".into(),
        ));
    }

    let mut loaded: Option<AlleleMatrix> = None;
    let mut load_seconds = 0.0f64;
    if let Some(path) = &args.input {
        let t0 = Instant::now();
        loaded = Some(load_matrix(path, None)?);
        load_seconds = t0.elapsed().as_secs_f64();
    }

    let mut csv = Csv::new(&["sites", "seconds", "est_peak_bytes", "status"]);
    for step in 0..steps {
        let sites = start_sites << step;
        let matrix = match &loaded {
            Some(m) => {
                if sites > m.sites() {
                    csv.row(&[
                        sites.to_string(),
                        String::new(),
                        String::new(),
                        "skipped: input too short".into(),
                    ]);
                    continue;
                }
                m.select_sites(sites)?
            }
            None => random_binary_matrix(sites, samples, derive(seed, "bench-data", step as u64)),
        };
        let members: Vec<usize> = (0..n.min(matrix.samples())).collect();

        let t0 = Instant::now();
        let (table, formula) = generator::build_formula(
            &matrix,
            &members,
            0.0,
            derive(seed, "bench-z", step as u64),
        );
        let outcome = satcore::solve_seeded(&formula, derive(seed, "bench-solve", step as u64));
        let (status, est_bytes) = match outcome {
            satcore::SolveOutcome::Sat(a) => {
                let record = generator::decode(&a, &table, &matrix);
                let est = estimate_bytes(&table, &formula, &matrix) + record.len() * 4;
                ("ok".to_string(), est)
            }
            satcore::SolveOutcome::Unsat => ("infeasible".to_string(), 0),
            satcore::SolveOutcome::Timeout => ("timeout".to_string(), 0),
        };
        let seconds = t0.elapsed().as_secs_f64();
        csv.row(&[
            sites.to_string(),
            seconds.to_string(),
            est_bytes.to_string(),
            status,
        ]);
    }
    if args.input.is_some() {
        csv.comment(&format!("load_seconds = {load_seconds} (excluded from rows)"));
    }
    csv.comment(&format!(
        "command = bench; seed = {seed}; start_sites = {start_sites}; steps = {steps}; n = {n}; samples = {samples}"
    ));
    std::fs::write(&args.output, csv.render())?;
    Ok(())
}

fn estimate_bytes(
    table: &crate::signatures::SignatureTable,
    formula: &satcore::Formula,
    matrix: &AlleleMatrix,
) -> usize {
    let sig_bytes: usize = table
        .signatures()
        .iter()
        .map(|s| s.blocks().len() * 8 + 16)
        .sum();
    let clause_bytes: usize = formula
        .clauses()
        .iter()
        .map(|c| c.len() * 4 + 24)
        .sum();
    let matrix_bytes = matrix.sites() * matrix.samples() * 4;
    let query_bytes = matrix.sites() * matrix.vocab_len() * 4;
    sig_bytes + clause_bytes + matrix_bytes + query_bytes
}

pub(crate) fn random_binary_matrix(sites: usize, samples: usize, seed: u64) -> AlleleMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<&str>> = (0..sites)
        .map(|_| {
            (0..samples)
                .map(|_| if rng.gen::<bool>() { "1" } else { "0" })
                .collect()
        })
        .collect();
    AlleleMatrix::from_rows(
        (0..sites).map(|j| format!("s{j}")).collect(),
        (0..samples).map(|i| format!("h{i}")).collect(),
        &rows,
    )
    .expect("random matrix construction")
}

fn cmd_convert(cli: &Cli, args: &ConvertArgs) -> Result<()> {
    let from = args
        .from
        .map(MatrixFormat::from)
        .unwrap_or_else(|| sniff_format(&args.input));
    let matrix = load_matrix(&args.input, Some(from))?;
    let to = output_format(cli.format, &args.output);
    std::fs::write(&args.output, hapdata::write_matrix(&matrix, to)?)?;
    Ok(())
}
