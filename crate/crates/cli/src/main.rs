use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use icfkm_core::data::write_libsvm;
use icfkm_core::eval::median;
use icfkm_core::icf::factorize;
use icfkm_core::kernel::DataKernel;
use icfkm_core::report::{run_algorithm, BenchDataset, Summary};
use icfkm_core::{
    accuracy, gen_synthetic, read_libsvm, run_benchmark, Algorithm, BenchConfig, Dataset, Guard, KernelSpec,
    LloydParams, SyntheticKind, DEFAULT_EPSILON,
};

#[derive(Parser, Debug)]
#[command(name = "icfkm", version, about = "Kernel k-means through incomplete Cholesky factorization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a two-cluster planar dataset in LIBSVM format.
    Synth {
        /// ring, parabolic or zigzag.
        kind: SyntheticKind,
        per_cluster: usize,
        noise: f64,
        seed: u64,
        out: PathBuf,
    },
    /// Factorize the Gram matrix and write the factor dump.
    Factorize(FactorizeArgs),
    /// Cluster a dataset and write one cluster id per line.
    Cluster(ClusterArgs),
    /// Run the benchmark grid and write the CSV report.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// LIBSVM file, or `synth:<kind>:<per_cluster>:<noise>:<seed>`.
    input: String,
    /// Number of features; inferred from the largest index when omitted.
    #[arg(long)]
    dim: Option<usize>,
    /// Rescale every feature to zero mean and unit variance.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args, Debug)]
struct FactorizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Kernel parameter in exp(-sigma |x - y|^2).
    #[arg(long)]
    sigma: f64,
    /// Maximum rank of the factor.
    #[arg(long)]
    subset_size: usize,
    /// Stop once the residual trace is at most this.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 50)]
    subset_size: usize,
    /// Number of clusters; defaults to the number of labels in the input.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, default_value = "icf")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Permit dense n x n Gram matrices beyond 5000 points.
    #[arg(long)]
    allow_full_gram: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// LIBSVM files or synthetic specs; all share the kernel and cluster count.
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    sigma: f64,
    /// Comma-separated subset sizes.
    #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
    subset_size: Vec<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "icf,nystrom,rff,approx")]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// First seed; runs use `seed .. seed + seeds`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    allow_full_gram: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            kind,
            per_cluster,
            noise,
            seed,
            out,
        } => cmd_synth(kind, per_cluster, noise, seed, &out),
        Command::Factorize(args) => cmd_factorize(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| anyhow!("cannot write {}: {}", path.display(), e.error))?;
    Ok(())
}

fn load(input: &str, dim: Option<usize>, standardize: bool) -> Result<Dataset> {
    let data = if let Some(rest) = input.strip_prefix("synth:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [kind, per_cluster, noise, seed] = parts[..] else {
            bail!("synthetic input must be synth:<kind>:<per_cluster>:<noise>:<seed>, got {input:?}");
        };
        gen_synthetic(
            kind.parse()?,
            per_cluster.parse().context("per_cluster")?,
            noise.parse().context("noise")?,
            seed.parse().context("seed")?,
        )?
    } else {
        read_libsvm(input, dim).with_context(|| format!("reading {input}"))?
    };
    Ok(if standardize { data.standardized() } else { data })
}

fn kernel(sigma: f64) -> Result<KernelSpec> {
    Ok(KernelSpec::gaussian(sigma)?)
}

fn guard(allow_full_gram: bool) -> Guard {
    if allow_full_gram {
        Guard::unlimited()
    } else {
        Guard::default()
    }
}

fn cluster_count(explicit: Option<usize>, data: &Dataset) -> Result<usize> {
    match explicit.or_else(|| data.num_classes()) {
        Some(0) => bail!("--clusters must be at least 1"),
        Some(k) => Ok(k),
        None => bail!("{} has no labels; pass --clusters", data.name()),
    }
}

fn lloyd_params(max_iter: usize) -> Result<LloydParams> {
    if max_iter == 0 {
        bail!("--max-iter must be at least 1");
    }
    Ok(LloydParams {
        max_iter,
        ..LloydParams::default()
    })
}

fn cmd_synth(kind: SyntheticKind, per_cluster: usize, noise: f64, seed: u64, out: &Path) -> Result<()> {
    let data = gen_synthetic(kind, per_cluster, noise, seed)?;
    write_atomic(out, |w| Ok(write_libsvm(&data, w)?))?;
    println!("wrote {} points ({}) to {}", data.len(), kind.as_str(), out.display());
    Ok(())
}

fn cmd_factorize(args: &FactorizeArgs) -> Result<()> {
    let data = load(&args.input.input, args.input.dim, args.input.standardize)?;
    let spec = kernel(args.sigma)?;
    let source = DataKernel::new(spec, &data);
    let factor = factorize(&source, args.subset_size, args.epsilon)?;
    write_atomic(&args.out, |w| Ok(factor.write_dump(w)?))?;
    let n = data.len();
    let s = factor.rank();
    let evals = source.evaluations();
    println!(
        "n={n} s={s} epsilon_final={} kernel_evals={evals}",
        factor.residual_trace()
    );
    let cap = (n as u64) * (s as u64 + 1);
    if evals > cap {
        bail!("kernel evaluation count {evals} exceeds n(s+1) = {cap}");
    }
    Ok(())
}

fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    let data = load(&args.input.input, args.input.dim, args.input.standardize)?;
    let spec = kernel(args.sigma)?;
    let k = cluster_count(args.clusters, &data)?;
    let params = lloyd_params(args.max_iter)?;
    let start = Instant::now();
    let run = run_algorithm(
        args.algorithm,
        &data,
        &spec,
        args.subset_size,
        k,
        args.seed,
        args.epsilon,
        guard(args.allow_full_gram),
        &params,
    )?;
    write_atomic(&args.out, |w| {
        for c in &run.model.assignments {
            writeln!(w, "{c}")?;
        }
        Ok(())
    })?;
    let acc = match data.labels() {
        Some(truth) => format!("{:.6}", accuracy(&run.model.assignments, truth)?),
        None => "n/a".to_string(),
    };
    println!(
        "algorithm={} n={} k={k} rank={} objective={} accuracy={acc} iterations={} converged={} \
         factorize_ms={:.3} cluster_ms={:.3} total_ms={:.3}",
        args.algorithm,
        data.len(),
        run.achieved_rank,
        run.model.objective,
        run.model.iterations,
        run.model.converged,
        run.factorize_ms,
        run.cluster_ms,
        start.elapsed().as_secs_f64() * 1e3,
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let spec = kernel(args.sigma)?;
    if args.subset_size.is_empty() || args.subset_size.contains(&0) {
        bail!("--subset-size needs positive values");
    }
    let mut datasets = Vec::new();
    for input in &args.inputs {
        let data = load(input, args.dim, args.standardize)?;
        let k = cluster_count(args.clusters, &data)?;
        datasets.push(BenchDataset { data, spec, k });
    }
    let config = BenchConfig {
        datasets,
        algorithms: args.algorithms.clone(),
        subset_sizes: args.subset_size.clone(),
        seeds: args.seeds,
        first_seed: args.seed,
        epsilon: args.epsilon,
        guard: guard(args.allow_full_gram),
        params: lloyd_params(args.max_iter)?,
        warmup: true,
    };
    let report = run_benchmark(&config)?;
    let csv = report.to_csv();
    write_atomic(&args.out, |w| Ok(w.write_all(csv.as_bytes())?))?;
    for s in report.summaries() {
        println!("{}", summary_line(&s));
    }
    let done: Vec<f64> = report.rows.iter().filter(|r| r.skipped.is_none()).map(|r| r.total_ms).collect();
    println!(
        "wrote {} rows to {} (median total_ms {:.3})",
        report.rows.len(),
        args.out.display(),
        median(&done)
    );
    Ok(())
}

fn summary_line(s: &Summary) -> String {
    if s.runs == 0 {
        return format!(
            "{} {} s={}: skipped {} runs (n exceeds the full-matrix guard; pass --allow-full-gram)",
            s.dataset, s.algorithm, s.subset_size, s.skipped
        );
    }
    let acc = s
        .median_accuracy
        .map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
    format!(
        "{} {} s={}: runs={} median_accuracy={acc} median_total_ms={:.3}",
        s.dataset, s.algorithm, s.subset_size, s.runs, s.median_total_ms
    )
}
