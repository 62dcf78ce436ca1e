use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msune::config::RunConfig;
use msune::io::{read_cloud, write_cloud};
use msune::metrics::{EvalReport, NormalMetrics, CSV_HEADER};
use msune::pipeline::summarize;
use msune::suite::{candidate_trend, SuiteConfig};
use msune::{add_noise, chamfer, denoise_all, estimate_all, gen_shape, p2s, NoiseSpec, ShapeKind, ShapeSpec};

#[derive(Parser)]
#[command(name = "msune", version, about = "Point cloud normal estimation and denoising by multi-sample consensus")]
struct Cli {
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an analytic shape with ground-truth normals.
    Synth(SynthArgs),
    /// Estimate normals for every point.
    Estimate(EstimateArgs),
    /// Move every point to the main mode of its position candidates.
    Denoise(RunArgs),
    /// Compare an estimated cloud with a reference.
    Eval(EvalArgs),
    /// Mean RMS over the synthetic suite for several candidate counts.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// plane, sphere, cylinder, cube, wedge or wedge<deg>.
    #[arg(long)]
    shape: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Noise standard deviation, percent of the bounding-box diagonal.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// .xyz or .ply
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// key = value parameter file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Candidates per point.
    #[arg(long)]
    candidates: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Reference normals for error coloring in .ply output.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimated cloud.
    #[arg(long)]
    est: PathBuf,
    /// Ground-truth cloud.
    #[arg(long)]
    gt: PathBuf,
    /// Analytic surface for P2S, as in `synth --shape`.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    /// Append one CSV row here (header written for a new file).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 100, 400])]
    candidates: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0])]
    noise: Vec<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<msune::Error> for Failure {
    fn from(e: msune::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Config file, then flags on top.
fn resolve(args: &RunArgs) -> Result<(RunConfig, PathBuf, PathBuf), Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.params.seed = s;
    }
    if let Some(c) = args.candidates {
        cfg.params.sampling.n_candidates = c;
    }
    cfg.params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let input = args
        .input
        .clone()
        .or_else(|| cfg.input.clone())
        .ok_or_else(|| Failure::Usage("no input: pass --input or set io.input".into()))?;
    let output = args
        .output
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::Usage("no output: pass --output or set io.output".into()))?;
    Ok((cfg, input, output))
}

fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let kind: ShapeKind = a.shape.parse().map_err(|e: msune::Error| Failure::Usage(e.to_string()))?;
    let spec = ShapeSpec {
        kind,
        n_points: a.n,
        extent: a.extent,
        seed: a.seed,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let clean = gen_shape(&spec)?;
    let cloud = add_noise(&clean, &NoiseSpec::gaussian(a.noise, a.seed.wrapping_add(1_000_003)))?;
    write_cloud(&cloud, &a.output, None)?;
    Ok(())
}

fn estimate(a: &EstimateArgs) -> Result<(), Failure> {
    let (cfg, input, output) = resolve(&a.run)?;
    let cloud = read_cloud(&input)?;
    let reference = a.reference.as_deref().map(read_cloud).transpose()?;
    let est = estimate_all(&cloud, &cfg.params)?;
    let gt = reference.as_ref().and_then(|r| r.normals());
    write_cloud(&est.cloud, &output, gt)?;

    let s = summarize(&est.diagnostics);
    println!("points = {}", s.points);
    println!("noise_level = {:.6}", est.cloud_f);
    println!("mean_k_hat = {:.1}", s.mean_k_hat);
    println!("clamped_points = {}", s.clamped);
    println!("rejection_points = {}", s.rejection_points);
    println!("mean_feasible = {:.2}", s.mean_feasible);
    println!("mean_solver_iters = {:.3}", s.mean_iters);
    println!("converged_fraction = {:.4}", s.converged_fraction);
    Ok(())
}

fn denoise(a: &RunArgs) -> Result<(), Failure> {
    let (cfg, input, output) = resolve(a)?;
    let cloud = read_cloud(&input)?;
    let out = denoise_all(&cloud, &cfg.params)?;
    write_cloud(&out, &output, None)?;
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let surface = a
        .surface
        .as_deref()
        .map(|s| {
            let kind: ShapeKind = s.parse().map_err(|e: msune::Error| Failure::Usage(e.to_string()))?;
            Ok::<_, Failure>(ShapeSpec {
                extent: a.extent,
                ..ShapeSpec::new(kind, 10, 0)
            })
        })
        .transpose()?;
    let est = read_cloud(&a.est)?;
    let gt = read_cloud(&a.gt)?;
    if est.len() != gt.len() {
        return Err(Failure::Data(format!(
            "point counts differ: {} has {} points, {} has {}",
            a.est.display(),
            est.len(),
            a.gt.display(),
            gt.len()
        )));
    }
    let normals = match (est.normals(), gt.normals()) {
        (Some(e), Some(g)) => Some(NormalMetrics::compute(e, g)?),
        _ => None,
    };
    let report = EvalReport {
        normals,
        cd: Some(chamfer(&est, &gt)?),
        p2s: surface.map(|s| p2s(&est, &s)).transpose()?,
    };
    print!("{}", report.to_text());
    if let Some(path) = &a.csv {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(msune::Error::from)?;
        if fresh {
            writeln!(f, "{CSV_HEADER}").map_err(msune::Error::from)?;
        }
        writeln!(f, "{}", report.to_csv_row()).map_err(msune::Error::from)?;
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let cfg = load_config(a.config.as_deref())?;
    let suite = SuiteConfig {
        n_points: a.n,
        seeds: a.seeds.clone(),
        noise_pcts: a.noise.clone(),
        ..SuiteConfig::default()
    };
    let rows = candidate_trend(&suite, &a.candidates, &cfg.params)?;
    let per_shape = suite.noise_pcts.len() * suite.seeds.len();
    print!("{:>12} {:>10}", "candidates", "mean_rms");
    for s in &suite.shapes {
        print!(" {:>10}", s.to_string());
    }
    println!();
    for row in &rows {
        print!("{:>12} {:>10.4}", row.n_candidates, row.mean_rms);
        for chunk in row.case_rms.chunks(per_shape) {
            print!(" {:>10.4}", chunk.iter().sum::<f64>() / chunk.len() as f64);
        }
        println!();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Usage(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Estimate(a) => estimate(a),
        Command::Denoise(a) => denoise(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
