use clap::{Parser, Subcommand};
use itale::diagnostics::probe_crip;
use itale::experiment::phantom::{builtin_phantom, write_pgm};
use itale::experiment::{run_experiment, write_results_csv, ExperimentSpec};
use itale::graph::{lattice_graph, line_graph};
use itale::itale::{run_itale, GridRule, ItaleConfig};
use itale::measurement::gaussian_design;
use itale::measurement::io::load_design;
use itale::{EdgeCost, GraphTopology, ItaleError, Result};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const OUTPUT_ENV: &str = "ITALE_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "itale", version, about = "Gradient-sparse signal recovery by iterative alpha-expansion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one signal and write its regularization path.
    Recover {
        /// Design file (binary dense matrix or Fourier TOML record).
        #[arg(long)]
        design: PathBuf,
        /// Measurements, one value per line.
        #[arg(long)]
        measurements: PathBuf,
        /// `line:P` or `lattice:RxC`.
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 300)]
        grid_count: usize,
        /// Fixed label spacing; overrides --grid-count.
        #[arg(long)]
        grid_spacing: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        stop_fraction: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment spec and write a table of RMSEs.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Probe a design for cut-restricted isometry violations.
    CripCheck {
        #[arg(long, conflicts_with = "gaussian")]
        design: Option<PathBuf>,
        /// Use a fresh Gaussian design with this many rows.
        #[arg(long)]
        gaussian: Option<usize>,
        #[arg(long)]
        graph: String,
        /// Comma-separated sparsity levels.
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in phantom as a binary graymap.
    PhantomGen {
        /// `shepp_logan` or `two_region`.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_graph(text: &str) -> Result<GraphTopology> {
    let bad = || ItaleError::InvalidParameter(format!("graph must be line:P or lattice:RxC, got {text:?}"));
    let (kind, dims) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "line" => line_graph(dims.parse().map_err(|_| bad())?),
        "lattice" => {
            let (r, c) = dims.split_once('x').ok_or_else(bad)?;
            lattice_graph(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?)
        }
        _ => Err(bad()),
    }
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        for field in record.iter() {
            out.push(field.parse().map_err(|_| ItaleError::Format { offset, message: format!("invalid number {field:?}") })?);
        }
    }
    Ok(out)
}

/// Output location, redirected into `$ITALE_OUTPUT_DIR` when it is set.
fn output_dir(requested: Option<PathBuf>) -> Result<PathBuf> {
    match std::env::var_os(OUTPUT_ENV) {
        Some(dir) => Ok(PathBuf::from(dir)),
        None => requested.ok_or_else(|| ItaleError::InvalidParameter(format!("no output directory; pass one or set {OUTPUT_ENV}"))),
    }
}

fn output_file(requested: PathBuf) -> PathBuf {
    match (std::env::var_os(OUTPUT_ENV), requested.file_name()) {
        (Some(dir), Some(name)) => Path::new(&dir).join(name),
        _ => requested,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Recover {
            design,
            measurements,
            graph,
            gamma,
            grid_count,
            grid_spacing,
            eta,
            lambda_max,
            stop_fraction,
            max_iters,
            out,
        } => {
            let a = load_design(&design)?;
            let y = read_vector(&measurements)?;
            let topo = parse_graph(&graph)?;
            let config = ItaleConfig {
                gamma,
                lambda_max,
                eta,
                grid: grid_spacing.map_or(GridRule::Count(grid_count), GridRule::Spacing),
                stop_fraction,
                max_iters,
                ..Default::default()
            };
            let path = run_itale(&y, &a, &topo, &EdgeCost::L0Indicator, &config)?;
            let dir = output_dir(Some(out))?;
            path.write_csv(create(&dir.join("path.csv"))?)?;
            let mut w = csv::Writer::from_writer(create(&dir.join("signals.csv"))?);
            let mut header = vec!["k".to_string()];
            header.extend((0..topo.num_vertices()).map(|i| format!("x{i}")));
            w.write_record(&header)?;
            for (k, it) in path.iterates.iter().enumerate() {
                let mut rec = vec![it.step.to_string()];
                rec.extend(path.signal(k).iter().map(|v| format!("{v:e}")));
                w.write_record(&rec)?;
            }
            w.flush()?;
            log::info!("{} iterates, stopped by {}", path.len(), path.terminated.as_str());
        }
        Command::Simulate { spec, output_dir: dir } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec = ExperimentSpec::from_toml(&text)?;
            let dir = output_dir(dir.or_else(|| spec.output_dir.clone()))?;
            let rows = run_experiment(&spec)?;
            write_results_csv(&rows, spec.include_runtime, create(&dir.join("results.csv"))?)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            log::info!("{} rows written, {failed} failed", rows.len());
        }
        Command::CripCheck { design, gaussian, graph, s, samples, seed, out } => {
            let topo = parse_graph(&graph)?;
            let a = match (design, gaussian) {
                (Some(path), _) => load_design(&path)?,
                (None, Some(n)) => gaussian_design(n, topo.num_vertices(), seed)?,
                (None, None) => return Err(ItaleError::InvalidParameter("pass --design or --gaussian".into())),
            };
            let report = probe_crip(&a, &topo, &s, samples, seed)?;
            for r in report.records.iter().filter(|r| r.falsified()) {
                log::warn!("s={}: no lower isometry bound survives (min ratio {:e})", r.s, r.min_ratio);
            }
            report.write_csv(create(&output_file(out))?)?;
        }
        Command::PhantomGen { name, size, out } => {
            let img = builtin_phantom(&name, size)?;
            write_pgm(&img, create(&output_file(out))?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            eprintln!("{}", e.render());
            eprintln!("error: kind=usage message={message:?}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::FAILURE
        }
    }
}
