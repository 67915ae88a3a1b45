use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stretchld::harness::study::{grid_bounds, read_csv_file, write_csv, write_csv_file};
use stretchld::harness::{emit_svg, run_study, ExperimentConfig, StudyOptions};
use stretchld::theory::{rate_function, sup_exceedance_prob};
use stretchld::weights::{limit_sum, realize};
use stretchld::{Error, Result, StretchedExpParams};

#[derive(Debug, Parser)]
#[command(
    name = "stretchld",
    version,
    about = "Large deviations of weighted stretched-exponential sums"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Experiment config file (flat `key = value`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; never changes results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tail probabilities P(X > t).
    Tail {
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(required = true, allow_negative_numbers = true)]
        t: Vec<f64>,
    },
    /// Rate function and predicted log-probabilities along the config grid.
    Rate,
    /// Certified bounds along the config grid.
    Bounds {
        /// Restrict to one n.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Monte Carlo estimates at one n (default: first grid point), as CSV.
    Estimate {
        #[arg(long)]
        n: Option<u64>,
    },
    /// Full study: CSV, summary line, optional SVG.
    Study {
        /// Record wall-clock time in `elapsed_seconds`.
        #[arg(long)]
        timing: bool,
        /// Also write the convergence chart here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Render a study CSV as an SVG chart.
    Svg {
        /// Study CSV to read.
        #[arg(long)]
        csv: PathBuf,
    },
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(w) = g.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(g: &Global) -> Result<Box<dyn Write>> {
    Ok(match &g.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Tail { kappa, r, t } => {
            let params = StretchedExpParams::new(kappa, r)?;
            let mut out = output(g)?;
            writeln!(out, "t\ttail\tlog_tail")?;
            for t in t {
                let p = params.tail(t)?;
                writeln!(out, "{t}\t{p:.16e}\t{:.16e}", params.log_tail(t))?;
            }
            out.flush()?;
        }
        Command::Rate => {
            let cfg = load_config(g)?;
            let d = limit_sum(&cfg.family)?.d;
            let rate = rate_function(cfg.x, &cfg.dist, d)?;
            let mut out = output(g)?;
            writeln!(out, "# D = {d}, I(x) = {rate:.16e}")?;
            writeln!(out, "n\ta_max\tpredicted_log_prob\tpredicted_rate")?;
            for &n in &cfg.n_grid {
                let wv = realize(&cfg.family, n, cfg.truncation_tol)?;
                let scale = wv.a_max().powf(cfg.dist.r());
                writeln!(out, "{n}\t{:.16e}\t{:.16e}\t{:.16e}", wv.a_max(), -rate / scale, -rate)?;
            }
            out.flush()?;
        }
        Command::Bounds { n } => {
            let cfg = load_config(g)?;
            let d = limit_sum(&cfg.family)?.d;
            let grid: Vec<u64> = n.map_or_else(|| cfg.n_grid.clone(), |n| vec![n]);
            let mut out = output(g)?;
            writeln!(
                out,
                "n\ta_max\tlog_sup\tlog_lower_bound\tlog_upper_bound\tpredicted_log_prob"
            )?;
            for n in grid {
                let wv = realize(&cfg.family, n, cfg.truncation_tol)?;
                let b = grid_bounds(&cfg, &wv, d)?;
                let sup = sup_exceedance_prob(&wv, cfg.x, &cfg.dist)?.ln();
                writeln!(
                    out,
                    "{n}\t{:.16e}\t{sup:.16e}\t{:.16e}\t{:.16e}\t{:.16e}",
                    wv.a_max(),
                    b.log_lower,
                    b.log_upper,
                    b.predicted_log_prob
                )?;
            }
            out.flush()?;
        }
        Command::Estimate { n } => {
            let mut cfg = load_config(g)?;
            cfg.n_grid = vec![n.unwrap_or(cfg.n_grid[0])];
            let opts = StudyOptions {
                workers: cfg.workers,
                timing: true,
            };
            let report = run_study(&cfg, opts)?;
            write_csv(&report.rows, output(g)?)?;
        }
        Command::Study { timing, svg } => {
            let cfg = load_config(g)?;
            let opts = StudyOptions {
                workers: cfg.workers,
                timing,
            };
            let report = run_study(&cfg, opts)?;
            let csv_path = g.out.clone().unwrap_or_else(|| cfg.output_path.clone());
            write_csv_file(&report.rows, &csv_path)?;
            println!("wrote {} rows to {}", report.rows.len(), csv_path.display());
            println!("{}", report.summary);
            if let Some(svg_path) = svg.or_else(|| cfg.svg_path.clone()) {
                write_svg(&report.rows, &svg_path)?;
            }
        }
        Command::Svg { csv } => {
            let rows = read_csv_file(&csv)?;
            let path = g.out.clone().unwrap_or_else(|| csv.with_extension("svg"));
            write_svg(&rows, &path)?;
        }
    }
    Ok(())
}

fn write_svg(rows: &[stretchld::harness::StudyRow], path: &std::path::Path) -> Result<()> {
    match emit_svg(rows) {
        Some(doc) => {
            std::fs::write(path, doc)?;
            println!("wrote chart to {}", path.display());
        }
        None => eprintln!("notice: fewer than 2 rows, chart skipped"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Io(_) | Error::Csv(_) => 2,
        Error::Numeric(_) | Error::Resource(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stretchld: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
