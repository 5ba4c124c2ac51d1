use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use nbundle_cli::exit::{self, AcceptanceFailure};
use nbundle_cli::output::{default_out_dir, OutputDir};
use nbundle_cli::pipeline::{self, RunSummary};
use nbundle_cli::reproduce::{self, Overrides};
use nbundle_core::config::{preset, RunConfig, PRESET_NAMES};
use nbundle_core::model::lambda_n;
use nbundle_core::Error;

#[derive(Parser)]
#[command(name = "nbundle", version, about = "N-photon bundle emission from a driven qubit-resonator system")]
struct Cli {
    /// Worker threads for trajectory ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory [default: $NBUNDLE_OUT or ./nbundle-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trajectories, overriding the config.
    #[arg(long = "traj", value_name = "N")]
    traj: Option<usize>,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest λ at which the N-photon dressed-state coupling vanishes.
    Lambda {
        n: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Run one configuration and write its outputs.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate one figure's data and check its claims (1d, 2, 3, 4, 5).
    Reproduce {
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat a run over values of one parameter.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Dotted parameter path, e.g. model.kappa.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// List built-in presets, or print one as TOML.
    Presets { name: Option<String> },
}

fn load(source: &Source) -> Result<RunConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => RunConfig::from_path(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", path.display())).into(),
            e => e.into(),
        }),
        (None, Some(name)) => Ok(preset(name)?),
        (None, None) => unreachable!("clap requires a source"),
    }
}

fn apply(cfg: &mut RunConfig, common: &Common) {
    Overrides {
        seed: common.seed,
        traj: common.traj,
    }
    .apply(cfg);
}

fn out_root(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(default_out_dir)
}

/// Runs `body` against a fresh output directory; files are removed again
/// unless the body succeeds or fails an acceptance check.
fn with_outputs(
    root: &Path,
    command: &str,
    body: impl FnOnce(&mut OutputDir) -> Result<(Option<RunConfig>, Option<u64>)>,
) -> Result<PathBuf> {
    let mut out = OutputDir::create(root, command)?;
    match body(&mut out) {
        Ok((cfg, seed)) => out.finish(cfg.as_ref(), seed),
        Err(e) if exit::exit_code(&e) == exit::ACCEPTANCE => {
            out.finish(None, None)?;
            Err(e)
        }
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", line(header.to_vec()));
    for r in rows {
        println!("{}", line(r.iter().map(String::as_str).collect()));
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    match cli.command {
        Command::Lambda { n, tol } => {
            println!("{:.6}", lambda_n(n, tol)?);
        }
        Command::Presets { name: None } => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
        }
        Command::Presets { name: Some(name) } => {
            print!("{}", preset(&name)?.to_toml_string());
        }
        Command::Run { source, common } => {
            let mut cfg = load(&source)?;
            apply(&mut cfg, &common);
            if let Some(w) = cfg.system()?.drive_warning() {
                eprintln!("warning: {w}");
            }
            let root = out_root(&common);
            let mut summary = None;
            with_outputs(&root, &command_line, |out| {
                let result = pipeline::compute(&cfg, cfg.run.trajectories, cfg.run.seed)?;
                pipeline::write_outputs(&cfg, &result, out)?;
                summary = Some(pipeline::summarize(&cfg, &result)?);
                Ok((Some(cfg.clone()), Some(cfg.run.seed)))
            })?;
            if let Some(s) = summary {
                print_table(&RunSummary::HEADER, &[s.fields().to_vec()]);
            }
            println!("outputs in {}", root.display());
        }
        Command::Reproduce { figure, common } => {
            reproduce::figure_presets(&figure)?;
            let overrides = Overrides {
                seed: common.seed,
                traj: common.traj,
            };
            let root = out_root(&common).join(format!("fig{figure}"));
            with_outputs(&root, &command_line, |out| {
                let fig = reproduce::run_figure(&figure, overrides)?;
                fig.write(out)?;
                for c in &fig.checks {
                    println!("{c}");
                }
                let failed = fig.failed();
                if !failed.is_empty() {
                    return Err(AcceptanceFailure { failed }.into());
                }
                Ok((None, overrides.seed))
            })?;
            println!("outputs in {}", root.display());
        }
        Command::Sweep {
            source,
            param,
            values,
            common,
        } => {
            let mut base = load(&source)?;
            apply(&mut base, &common);
            let mut cfgs = Vec::with_capacity(values.len());
            for &v in &values {
                let mut c = base.clone();
                c.set_param(&param, v)?;
                c.validate()?;
                cfgs.push(c);
            }
            let root = out_root(&common);
            let mut rows = Vec::new();
            with_outputs(&root, &command_line, |out| {
                let mut csv = format!("{param},{}\n", RunSummary::HEADER.join(","));
                for (c, v) in cfgs.iter().zip(&values) {
                    let result = pipeline::compute(c, c.run.trajectories, c.run.seed)?;
                    let fields = pipeline::summarize(c, &result)?.fields();
                    csv.push_str(&format!("{v},{}\n", fields.join(",")));
                    let mut row = vec![v.to_string()];
                    row.extend(fields);
                    rows.push(row);
                }
                out.write("sweep.csv", csv.as_bytes())?;
                Ok((Some(base.clone()), Some(base.run.seed)))
            })?;
            let mut header = vec![param.as_str()];
            header.extend(RunSummary::HEADER);
            print_table(&header, &rows);
            println!("outputs in {}", root.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if exit::exit_code(&e) == exit::CONFIG {
                eprintln!("(see `nbundle presets <name>` for a complete example config)");
            }
            ExitCode::from(exit::exit_code(&e) as u8)
        }
    }
}
