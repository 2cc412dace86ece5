//! `snqs` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snqs::output::{parse_trajectory_csv, trajectory_csv, write_atomic};
use snqs::{
    emit_outputs, exact_trajectory, latest_checkpoint, parse_config, predict_untrained, ptvmc_baseline,
    read_checkpoint, resume_evolution, run_evolution, Error, Mode, Observer, RunConfig, RunRecord,
};

#[derive(Parser)]
#[command(name = "snqs", version, about = "Smooth neural quantum states for spin-chain quench dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the smooth ansatz interval by interval.
    Run(Common),
    /// Step-by-step fidelity baseline with one network per time step.
    Baseline(Common),
    /// Exact-diagonalization trajectory only.
    Exact(Common),
    /// Observables from a checkpoint at arbitrary times, without training.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        times: Vec<f64>,
    },
    /// Continue a run from the latest window checkpoint in its output directory.
    Resume(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["exact", "mc"])]
    mode: Option<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let text =
            fs::read_to_string(&self.config).map_err(|e| Error::Config(format!("{}: {e}", self.config.display())))?;
        let mut cfg = parse_config(&text)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.mode {
            cfg.mode = Mode::parse(m).ok_or_else(|| Error::Config(format!("unknown mode `{m}`")))?;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn threads(&self) -> Result<(), Error> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        }
        Ok(())
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, Error> {
    cfg.out.as_deref().ok_or_else(|| Error::Config("no output directory: pass --out or set run.out".into()))
}

fn finish(rec: &RunRecord, cfg: &RunConfig) -> Result<ExitCode, Error> {
    let dir = out_dir(cfg)?;
    emit_outputs(rec, cfg, dir)?;
    eprintln!("{}: {} rows written to {}", rec.method, rec.rows.len(), dir.display());
    Ok(match &rec.aborted {
        Some(msg) => {
            eprintln!("run stopped early: {msg}");
            ExitCode::from(2)
        }
        None => ExitCode::SUCCESS,
    })
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run(c) => {
            c.threads()?;
            let cfg = c.load()?;
            out_dir(&cfg)?;
            finish(&run_evolution(&cfg)?, &cfg)
        }
        Command::Baseline(c) => {
            c.threads()?;
            let cfg = c.load()?;
            out_dir(&cfg)?;
            finish(&ptvmc_baseline(&cfg)?, &cfg)
        }
        Command::Exact(c) => {
            c.threads()?;
            let cfg = c.load()?;
            out_dir(&cfg)?;
            finish(&exact_trajectory(&cfg)?, &cfg)
        }
        Command::Evaluate { common, checkpoint, times } => {
            common.threads()?;
            let cfg = common.load()?;
            let ck = read_checkpoint(&checkpoint)?;
            let observer = Observer::new(&cfg.model.hamiltonian()?, cfg.sampler.with_seed(cfg.seed))?;
            let rows = predict_untrained(&ck.coeffs, &times, ck.trained_end, &observer)?;
            let text = trajectory_csv(&rows);
            match &common.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    write_atomic(&dir.join("evaluate.csv"), &text)?;
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Resume(c) => {
            c.threads()?;
            let cfg = c.load()?;
            let dir = out_dir(&cfg)?.to_path_buf();
            let ck = latest_checkpoint(&dir)?;
            let mut rec = resume_evolution(&cfg, &ck)?;
            // keep the rows already produced up to the checkpoint
            if let Ok(text) = fs::read_to_string(dir.join("trajectory.csv")) {
                let mut rows: Vec<_> =
                    parse_trajectory_csv(&text)?.into_iter().filter(|r| r.t <= ck.trained_end + 1e-9).collect();
                rows.append(&mut rec.rows);
                rec.rows = rows;
            }
            finish(&rec, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
