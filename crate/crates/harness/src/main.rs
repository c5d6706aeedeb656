//! `mrx` command line: train the transformer receiver, sweep BER curves,
//! and print compute reports.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mrx_harness::flops::flops_report;
use mrx_harness::output::{emit_csv, parse_csv, write_manifest, Manifest};
use mrx_harness::{
    run_monte_carlo_ber, run_training_job, ExecMode, Receiver, SweepConfig, TrainJobConfig,
};
use mrx_neural::ModelConfig;

#[derive(Parser)]
#[command(name = "mrx", about = "multi-receiver uplink decoding benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// small budgets for interactive runs
    Desk,
    /// full statistical budgets
    Full,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the transformer receiver and write checkpoints + metrics.
    Train {
        /// TOML job config; defaults to the micro profile
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out/train")]
        out: PathBuf,
        /// state directory to resume from
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Monte Carlo BER sweep for one receiver.
    Sweep {
        /// TOML sweep config; defaults to the chosen profile
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "ls")]
        receiver: String,
        #[arg(long, value_delimiter = ',')]
        n_ap: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        pilot_cols: Option<Vec<usize>>,
        /// transformer checkpoint (model.ckpt)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        /// run iterations on one thread
        #[arg(long)]
        sequential: bool,
        /// raw hard-decision BER instead of post-decoder BER
        #[arg(long)]
        uncoded: bool,
    },
    /// Evaluate one receiver at a single operating point: BER, BMD loss
    /// and achievable rate over fresh observations.
    Evaluate {
        /// TOML sweep config supplying link/channel settings; defaults to
        /// the desk-scale micro link
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "ls")]
        receiver: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        n_ap: usize,
        #[arg(long, default_value_t = 8.0)]
        ebn0_db: f64,
        #[arg(long, default_value_t = 200)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the per-block FLOP and parameter report.
    Flops {
        #[arg(long, default_value_t = 3)]
        n_ap: usize,
    },
    /// Summarize a sweep CSV on stdout.
    Report { csv: PathBuf },
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train {
            config,
            out,
            resume,
            seed,
            steps,
        } => {
            let mut cfg = match &config {
                Some(p) => load_toml::<TrainJobConfig>(p)?,
                None => TrainJobConfig::micro(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = steps {
                cfg.steps = s;
            }
            let report = run_training_job(&cfg, &out, resume.as_deref())?;
            println!(
                "trained {} steps: loss {:.4}, R_BMD {:.4}",
                report.steps, report.final_loss, report.final_r_bmd
            );
            println!("model: {}", report.model_path.display());
            println!("metrics: {}", report.metrics_path.display());
        }
        Cmd::Sweep {
            config,
            receiver,
            n_ap,
            pilot_cols,
            checkpoint,
            seeds,
            out,
            profile,
            sequential,
            uncoded,
        } => {
            let mut cfg = match &config {
                Some(p) => load_toml::<SweepConfig>(p)?,
                None => match profile {
                    Profile::Desk => SweepConfig::desk(&receiver),
                    Profile::Full => SweepConfig::full(&receiver),
                },
            };
            cfg.receiver = receiver.clone();
            if let Some(n) = n_ap {
                cfg.n_ap_list = n;
            }
            if let Some(p) = pilot_cols {
                cfg.link.pilot_cols = p;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(c) = &checkpoint {
                cfg.checkpoint = Some(c.display().to_string());
            }
            cfg.uncoded = uncoded;
            cfg.validate()?;
            let ckpt = cfg.checkpoint.clone().map(PathBuf::from);
            let rho_nominal = 0.9999;
            let rx = Receiver::from_spec(
                &cfg.receiver,
                &cfg.link,
                &cfg.tdl,
                rho_nominal,
                ckpt.as_deref(),
            )?;
            let mode = if sequential {
                ExecMode::Sequential
            } else {
                ExecMode::Parallel
            };
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let mut outputs = Vec::new();
            for &n_ap in &cfg.n_ap_list {
                let curve = run_monte_carlo_ber(&cfg, &rx, n_ap, mode)?;
                let name = format!("{}_nap{}.csv", curve.receiver, n_ap);
                emit_csv(&curve, &out.join(&name))?;
                for p in &curve.points {
                    println!(
                        "{} n_ap={} Eb/N0={:5.1} dB  BER {:.3e} (smoothed {:.3e}, {} bits)",
                        curve.receiver, n_ap, p.ebn0_db, p.mean, p.smoothed, p.bits
                    );
                }
                outputs.push(name);
            }
            write_manifest(
                &Manifest {
                    config_hash: format!("{:016x}", cfg.config_hash()),
                    receiver: cfg.receiver.clone(),
                    seeds: cfg.seeds.clone(),
                    outputs,
                },
                &out.join("manifest.json"),
            )?;
            println!("wrote {}", out.join("manifest.json").display());
        }
        Cmd::Evaluate {
            config,
            receiver,
            checkpoint,
            n_ap,
            ebn0_db,
            frames,
            seed,
        } => {
            let cfg = match &config {
                Some(p) => load_toml::<SweepConfig>(p)?,
                None => SweepConfig {
                    link: mrx_harness::LinkSetup::micro(),
                    tdl: mrx_harness::TdlSettings::micro(),
                    ..SweepConfig::desk(&receiver)
                },
            };
            let rx = Receiver::from_spec(
                &receiver,
                &cfg.link,
                &cfg.tdl,
                0.9999,
                checkpoint.as_deref(),
            )?;
            let (mask, fmt) = cfg.link.build()?;
            let rate = cfg.link.bits_per_symbol_rate()?;
            let scfg = mrx_chansim::scenario::ScenarioConfig {
                n_ap,
                target_avg_ebn0_db: ebn0_db,
                ue_speed_range: cfg.ue_speed_range,
                ..Default::default()
            };
            let (mut errors, mut bits) = (0u64, 0u64);
            let mut loss_acc = 0.0;
            for it in 0..frames as u64 {
                let mut rng = mrx_chansim::rng::stream(seed, &[it]);
                let scn = mrx_chansim::scenario::sample_scenario(&scfg, rate, &mut rng)?;
                let obs =
                    mrx_chansim::make_observation(&scn, &cfg.tdl.params(), &mask, &fmt, &mut rng)?;
                let llrs = rx.llrs(&obs, &mask, &fmt.spec)?;
                let (loss, _) = mrx_neural::bmd_loss(&llrs, &obs.coded_bits)?;
                loss_acc += loss;
                let (dec, _) = fmt.decode_frame(&llrs)?;
                errors += dec
                    .iter()
                    .zip(&obs.info_bits)
                    .filter(|(a, b)| a != b)
                    .count() as u64;
                bits += dec.len() as u64;
            }
            let loss = loss_acc / frames as f64;
            println!(
                "{} n_ap={} Eb/N0={:.1} dB over {} frames: BER {:.3e} ({} / {} info bits)",
                rx.name(),
                n_ap,
                ebn0_db,
                frames,
                errors as f64 / bits as f64,
                errors,
                bits
            );
            println!("BMD loss {loss:.4}, R_BMD {:.4}", 1.0 - loss);
        }
        Cmd::Flops { n_ap } => {
            let cfg = ModelConfig::full(48, 36, 6, n_ap);
            if n_ap == 0 {
                bail!("n_ap must be >= 1");
            }
            print!("{}", flops_report(&cfg, n_ap).render());
        }
        Cmd::Report { csv } => {
            let curve = parse_csv(&csv)?;
            println!(
                "{} receiver, {} AP(s), pilots {:?}, {} seeds, config {:016x}",
                curve.receiver,
                curve.n_ap,
                curve.pilot_cols,
                curve.seeds.len(),
                curve.config_hash
            );
            for p in &curve.points {
                let spread = p
                    .per_seed
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                println!(
                    "  {:5.1} dB  mean {:.3e}  smoothed {:.3e}  seeds [{:.2e}, {:.2e}]  {} bits",
                    p.ebn0_db, p.mean, p.smoothed, spread.0, spread.1, p.bits
                );
            }
        }
    }
    Ok(())
}
