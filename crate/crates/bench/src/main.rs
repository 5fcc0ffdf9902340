use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hgff_agent::{episode_seed, write_log_csv, Trainer};
use hgff_bench::{
    build_instance, evaluate_cell, render_route, run_episode, run_suite, summarize, tiny_instance,
    write_results, write_summary, BenchConfig, Method, PolicyFactory, ResultRow,
};
use hgff_core::baselines::oracle_search;
use hgff_core::WsnInstance;

#[derive(Parser)]
#[command(name = "hgff", version, about = "Mobile-sink lifetime experiments")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Map JSON file; overrides --map-type/--instance-seed.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    map_type: u8,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated map instances as JSON.
    GenMaps {
        /// Map types; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        types: Vec<u8>,
        /// Instances per type; defaults to the configured count.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Train the learned policy on instances 0..train_instances of a map type.
    Train {
        #[arg(long, default_value_t = 1)]
        map_type: u8,
        /// Overrides the configured episode count.
        #[arg(long)]
        episodes: Option<u64>,
        /// Checkpoint file name inside the output directory.
        #[arg(long, default_value = "hgff.ckpt")]
        name: String,
    },
    /// Evaluate a trained checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Evaluate a heuristic baseline (gmre, random, aco).
    Baseline {
        #[arg(long, default_value = "gmre")]
        method: String,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Exhaustive best site sequence on a tiny instance.
    Oracle {
        /// Map JSON file; a generated 5-sensor/4-site instance when absent.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        /// Initial energy of the generated instance, J.
        #[arg(long, default_value_t = 0.003)]
        e_init: f64,
    },
    /// Play one episode and draw the sink's route as SVG.
    Render {
        /// gmre, random, aco, hgff@<checkpoint>
        #[arg(long, default_value = "gmre")]
        method: String,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Evaluate every configured method on every (map type, seed) instance.
    Suite,
}

fn load_instance(args: &InstanceArgs, config: &BenchConfig) -> anyhow::Result<WsnInstance> {
    match &args.map {
        Some(p) => WsnInstance::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(build_instance(args.map_type, args.instance_seed, config)?),
    }
}

fn write_rows(path: &Path, rows: &[ResultRow]) -> anyhow::Result<()> {
    write_results(BufWriter::new(File::create(path)?), rows)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn evaluate_and_report(
    method: &Method,
    instance: WsnInstance,
    config: &BenchConfig,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let delta_t = instance.energy.delta_t;
    let factory = PolicyFactory::new(method, config)?;
    let rows = evaluate_cell(&factory, method.label(), Arc::new(instance), config, seed)?;
    let s = &summarize(&rows, delta_t)[0];
    println!(
        "{}: mean lifetime {:.2} rounds ({:.0} s) over {} episodes, {:.3} ms per decision",
        s.method,
        s.mean_lifetime_rounds,
        s.mean_lifetime_seconds,
        rows.len(),
        s.mean_decision_time_ms
    );
    write_rows(&out.join(format!("{}_results.csv", method.label())), &rows)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => BenchConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => BenchConfig::default(),
    };
    config.train.seed = cli.seed;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;

    match cli.command {
        Command::GenMaps { types, seeds } => {
            let types = if types.is_empty() {
                config.map_types.clone()
            } else {
                types
            };
            let dir = cli.out.join("maps");
            fs::create_dir_all(&dir)?;
            for t in types {
                for s in 0..seeds.unwrap_or(config.seeds_per_type) {
                    let path = dir.join(format!("type{t}_seed{s}.json"));
                    build_instance(t, s, &config)?.save(&path)?;
                }
            }
            eprintln!("wrote maps to {}", dir.display());
        }
        Command::Train {
            map_type,
            episodes,
            name,
        } => {
            if let Some(e) = episodes {
                config.train.episodes = e;
            }
            let instances = (0..config.train_instances)
                .map(|s| build_instance(map_type, s, &config).map(Arc::new))
                .collect::<Result<Vec<_>, _>>()?;
            let mut trainer = Trainer::new(config.train, instances)?;
            let every = (config.train.episodes / 20).max(1);
            trainer.train(|r| {
                if (r.episode + 1) % every == 0 {
                    eprintln!(
                        "episode {} lifetime {} epsilon {:.3} loss {}",
                        r.episode + 1,
                        r.lifetime_rounds,
                        r.epsilon,
                        r.mean_loss
                            .map(|l| format!("{l:.4}"))
                            .unwrap_or_else(|| "-".into())
                    );
                }
            })?;
            let ck_path = cli.out.join(&name);
            trainer.checkpoint()?.save(&ck_path)?;
            let log_path = cli.out.join("train_log.csv");
            write_log_csv(BufWriter::new(File::create(&log_path)?), trainer.log())?;
            eprintln!("wrote {} and {}", ck_path.display(), log_path.display());
        }
        Command::Eval {
            checkpoint,
            instance,
        } => {
            let inst = load_instance(&instance, &config)?;
            evaluate_and_report(
                &Method::Hgff(Some(checkpoint)),
                inst,
                &config,
                cli.seed,
                &cli.out,
            )?;
        }
        Command::Baseline { method, instance } => {
            let m: Method = method.parse()?;
            if matches!(m, Method::Hgff(_)) {
                bail!("hgff is not a baseline; use `eval`");
            }
            let inst = load_instance(&instance, &config)?;
            evaluate_and_report(&m, inst, &config, cli.seed, &cli.out)?;
        }
        Command::Oracle {
            map,
            horizon,
            e_init,
        } => {
            let inst = match map {
                Some(p) => WsnInstance::load(&p)?,
                None => tiny_instance(cli.seed, e_init)?,
            };
            let res = oracle_search(Arc::new(inst), horizon, cli.seed)?;
            println!(
                "oracle lifetime {} (horizon {horizon}) sequence {:?}",
                res.lifetime, res.sequence
            );
        }
        Command::Render { method, instance } => {
            let m: Method = method.parse()?;
            let inst = Arc::new(load_instance(&instance, &config)?);
            let factory = PolicyFactory::new(&m, &config)?;
            let mut policy = factory.make(episode_seed(cli.seed, 1));
            let ep = run_episode(
                policy.as_mut(),
                inst.clone(),
                cli.seed,
                config.train.max_rounds,
            )?;
            let stem = format!(
                "route_{}_type{}_seed{}",
                m.label(),
                inst.map_type,
                inst.seed
            );
            let svg = cli.out.join(format!("{stem}.svg"));
            fs::write(&svg, render_route(&ep.trace, &inst))?;
            let csv = cli.out.join(format!("{stem}.csv"));
            ep.trace.write_csv(BufWriter::new(File::create(&csv)?))?;
            println!(
                "lifetime {} rounds; wrote {} and {}",
                ep.lifetime_rounds,
                svg.display(),
                csv.display()
            );
        }
        Command::Suite => {
            let rows = run_suite(&config, cli.seed, |cell| {
                if let Some(r) = cell.first() {
                    eprintln!(
                        "type {} seed {} {} done",
                        r.map_type, r.instance_seed, r.method
                    );
                }
            })?;
            write_rows(&cli.out.join("results.csv"), &rows)?;
            let summary = summarize(&rows, hgff_core::EnergyParams::default().delta_t);
            let path = cli.out.join("summary.csv");
            write_summary(BufWriter::new(File::create(&path)?), &summary)?;
            for s in &summary {
                println!(
                    "type {:>2} {:<8} T {:>8.2} rounds  C_t {:.3} ms",
                    s.map_type, s.method, s.mean_lifetime_rounds, s.mean_decision_time_ms
                );
            }
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}
