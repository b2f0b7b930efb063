use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hal::checkpoint::{self, ModelKind};
use hal::harness::{
    alc_norm, evaluate_methods, load_store, mean, mean_by_variant, output, run_ablation_bias_aware,
    run_ablation_representation, run_duplicated, run_transfer, train_policy, Datasets, EpisodeConfig, Method, Profile,
};
use hal::policy::PolicyNet;
use hal::{HalError, Result};

#[derive(Parser)]
#[command(name = "hal", version, about = "Heapified active learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Directory holding IDX files; synthetic digits are used when unset.
    #[arg(long, global = true, env = "HAL_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Default sizes: `desk` or `paper`.
    #[arg(long, global = true, default_value = "desk")]
    profile: String,
    /// File of `key = value` lines applied over the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single `key=value` override, applied last; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a query policy; writes rewards.csv, replay.csv and policy.ckpt.
    TrainPolicy,
    /// Greedy curves of a saved policy next to random; writes curve.csv.
    EvalPolicy {
        #[arg(long)]
        policy: PathBuf,
    },
    /// Baseline curves; writes curve.csv.
    Baseline {
        /// random, entropy, dbal, kcenter or all.
        #[arg(long, default_value = "all")]
        method: String,
    },
    /// Class-center representation ablation; writes ablation.csv.
    AblationRep,
    /// Bias-aware feature on versus off; writes curve.csv and ba.csv.
    AblationBa,
    /// Duplicated-pool experiment; writes curve.csv, duplicates.csv, alc.csv.
    Duplicated,
    /// Source-trained policy on a colour-shifted target; writes curve.csv.
    Transfer {
        #[arg(long)]
        blend: Option<f64>,
    },
    /// Normalized ALC of every curve in a curve.csv against the reference
    /// method's curve with the same seed; writes alc.csv.
    Alc {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        a_max: f64,
        #[arg(long, default_value = "random")]
        reference: String,
    },
}

fn resolve_config(c: &Common) -> Result<EpisodeConfig> {
    let mut cfg = EpisodeConfig::profile(c.profile.parse::<Profile>()?);
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HalError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.repeats {
        cfg.repeats = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_policy(path: &Path) -> Result<PolicyNet> {
    let (kind, spec, params) = checkpoint::load(path)?;
    if kind != ModelKind::Policy {
        return Err(HalError::Checkpoint(format!("{} is not a policy checkpoint", path.display())));
    }
    PolicyNet::from_parts(spec, params)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    let out = &cli.common.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let store = load_store(cli.common.data_dir.as_deref(), &cfg)?;
    let seed = cfg.seed;
    match cli.command {
        Command::TrainPolicy => {
            let data = Datasets::new(store)?;
            let t = train_policy(&cfg, &data, seed)?;
            output::write_rewards(out.join("rewards.csv"), &t.rewards)?;
            t.buffer.write_csv(fs::File::create(out.join("replay.csv"))?)?;
            checkpoint::save(out.join("policy.ckpt"), ModelKind::Policy, t.policy.spec(), t.policy.params())?;
            let m = t.mean_rewards();
            println!("trained {} episodes; last mean step reward {:.4}", m.len(), m.last().copied().unwrap_or(0.0));
        }
        Command::EvalPolicy { policy } => {
            let policy = load_policy(&policy)?;
            let data = Datasets::new(store)?;
            let curves = evaluate_methods(&cfg, &data, Some(&policy), &[Method::Hal, Method::Random], seed)?;
            output::write_curves(out.join("curve.csv"), &curves)?;
            println!("wrote {} curves", curves.len());
        }
        Command::Baseline { method } => {
            let methods: Vec<Method> = if method == "all" {
                Method::BASELINES.to_vec()
            } else {
                method.split(',').map(str::parse).collect::<Result<_>>()?
            };
            if methods.contains(&Method::Hal) {
                return Err(HalError::Config("use eval-policy for hal curves".into()));
            }
            let data = Datasets::new(store)?;
            let curves = evaluate_methods(&cfg, &data, None, &methods, seed)?;
            output::write_curves(out.join("curve.csv"), &curves)?;
            println!("wrote {} curves", curves.len());
        }
        Command::AblationRep => {
            let data = Datasets::new(store)?;
            let rows = run_ablation_representation(&cfg, &data, seed)?;
            output::write_alc(out.join("ablation.csv"), "representation", &rows)?;
            for (v, m) in mean_by_variant(&rows) {
                println!("{v:>6}  mean alc_norm {m:.4}");
            }
        }
        Command::AblationBa => {
            let data = Datasets::new(store)?;
            let r = run_ablation_bias_aware(&cfg, &data, seed)?;
            output::write_curves(out.join("curve.csv"), &r.curves)?;
            let mut w = csv::Writer::from_path(out.join("ba.csv"))?;
            w.write_record(["repeat", "labels", "accuracy_with", "accuracy_without"])?;
            for (k, (a, b)) in r.with.iter().zip(&r.without).enumerate() {
                w.write_record([k.to_string(), r.labels.to_string(), a.to_string(), b.to_string()])?;
            }
            w.flush()?;
            println!(
                "accuracy at {} labels: with {:.4}, without {:.4}; sign test p = {:.4}",
                r.labels,
                mean(&r.with),
                mean(&r.without),
                r.p_value
            );
        }
        Command::Duplicated => {
            let r = run_duplicated(&cfg, &store, seed)?;
            output::write_curves(out.join("curve.csv"), &r.curves)?;
            output::write_duplicates(out.join("duplicates.csv"), &r.duplicates)?;
            output::write_alc(out.join("alc.csv"), "method", &r.alc)?;
            for (v, m) in mean_by_variant(&r.alc) {
                println!("{v:>6}  mean alc_norm {m:.4}");
            }
            println!("fewer duplicates than random: sign test p = {:.4}", r.p_value);
        }
        Command::Transfer { blend } => {
            let blend = blend.unwrap_or(cfg.blend);
            let source = Datasets::new(store)?;
            let target = source.domain_shifted(blend, hal::seed::derive(seed, "shift", 0))?;
            let curves = run_transfer(&cfg, &source, &target, seed)?;
            output::write_curves(out.join("curve.csv"), &curves)?;
            println!("wrote {} curves", curves.len());
        }
        Command::Alc {
            curves,
            a_max,
            reference,
        } => {
            let all = output::read_curves(&curves)?;
            let mut w = csv::Writer::from_path(out.join("alc.csv"))?;
            w.write_record(["method", "seed", "alc_norm"])?;
            for c in all.iter().filter(|c| c.method != reference) {
                let r = all
                    .iter()
                    .find(|r| r.method == reference && r.seed == c.seed)
                    .ok_or_else(|| HalError::Config(format!("no `{reference}` curve for seed {}", c.seed)))?;
                let v = alc_norm(&c.curve, &r.curve, a_max)?;
                w.write_record([c.method.clone(), c.seed.to_string(), v.to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hal: error: {e}");
            ExitCode::FAILURE
        }
    }
}
