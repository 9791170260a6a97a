use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use yfree::workbench::{
    bench_ntk, complexity_demo, risk_figure, select_benchmark, sin_demo, Command, ExperimentConfig,
    RunDir,
};

/// Batch experiments for y-free model selection. Settings come from
/// defaults, then `--config`, then flags; every run writes a manifest.
#[derive(Parser, Debug)]
#[command(name = "yfree", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Five models fitted to the noisy sine with and without y.
    DemoSin(Common),
    /// Unregularized KRR at several bandwidths: equal edof, different curves.
    ComplexityDemo(Common),
    /// Repetition benchmark producing a quartile table.
    Select(Common),
    /// Asymptotic ridge risks and the ratio scan.
    Asymptotics(Common),
    /// Network smoother trained on a random target with per-epoch monitors.
    BenchNtk(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// `key=value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path or `synth:linear`, `synth:sin`, `synth:blobs`.
    #[arg(long)]
    data: Option<String>,
    /// Response column (name or zero-based index).
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated models: lrr, krr, spline, gf, knn, nn, rf.
    #[arg(long)]
    model: Option<String>,
    /// Selection criterion; repeat for several.
    #[arg(long = "criterion")]
    criteria: Vec<String>,
    /// Default norm for norm-based criteria.
    #[arg(long)]
    norm: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn config(&self, command: Command) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(command);
        if let Some(p) = &self.config {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("in {}", p.display()))?;
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        put("data", self.data.clone());
        put("target", self.target.clone());
        put("model", self.model.clone());
        put("norm", self.norm.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("reps", self.reps.map(|v| v.to_string()));
        put("n_train", self.n_train.map(|v| v.to_string()));
        put("n_test", self.n_test.map(|v| v.to_string()));
        put("n_val", self.n_val.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        if !self.criteria.is_empty() {
            put("criterion", Some(self.criteria.join(",")));
        }
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .with_context(|| format!("--set expects key=value, got {s:?}"))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        for (k, v) in pairs {
            cfg.set(&k, &v).with_context(|| format!("setting {k}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("YFREE_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("YFREE_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(sub: Sub) -> Result<()> {
    let (command, common) = match sub {
        Sub::DemoSin(c) => (Command::DemoSin, c),
        Sub::ComplexityDemo(c) => (Command::ComplexityDemo, c),
        Sub::Select(c) => (Command::Select, c),
        Sub::Asymptotics(c) => (Command::Asymptotics, c),
        Sub::BenchNtk(c) => (Command::BenchNtk, c),
    };
    let cfg = common.config(command)?;
    let dir =
        RunDir::create(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut extra = Vec::new();
    match command {
        Command::DemoSin => {
            let rep = sin_demo(&cfg)?;
            rep.write(&dir)?;
            for c in &rep.curves {
                println!(
                    "{:<7} {:<8} {:<22} r2={:.4}  {}",
                    c.model, c.kind, c.method, c.r2, c.chosen
                );
            }
        }
        Command::ComplexityDemo => {
            let rep = complexity_demo(&cfg)?;
            rep.write(&dir)?;
            for r in &rep.rows {
                println!(
                    "sigma={:<6} edof={:.6} residual={:.3e} msv_tr={:.6}",
                    r.sigma, r.edof, r.residual, r.msv_tr
                );
            }
            extra.push(("edof_spread".to_string(), rep.edof_spread().to_string()));
        }
        Command::Select => {
            let rep = select_benchmark(&cfg)?;
            rep.write(&dir)?;
            println!("data,model,method,q1,q2,q3");
            for r in &rep.table {
                println!(
                    "{},{},{},{:.4},{:.4},{:.4}",
                    r.data, r.model, r.method, r.q1, r.q2, r.q3
                );
            }
        }
        Command::Asymptotics => {
            let rep = risk_figure(&cfg)?;
            rep.write(&dir, cfg.full_table)?;
            println!("{}", rep.summary_line());
        }
        Command::BenchNtk => {
            let rep = bench_ntk(&cfg)?;
            eprintln!(
                "estimated cost: {:.2e} multiply-adds per run",
                rep.cost_flops
            );
            rep.write(&dir, cfg.build)?;
            for r in &rep.runs {
                println!(
                    "{:<22} best_epoch={:<5} metric={:.4}",
                    r.criterion, r.best_epoch, r.metric
                );
            }
        }
    }
    dir.write_manifest(&cfg, &extra)?;
    eprintln!("wrote {}", dir.root().display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads()?;
    run(Cli::parse().command)
}
