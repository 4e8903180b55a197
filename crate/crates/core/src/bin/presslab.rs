use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use presslab::analysis::amplification_search;
use presslab::config::ExperimentConfig;
use presslab::experiment::{
    analytic_table, parse_int_axis, parse_real_axis, run_experiment, AnalyticArgs, AnalyticKind, RunOptions,
};
use presslab::report::{plot_svg, ReportTable};
use presslab::repro::{presets_dir, run_all_repro, run_script, scripts};
use presslab::{ChargeModel, Error};

#[derive(Parser)]
#[command(name = "presslab", version, about = "Rowhammer / Row-Press mitigation simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory for results.csv and timelines.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Exit with status 3 if any run flips a row.
    #[arg(long)]
    assert_no_flip: bool,
    /// Write the issued command timeline of every run.
    #[arg(long)]
    emit_timeline: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configuration (all sweep points and seeds).
    Simulate(RunArgs),
    /// Like simulate, but requires a [sweep] section.
    Sweep(RunArgs),
    /// Search for the timeline with the highest charge per tracker weight.
    Adversary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_base: Option<u64>,
    },
    /// Closed-form tables: precision, graphene_slowdown, para_slowdown,
    /// effective_threshold, express_tstar.
    Analytic {
        kind: String,
        #[arg(long = "b")]
        bits: Option<String>,
        #[arg(long = "T", alias = "trh")]
        trh: Option<String>,
        #[arg(long = "K")]
        k: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long = "A", alias = "amplification")]
        amplification: Option<String>,
        #[arg(long)]
        tmro: Option<String>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a CSV column pair as an SVG line chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        series: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance reproduction scripts.
    Repro {
        #[arg(long)]
        all: bool,
        /// Run a single criterion.
        #[arg(long)]
        id: Option<u32>,
        #[arg(long)]
        presets: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Flip(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn axis<T>(v: &Option<String>, parse: fn(&str) -> presslab::Result<Vec<T>>) -> Result<Option<Vec<T>>, Failure> {
    v.as_deref().map(parse).transpose().map_err(Failure::from)
}

fn simulate(a: &RunArgs, need_sweep: bool) -> Result<(), Failure> {
    let cfg = load(&a.config)?;
    if need_sweep && cfg.sweep.is_none() {
        return Err(Failure::Config(format!("{}: sweep needs a [sweep] section", a.config.display())));
    }
    cfg.validate().map_err(|e| Failure::Config(format!("{}: {e}", a.config.display())))?;
    let opts = RunOptions { seed_base: a.seed_base, jobs: a.jobs, keep_timelines: a.emit_timeline };
    let out = run_experiment(&cfg, &opts)?;
    let csv = a.out.join("results.csv");
    write(&csv, &out.table.to_csv_string()?)?;
    for (name, tl) in &out.timelines {
        write(&a.out.join("timelines").join(format!("{name}.timeline")), &tl.to_text())?;
    }
    println!("{} runs, {} with flips -> {}", out.runs, out.flipped_runs, csv.display());
    if a.assert_no_flip && out.flipped_runs > 0 {
        return Err(Failure::Flip(format!("{} of {} runs flipped a row", out.flipped_runs, out.runs)));
    }
    Ok(())
}

fn adversary(config: &Path, out: Option<&Path>, seed_base: Option<u64>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let setup = cfg.to_setup().map_err(|e| Failure::Config(e.to_string()))?;
    let opts = cfg.search.clone().unwrap_or_default().options(seed_base.unwrap_or(cfg.run.seed));
    let cm = ChargeModel::new(cfg.oracle.alpha);
    let r = amplification_search(&setup.policy, &cm, &setup.timing, &opts)?;
    let fmt = |x: Option<presslab::analysis::amplification::Ratio>| {
        x.map_or("skipped".to_string(), |v| format!("{:.6}", v.to_f64()))
    };
    println!("policy: {}", setup.policy.kind.name());
    println!("alpha: {}", cfg.oracle.alpha.to_f64());
    println!("frac_bits: {}", setup.policy.frac_bits);
    println!("amplification: {:.6}", r.amplification);
    println!("ratio: {} / {}", r.ratio.charge, r.ratio.weight);
    println!("source: {:?}", r.source);
    println!("sweep: {:.6}", r.sweep.to_f64());
    println!("exhaustive: {}", fmt(r.exhaustive));
    println!("random: {}", fmt(r.random));
    println!("aggressor: {}", r.aggressor);
    match out {
        Some(dir) => {
            let path = dir.join("witness.timeline");
            write(&path, &r.witness.to_text())?;
            println!("witness: {}", path.display());
        }
        None => print!("witness:\n{}", r.witness.to_text()),
    }
    Ok(())
}

fn repro(id: Option<u32>, presets: Option<PathBuf>) -> Result<(), Failure> {
    let dir = presets.unwrap_or_else(presets_dir);
    let outcomes = match id {
        Some(id) => {
            let s = scripts()
                .into_iter()
                .find(|s| s.id == id)
                .ok_or_else(|| Failure::Other(format!("no script for criterion {id}")))?;
            vec![run_script(&s, &dir)?]
        }
        None => run_all_repro(&dir)?,
    };
    let mut failed = 0;
    for o in &outcomes {
        println!("[{}] criterion {:>2} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
        failed += !o.passed as usize;
    }
    if failed > 0 {
        return Err(Failure::Other(format!("{failed} criteria failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(a) => simulate(a, false),
        Cmd::Sweep(a) => simulate(a, true),
        Cmd::Adversary { config, out, seed_base } => adversary(config, out.as_deref(), *seed_base),
        Cmd::Analytic { kind, bits, trh, k, p, alpha, amplification, tmro, out } => (|| {
            let kind = AnalyticKind::parse(kind)?;
            let args = AnalyticArgs {
                bits: axis(bits, parse_int_axis)?,
                trh: axis(trh, parse_real_axis)?,
                k: axis(k, parse_int_axis)?,
                p: axis(p, parse_real_axis)?,
                alpha: axis(alpha, parse_real_axis)?,
                amplification: axis(amplification, parse_real_axis)?,
                tmro: axis(tmro, parse_int_axis)?,
            };
            let csv = analytic_table(kind, &args)?.to_csv_string()?;
            match out {
                Some(path) => write(path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        })(),
        Cmd::Plot { csv, x, y, series, out } => (|| {
            let file = fs::File::open(csv).map_err(|e| Failure::Other(format!("{}: {e}", csv.display())))?;
            let table = ReportTable::read_csv(file)?;
            write(out, &plot_svg(&table, x, y, series.as_deref())?)
        })(),
        Cmd::Validate { config } => (|| {
            let cfg = load(config)?;
            cfg.validate().map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            let points = cfg.expand().map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            println!("{}: ok ({} sweep points)", config.display(), points.len());
            Ok(())
        })(),
        Cmd::Repro { all, id, presets } => {
            if !*all && id.is_none() {
                Err(Failure::Other("pass --all or --id <n>".into()))
            } else {
                repro(*id, presets.clone())
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Flip(m)) => {
            eprintln!("security violation: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
