use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fraclab::harness::{self, ExperimentConfig, Suite, VerificationReport};
use fraclab::{fraclap_pv, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "Fractional Laplacian quadrature and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate (-Delta)^sigma of a described field at one or more points.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Field descriptor, e.g. `constant:1`, `poisson`, `v-j:16`, `u-lambda:3:1:10`.
        #[arg(long)]
        field: String,
    },
    /// Quadrature oracle suite.
    Oracles {
        #[command(flatten)]
        common: Common,
    },
    /// Tail-mass machinery on the mollified sequence.
    Thm11 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "LIST")]
        j: Option<String>,
    },
    /// Mollified sequence converging to 1.
    Thm12 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "LIST")]
        j: Option<String>,
    },
    /// Blow-up family.
    Thm13 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "LIST")]
        lambda: Option<String>,
    },
    /// Limit constant b of the mollified sequence.
    EstimateB {
        #[command(flatten)]
        common: Common,
    },
    /// Smallest admissible outer radius of the blow-up family.
    ChooseR {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Points separated by `;`, coordinates by `,`.
    #[arg(long, value_name = "POINTS", allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, value_name = "LIST")]
    index_grid: Option<String>,
    #[arg(long, value_name = "LIST")]
    radius_grid: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    sequential: bool,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write CSV tables into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::UnsupportedDimension(_) => Failure::Usage(e.into()),
            other => Failure::Run(other.into()),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn run_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Run(e.into())
}

fn build_config(suite: Suite, c: &Common, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::for_suite(suite);
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(usage)?;
        cfg.apply_str(&text)?;
        cfg.suite = suite;
    }
    let mut set = |k: &str, v: Option<String>| -> Result<(), Failure> {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
        Ok(())
    };
    set("n", c.n.map(|v| v.to_string()))?;
    set("sigma", c.sigma.map(|v| v.to_string()))?;
    set("p", c.p.map(|v| v.to_string()))?;
    set("q", c.q.map(|v| v.to_string()))?;
    set("x_samples", c.x.clone())?;
    set("index_grid", c.index_grid.clone())?;
    set("radius_grid", c.radius_grid.clone())?;
    set("rel_tol", c.rel_tol.map(|v| v.to_string()))?;
    set("abs_tol", c.abs_tol.map(|v| v.to_string()))?;
    set("execution", c.sequential.then(|| "sequential".to_string()))?;
    set("out", c.out.as_ref().map(|p| p.display().to_string()))?;
    set("csv_dir", c.csv_dir.as_ref().map(|p| p.display().to_string()))?;
    for (k, v) in extra {
        set(k, v.clone())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(run_err)
}

fn emit_report(cfg: &ExperimentConfig, rep: &VerificationReport, as_json: bool) -> Result<bool, Failure> {
    if let Some(out) = &cfg.out {
        write_text(out, &(rep.to_json() + "\n"))?;
    }
    if let Some(dir) = &cfg.csv_dir {
        rep.write_tables(dir)?;
    }
    if as_json {
        println!("{}", rep.to_json());
    } else {
        print!("{}", rep.summary());
    }
    Ok(rep.pass)
}

fn emit_value(cfg: &ExperimentConfig, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(run_err)?;
    if let Some(out) = &cfg.out {
        write_text(out, &(text.clone() + "\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Eval { common, field } => {
            let cfg = build_config(Suite::Oracles, &common, &[])?;
            let params = cfg.params()?;
            let f = harness::parse_field(&field, &params, &cfg.quad)?;
            let xs = cfg.samples_or(&[0.0]);
            let mut rows = Vec::new();
            for x in &xs {
                let e = fraclap_pv(&f, x, &params, &cfg.quad)?;
                rows.push(json!({ "x": x, "value": e.value, "err_est": e.err_est }));
            }
            let out = if rows.len() == 1 { rows.pop().expect("one row") } else { json!(rows) };
            emit_value(&cfg, &json!({ "field": field, "n": cfg.n, "sigma": cfg.sigma, "result": out }))?;
            Ok(true)
        }
        Command::Oracles { common } => {
            let cfg = build_config(Suite::Oracles, &common, &[])?;
            emit_report(&cfg, &harness::run_suite(&cfg)?, common.json)
        }
        Command::Thm11 { common, j } => {
            let cfg = build_config(Suite::Thm11B, &common, &[("j_grid", j)])?;
            emit_report(&cfg, &harness::run_suite(&cfg)?, common.json)
        }
        Command::Thm12 { common, j } => {
            let cfg = build_config(Suite::Thm12, &common, &[("j_grid", j)])?;
            emit_report(&cfg, &harness::run_suite(&cfg)?, common.json)
        }
        Command::Thm13 { common, lambda } => {
            let cfg = build_config(Suite::Thm13, &common, &[("lambda_grid", lambda)])?;
            emit_report(&cfg, &harness::run_suite(&cfg)?, common.json)
        }
        Command::EstimateB { common } => {
            let cfg = build_config(Suite::Thm11B, &common, &[])?;
            let est = harness::run_estimate_b(&cfg)?;
            if let Some(dir) = &cfg.csv_dir {
                std::fs::create_dir_all(dir).map_err(run_err)?;
                write_text(&dir.join("tail_table.csv"), &est.table_csv()?)?;
            }
            emit_value(&cfg, &serde_json::to_value(&est).map_err(run_err)?)?;
            Ok(true)
        }
        Command::ChooseR { common, lambda } => {
            let cfg = build_config(Suite::Thm13, &common, &[])?;
            let c = harness::run_choose_r(&cfg, lambda)?;
            emit_value(&cfg, &json!({ "R": c.r, "margin_a": c.margin_a, "margin_b": c.margin_b }))?;
            Ok(c.margin_a >= 0.0 && c.margin_b >= 0.0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
