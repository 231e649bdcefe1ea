use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use symcap_cli::{run, FileConfig, RunConfig, Suite};

/// Runs numerical verification suites and writes a JSON report, CSV tables and SVG plots.
#[derive(Parser, Debug)]
#[command(name = "symcap", version)]
struct Args {
    suite: Suite,
    /// Complex half-dimension.
    #[arg(long)]
    n: Option<usize>,
    /// TOML file whose values override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    loop_samples: Option<usize>,
    /// Random loops per winding class.
    #[arg(long)]
    random_loops: Option<usize>,
    /// Size of the exported sample of X.
    #[arg(long)]
    samples: Option<usize>,
    /// Box-counting levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Poisson grid of the planar embedding.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    flow_steps: Option<usize>,
    /// Grid size of the split sweep.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    witness_r: Option<f64>,
    #[arg(long)]
    target_area: Option<f64>,
    /// Skip SVG plots.
    #[arg(long)]
    no_svg: bool,
    /// Print the report to stdout as well.
    #[arg(long)]
    json: bool,
}

impl Args {
    fn into_config(self) -> anyhow::Result<(RunConfig, bool)> {
        let mut c = RunConfig::for_suite(self.suite);
        macro_rules! flag {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        flag!(n, out, seed, loop_samples, random_loops, samples, levels, grid, flow_steps, resolution, witness_r, target_area);
        if self.no_svg {
            c.svg = false;
        }
        if let Some(path) = &self.config {
            FileConfig::load(path)?.apply(&mut c);
        }
        c.validate()?;
        Ok((c, self.json))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (config, print) = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for c in report.checks() {
        let value = c.value.map(|v| format!("{v:.9e}")).unwrap_or_else(|| "-".into());
        println!("{} {}/{}: {} (value {value}, expected {})", if c.pass { "PASS" } else { "FAIL" }, c.suite, c.id, c.claim, c.expected);
        if let (false, Some(d)) = (c.pass, &c.detail) {
            println!("     {d}");
        }
    }
    if print {
        match serde_json::to_string_pretty(&report) {
            Ok(s) => println!("{s}"),
            Err(e) => eprintln!("error: {e}"),
        }
    }
    println!("report: {}", config.out.join("report.json").display());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
