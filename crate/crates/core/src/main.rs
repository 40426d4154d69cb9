use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blowuplab::harness::runner::{init_threads, run_scenario, verify_scenario};
use blowuplab::harness::{Overrides, Scenario, ScenarioName};
use blowuplab::Result;

#[derive(Parser)]
#[command(name = "blowuplab", version, about = "Blowup experiments for the 3D axisymmetric model equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its diagnostics.
    Run(RunArgs),
    /// Check hypotheses and constants on the initial data only.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    scenario: String,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    /// Truncation height of a half-line domain.
    #[arg(long = "L")]
    truncation: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Upper bound on the time step.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    cadence: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output file; a `.summary.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    format: Option<String>,
}

impl CommonArgs {
    fn scenario(&self, format: Option<&str>) -> Result<Scenario> {
        let name: ScenarioName = self.scenario.parse()?;
        let base = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            nx: self.nx,
            nz: self.nz,
            truncation: self.truncation,
            beta: self.beta,
            nu: self.nu,
            dt: self.dt,
            t_end: self.t_end,
            cadence: self.cadence,
            cfl: self.cfl,
            format: format.map(str::parse).transpose()?,
            ..Overrides::default()
        };
        Scenario::new(name, &base.merged(&flags))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.6}"))
}

fn execute(cli: Cli) -> Result<()> {
    init_threads();
    match cli.command {
        Command::Verify(args) => {
            let scenario = args.scenario(None)?;
            let v = verify_scenario(&scenario)?;
            println!("{}", serde_json::to_string_pretty(&v).map_err(|e| blowuplab::Error::Config(e.to_string()))?);
            println!("{}: hypotheses hold", scenario.name);
        }
        Command::Run(args) => {
            let scenario = args.common.scenario(args.format.as_deref())?;
            let report = run_scenario(&scenario)?;
            if let Some(out) = &args.out {
                report.write(out)?;
            }
            let t_star = report.constants.as_ref().and_then(|c| c.t_star);
            let t_blow = report.checks.t_blow;
            let ratio = t_blow.zip(t_star).map(|(b, s)| b / s);
            println!(
                "{}: steps={} records={} t_final={:.6} t_blow={} T*={} ratio={}",
                scenario.name,
                report.steps,
                report.records.len(),
                report.records.last().map_or(0.0, |r| r.t),
                fmt_opt(t_blow),
                fmt_opt(t_star),
                fmt_opt(ratio),
            );
            if t_blow.is_some() && !scenario.name.expects_blowup() {
                return Err(blowuplab::Error::BlowupDetected { t_last: t_blow.unwrap_or(f64::NAN) });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
