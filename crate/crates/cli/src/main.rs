use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

mod analysis;
mod config;
mod output;
mod simulate;

/// Linear foot placement control on the linear inverted pendulum.
#[derive(Debug, Parser)]
#[command(name = "lipwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// Human-readable text on stdout, CSV files for tabular output.
    #[default]
    Csv,
    Json,
}

/// Gravity and CoM height.
#[derive(Debug, Clone, Copy, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 10.0)]
    pub g: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file and write dense samples plus a per-step summary.
    Simulate(simulate::SimulateArgs),
    /// Special gains, eigenvalue and regime for one step period.
    Stability(analysis::StabilityArgs),
    /// Sample the regime over a (T, b) grid.
    Region(analysis::RegionArgs),
    /// Periodic gait solutions for given leg parameters.
    Gait(analysis::GaitArgs),
    /// Serve interactive sessions over WebSocket.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value_t = 50.0)]
    tick_rate: f64,
    #[arg(long, default_value_t = 256)]
    footprint_cap: usize,
    #[arg(long = "period", default_value_t = 0.3)]
    period: f64,
    #[arg(long, default_value_t = 0.0)]
    a_l: f64,
    #[arg(long, default_value_t = 0.0)]
    a_w: f64,
    #[arg(long, default_value_t = 0.0)]
    theta_deg: f64,
    /// Feedback gain: a number or b_min, b_cp, b_db, b_max.
    #[arg(long, default_value = "b_db")]
    b: String,
    #[command(flatten)]
    model: ModelArgs,
}

/// Bad input from the user: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl ModelArgs {
    pub fn build(&self) -> Result<lipwalk_core::ModelParams> {
        lipwalk_core::ModelParams::new(self.g, self.h).map_err(|e| usage(e.to_string()))
    }
}

/// Write to stdout; a closed pipe (`| head`) is not an error.
pub fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    let model = args.model.build()?;
    let b = analysis::parse_gain(&args.b, args.period, &model, true)?.0;
    let mut config = lipwalk_session::SessionConfig::new(
        model,
        lipwalk_core::Gait3DParams {
            a_l: args.a_l,
            a_w: args.a_w,
            theta: args.theta_deg.to_radians(),
            b,
            period: args.period,
        },
    );
    config.tick_rate = args.tick_rate;
    config.footprint_cap = args.footprint_cap;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
        let addr = listener.local_addr()?;
        emit(&format!(
            "listening on ws://{addr}{}\n",
            lipwalk_session::server::SESSION_PATH
        ))?;
        lipwalk_session::server::serve(listener, config).await?;
        Ok(())
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("LIPWALK_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Stability(args) => analysis::stability(args),
        Command::Region(args) => analysis::region(args),
        Command::Gait(args) => analysis::gait(args),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
