use std::fmt::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use lipwalk_core::sim::{
    measure_gait, simulate_2d, simulate_3d, Mode, RelativeState, Sample, Vec2, WalkTrace,
};
use lipwalk_core::{FootPlacement, LegId, ModelParams};
use serde::Serialize;

use crate::analysis::f4;
use crate::config::{ResolvedScenario, Scenario, ScenarioConfig};
use crate::output::{place, write_csv, write_json};
use crate::{emit, usage, Format};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for output files; overrides the directories in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` also prints the step summary on stdout.
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Serialize)]
struct SampleRow {
    t: f64,
    com_x: f64,
    com_y: f64,
    vx: f64,
    vy: f64,
    stance_x: f64,
    stance_y: f64,
    stance_leg: u8,
    step_index: u64,
}

impl From<&Sample> for SampleRow {
    fn from(s: &Sample) -> Self {
        SampleRow {
            t: s.t,
            com_x: s.com.x,
            com_y: s.com.y,
            vx: s.vel.x,
            vy: s.vel.y,
            stance_x: s.stance_foot.x,
            stance_y: s.stance_foot.y,
            stance_leg: s.stance_leg.into(),
            step_index: s.step_index,
        }
    }
}

#[derive(Debug, Serialize)]
struct StepSummary {
    index: u64,
    time: f64,
    leg: LegId,
    touchdown_velocity: Vec2,
    before: RelativeState,
    after: RelativeState,
    placement: FootPlacement,
    footprint: Vec2,
    heading_deg: f64,
    step_length: Option<f64>,
    step_width: Option<f64>,
    infeasible: bool,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    mode: Mode,
    model: ModelParams,
    n_steps: usize,
    initial_stance: Vec2,
    steps: Vec<StepSummary>,
    last4_step_lengths: Vec<f64>,
    last4_step_widths: Vec<f64>,
    warnings: Vec<String>,
}

pub fn execute(s: &ResolvedScenario) -> lipwalk_core::Result<WalkTrace> {
    match &s.scenario {
        Scenario::TwoD { legs, period } => simulate_2d(
            &s.initial, *legs, *period, s.n_steps, &s.pushes, &s.options, &s.model,
        ),
        Scenario::ThreeD { schedule } => simulate_3d(
            &s.initial, schedule, s.n_steps, &s.pushes, &s.options, &s.model,
        ),
    }
}

fn last4(v: &[f64]) -> Vec<f64> {
    v[v.len().saturating_sub(4)..].to_vec()
}

pub fn summarize(trace: &WalkTrace, model: &ModelParams) -> RunSummary {
    let measured = measure_gait(trace).ok();
    let steps = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| StepSummary {
            index: s.index,
            time: s.time,
            leg: s.leg,
            touchdown_velocity: Vec2::new(s.before.x.v, s.before.y.v),
            before: s.before,
            after: s.after,
            placement: s.placement,
            footprint: s.footprint,
            heading_deg: s.heading.to_degrees(),
            step_length: measured.as_ref().map(|m| m.step_lengths[i]),
            step_width: measured.as_ref().map(|m| m.step_widths[i]),
            infeasible: s.infeasible,
        })
        .collect();
    RunSummary {
        mode: trace.mode,
        model: *model,
        n_steps: trace.steps.len(),
        initial_stance: trace.initial.stance_foot,
        steps,
        last4_step_lengths: measured
            .as_ref()
            .map_or_else(Vec::new, |m| last4(&m.step_lengths)),
        last4_step_widths: measured
            .as_ref()
            .map_or_else(Vec::new, |m| last4(&m.step_widths)),
        warnings: trace.warnings.clone(),
    }
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let (config, scenario) =
        ScenarioConfig::load(&args.config).map_err(|e| usage(e.to_string()))?;
    let trace = execute(&scenario)?;
    for w in &trace.warnings {
        tracing::warn!("{w}");
    }
    let summary = summarize(&trace, &scenario.model);

    let out = args.out.as_deref();
    let samples_path = place(out, &config.output.samples_csv);
    let steps_path = place(out, &config.output.steps_json);
    write_csv(&samples_path, trace.samples.iter().map(SampleRow::from))?;
    write_json(&steps_path, &summary)?;

    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&summary)? + "\n",
        Format::Csv => render_text(&summary, &samples_path, &steps_path)?,
    };
    emit(&text)
}

fn render_text(summary: &RunSummary, samples: &Path, steps: &Path) -> Result<String> {
    let mut text = String::new();
    writeln!(text, "{} steps simulated", summary.n_steps)?;
    if !summary.last4_step_lengths.is_empty() {
        let fmt = |v: &[f64]| v.iter().map(|&d| f4(d)).collect::<Vec<_>>().join(", ");
        writeln!(
            text,
            "last step lengths: {}",
            fmt(&summary.last4_step_lengths)
        )?;
        if summary.mode == Mode::Spatial {
            writeln!(
                text,
                "last step widths:  {}",
                fmt(&summary.last4_step_widths)
            )?;
        }
    }
    for w in &summary.warnings {
        writeln!(text, "warning: {w}")?;
    }
    writeln!(text, "samples: {}", samples.display())?;
    writeln!(text, "steps:   {}", steps.display())?;
    Ok(text)
}
