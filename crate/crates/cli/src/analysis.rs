use std::fmt::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use lipwalk_core::sim::{simulate_2d, SimOptions, WorldState};
use lipwalk_core::{
    eigenvalue_lambda2, inplace_step_length, period1_fixed_point, period2_fixed_point, region_scan,
    special_b, stability_report, step_constants, Axis, LegParams, ModelParams, Regime,
    SpecialGains, StepConstants,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::NamedGain;
use crate::output::{write_csv, write_json};
use crate::{emit, usage, Format, ModelArgs};

fn constants(period: f64, model: &ModelParams) -> Result<StepConstants> {
    if !(period.is_finite() && period > 0.0) {
        return Err(usage(format!(
            "invalid parameter `period`: must be > 0, got {period}"
        )));
    }
    step_constants(period, model).map_err(|e| usage(e.to_string()))
}

fn named_value(gains: &SpecialGains, name: NamedGain) -> f64 {
    match name {
        NamedGain::Min => gains.b_min,
        NamedGain::CapturePoint => gains.b_cp,
        NamedGain::DeadBeat => gains.b_db,
        NamedGain::Max => gains.b_max,
    }
}

const NAMED: [NamedGain; 4] = [
    NamedGain::Min,
    NamedGain::CapturePoint,
    NamedGain::DeadBeat,
    NamedGain::Max,
];

/// Four-decimal text; never prints a negative zero.
pub fn f4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// A gain typed with at most four decimals that equals a named gain
/// rounded to four decimals stands for that gain.
pub fn snap(b: f64, gains: &SpecialGains) -> Option<(NamedGain, f64)> {
    if (b - round4(b)).abs() > 1e-12 {
        return None;
    }
    NAMED
        .into_iter()
        .map(|n| (n, named_value(gains, n)))
        .find(|&(_, v)| (round4(v) - b).abs() < 1e-12)
}

/// Parse `--b`: a number or a gain name. Returns the value used and the
/// name it resolved to, if any.
pub fn parse_gain(
    text: &str,
    period: f64,
    model: &ModelParams,
    exact: bool,
) -> Result<(f64, Option<NamedGain>)> {
    let gains = special_b(&constants(period, model)?, model).map_err(|e| usage(e.to_string()))?;
    if let Some(name) = NamedGain::parse(text) {
        return Ok((named_value(&gains, name), Some(name)));
    }
    let b: f64 = text.parse().map_err(|_| {
        usage(format!(
            "b: expected a number or b_min/b_cp/b_db/b_max, got {text:?}"
        ))
    })?;
    if !b.is_finite() {
        return Err(usage(format!("b: must be finite, got {b}")));
    }
    if !exact {
        if let Some((name, value)) = snap(b, &gains) {
            return Ok((value, Some(name)));
        }
    }
    Ok((b, None))
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Step period T in seconds.
    #[arg(long = "period", short = 'T', allow_hyphen_values = true)]
    pub period: f64,
    /// Gain to classify: a number or b_min, b_cp, b_db, b_max.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Use `--b` as typed instead of matching four-decimal named gains.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Serialize)]
struct Query {
    input: String,
    b: f64,
    matched: Option<NamedGain>,
    lambda2: f64,
    regime: Regime,
}

#[derive(Debug, Serialize)]
struct StabilityOutput {
    g: f64,
    h: f64,
    t_c: f64,
    period: f64,
    b_min: f64,
    b_cp: f64,
    b_db: f64,
    b_max: f64,
    query: Option<Query>,
}

pub fn stability(args: StabilityArgs) -> Result<()> {
    let model = args.model.build()?;
    let consts = constants(args.period, &model)?;
    let gains = special_b(&consts, &model)?;
    let query = match &args.b {
        Some(text) => {
            let (b, matched) = parse_gain(text, args.period, &model, args.exact)?;
            let report = stability_report(b, &consts, &model)?;
            Some(Query {
                input: text.clone(),
                b,
                matched,
                lambda2: report.lambda2,
                regime: report.regime,
            })
        }
        None => None,
    };
    let out = StabilityOutput {
        g: model.g(),
        h: model.h(),
        t_c: model.t_c(),
        period: args.period,
        b_min: gains.b_min,
        b_cp: gains.b_cp,
        b_db: gains.b_db,
        b_max: gains.b_max,
        query,
    };
    if args.format == Format::Json {
        return emit(&(serde_json::to_string_pretty(&out)? + "\n"));
    }
    let mut text = String::new();
    writeln!(
        text,
        "g = {}  h = {}  T_c = {}",
        f4(out.g),
        f4(out.h),
        f4(out.t_c)
    )?;
    writeln!(text, "T     = {}", f4(out.period))?;
    writeln!(text, "b_min = {}", f4(out.b_min))?;
    writeln!(text, "b_cp  = {}", f4(out.b_cp))?;
    writeln!(text, "b_db  = {}", f4(out.b_db))?;
    writeln!(text, "b_max = {}", f4(out.b_max))?;
    if let Some(q) = &out.query {
        let tag = q
            .matched
            .map(|n| format!(" ({})", n.name()))
            .unwrap_or_default();
        writeln!(text, "b     = {}{tag}", f4(q.b))?;
        writeln!(text, "lambda2 = {}", f4(q.lambda2))?;
        writeln!(text, "regime  = {}", q.regime)?;
    }
    emit(&text)
}

#[derive(Debug, Args)]
pub struct GaitArgs {
    #[arg(long = "period", short = 'T', allow_hyphen_values = true)]
    pub period: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub a1: f64,
    /// A number or b_min, b_cp, b_db, b_max; used as typed.
    #[arg(long, allow_hyphen_values = true)]
    pub b1: String,
    /// Defaults to `a1`.
    #[arg(long, allow_hyphen_values = true)]
    pub a2: Option<f64>,
    /// Defaults to `b1`.
    #[arg(long, allow_hyphen_values = true)]
    pub b2: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum GaitKind {
    Period1,
    Period2,
    InPlace,
}

#[derive(Debug, Serialize)]
struct LegReport {
    a: f64,
    b: f64,
    lambda2: f64,
    regime: Regime,
}

#[derive(Debug, Serialize)]
struct GaitOutput {
    kind: GaitKind,
    period: f64,
    x0: Option<f64>,
    v0: Option<f64>,
    step_lengths: Vec<f64>,
    legs: [LegReport; 2],
}

pub fn gait(args: GaitArgs) -> Result<()> {
    let model = args.model.build()?;
    let consts = constants(args.period, &model)?;
    let b1 = parse_gain(&args.b1, args.period, &model, true)?.0;
    let b2 = match &args.b2 {
        Some(text) => parse_gain(text, args.period, &model, true)?.0,
        None => b1,
    };
    let leg1 = LegParams::new(args.a1, b1);
    let leg2 = LegParams::new(args.a2.unwrap_or(args.a1), b2);
    for leg in [&leg1, &leg2] {
        leg.validate().map_err(|e| usage(e.to_string()))?;
    }
    let report = |leg: &LegParams| {
        let lambda2 = eigenvalue_lambda2(leg, &consts, &model);
        LegReport {
            a: leg.a,
            b: leg.b,
            lambda2,
            regime: Regime::from_lambda2(lambda2),
        }
    };

    let (kind, x0, v0, step_lengths) = if leg1 == leg2 {
        let sol = period1_fixed_point(&leg1, &consts, &model)?;
        (
            GaitKind::Period1,
            Some(sol.x0),
            Some(sol.v0),
            sol.step_lengths.as_vec(),
        )
    } else if leg1.b == leg2.b && leg2.a == -leg1.a {
        let (d1, d2) = inplace_step_length(leg1.a, leg1.b, &consts, &model)?;
        let sol = period2_fixed_point(&leg1, &leg2, &consts, &model).ok();
        (
            GaitKind::InPlace,
            sol.map(|s| s.x0),
            sol.map(|s| s.v0),
            vec![d1, d2],
        )
    } else {
        let sol = period2_fixed_point(&leg1, &leg2, &consts, &model)?;
        (
            GaitKind::Period2,
            Some(sol.x0),
            Some(sol.v0),
            sol.step_lengths.as_vec(),
        )
    };

    let out = GaitOutput {
        kind,
        period: args.period,
        x0,
        v0,
        step_lengths,
        legs: [report(&leg1), report(&leg2)],
    };
    if args.format == Format::Json {
        return emit(&(serde_json::to_string_pretty(&out)? + "\n"));
    }
    let mut text = String::new();
    match out.kind {
        GaitKind::Period1 if leg1.a == 0.0 => writeln!(text, "step in-place, d=0"),
        GaitKind::Period1 => writeln!(text, "period-1 gait, d = {}", f4(out.step_lengths[0])),
        GaitKind::Period2 => writeln!(
            text,
            "period-2 gait, d1 = {}, d2 = {}",
            f4(out.step_lengths[0]),
            f4(out.step_lengths[1])
        ),
        GaitKind::InPlace => writeln!(
            text,
            "in-place stepping, d1 = {}, d2 = {}",
            f4(out.step_lengths[0]),
            f4(out.step_lengths[1])
        ),
    }?;
    if let (Some(x0), Some(v0)) = (out.x0, out.v0) {
        writeln!(text, "x0 = {}  v0 = {}", f4(x0), f4(v0))?;
    }
    for (i, leg) in out.legs.iter().enumerate() {
        writeln!(
            text,
            "leg {}: a = {}  b = {}  lambda2 = {}  {}",
            i + 1,
            f4(leg.a),
            f4(leg.b),
            f4(leg.lambda2),
            leg.regime
        )?;
    }
    emit(&text)
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 0.6)]
    pub t_max: f64,
    #[arg(long, default_value_t = 51)]
    pub t_points: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b_max: f64,
    #[arg(long, default_value_t = 101)]
    pub b_points: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Cross-check this many random (T, b) points by simulation.
    #[arg(long, default_value_t = 0)]
    pub verify: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Serialize)]
struct RegionRow {
    #[serde(rename = "T")]
    t: f64,
    b: f64,
    lambda2: f64,
    regime: Regime,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    #[serde(rename = "T")]
    t: f64,
    b_min: f64,
    b_cp: f64,
    b_db: f64,
    b_max: f64,
}

pub fn region(args: RegionArgs) -> Result<()> {
    let model = args.model.build()?;
    let grid = region_scan(
        Axis::new(args.t_min, args.t_max, args.t_points),
        Axis::new(args.b_min, args.b_max, args.b_points),
        &model,
    )
    .map_err(|e| usage(e.to_string()))?;

    let mut text = String::new();
    match args.format {
        Format::Csv => {
            let region_path = args.out.join("region.csv");
            let curves_path = args.out.join("curves.csv");
            write_csv(
                &region_path,
                grid.cells.iter().map(|c| RegionRow {
                    t: c.t,
                    b: c.b,
                    lambda2: c.lambda2,
                    regime: c.regime,
                }),
            )?;
            write_csv(
                &curves_path,
                grid.curves.iter().map(|c| CurveRow {
                    t: c.t,
                    b_min: c.b_min,
                    b_cp: c.b_cp,
                    b_db: c.b_db,
                    b_max: c.b_max,
                }),
            )?;
            writeln!(
                text,
                "{} cells: {}",
                grid.cells.len(),
                region_path.display()
            )?;
            writeln!(text, "curves: {}", curves_path.display())?;
        }
        Format::Json => {
            let path = args.out.join("region.json");
            write_json(&path, &grid)?;
            writeln!(text, "{} cells: {}", grid.cells.len(), path.display())?;
        }
    }

    emit(&text)?;

    if args.verify > 0 {
        let mut text = String::new();
        let mismatches = verify(&args, &model)?;
        writeln!(
            text,
            "verify: {} random points, {} mismatches (seed {})",
            args.verify, mismatches, args.seed
        )?;
        emit(&text)?;
        if mismatches > 0 {
            bail!("{mismatches} points disagree with the eigenvalue classification");
        }
    }
    Ok(())
}

/// Walk from a fixed disturbed state with `a = 0` and compare the growth
/// of the touchdown velocity with the predicted regime. Points too close
/// to a boundary to decide in a finite run are skipped.
fn verify(args: &RegionArgs, model: &ModelParams) -> Result<usize> {
    const STEPS: usize = 60;
    const MARGIN: f64 = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let initial = WorldState::relative(
        lipwalk_core::sim::Vec2::new(-0.3, 0.0),
        lipwalk_core::sim::Vec2::new(2.0, 0.0),
    );
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < args.verify {
        let t = rng.gen_range(args.t_min..=args.t_max);
        let b = rng.gen_range(args.b_min..=args.b_max);
        let consts = constants(t, model)?;
        let report = stability_report(b, &consts, model)?;
        if (report.lambda2.abs() - 1.0).abs() < MARGIN {
            continue;
        }
        checked += 1;
        let leg = LegParams::new(0.0, b);
        let trace = simulate_2d(
            &initial,
            [leg, leg],
            t,
            STEPS,
            &[],
            &SimOptions::default(),
            model,
        )?;
        let v = trace.touchdown_velocities_x();
        let decays = v[STEPS - 1].abs() < v[0].abs();
        if decays != report.regime.is_stable() {
            tracing::warn!("mismatch at T = {t}, b = {b}: regime {}", report.regime);
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping_matches_four_decimal_gains_only() {
        let m = ModelParams::default();
        let gains = special_b(&step_constants(0.3, &m).unwrap(), &m).unwrap();
        let (name, value) = snap(0.4278, &gains).unwrap();
        assert_eq!(name, NamedGain::DeadBeat);
        assert_eq!(value, gains.b_db);
        assert_eq!(snap(0.3162, &gains).unwrap().0, NamedGain::CapturePoint);
        assert!(snap(0.42781, &gains).is_none());
        assert!(snap(0.5, &gains).is_none());
    }

    #[test]
    fn parse_gain_exact_keeps_input() {
        let m = ModelParams::default();
        assert_eq!(parse_gain("0.4278", 0.3, &m, true).unwrap(), (0.4278, None));
        let (b, name) = parse_gain("b_max", 0.3, &m, true).unwrap();
        assert_eq!(name, Some(NamedGain::Max));
        assert!((b - 0.7159323845).abs() < 1e-9);
        assert!(parse_gain("fast", 0.3, &m, false).is_err());
    }
}
