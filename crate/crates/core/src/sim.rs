//! Multi-step walking in the world frame.
//!
//! Single support follows the closed-form pendulum flow on each horizontal
//! axis independently. Touchdown happens every `T` seconds; the swing leg
//! lands where the foot placement law says, and the CoM velocity carries
//! over unchanged. The first step is never controlled since placement only
//! happens at touchdown.

use serde::{Deserialize, Serialize};

use crate::controller::{lfpc_2d, lfpc_3d, FootPlacement, Gait3DParams, LegId, LegParams};
use crate::error::{Error, Result};
use crate::lip::{flow_unchecked, ModelParams, PendulumState};

/// Sample offsets within a step stop this far short of the touchdown.
const SAMPLE_EPS: f64 = 1e-12;

/// A touchdown due within this much after a requested time counts as
/// already due, so clock grids that accumulate differently agree on which
/// side of a touchdown they sit.
pub const TOUCHDOWN_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(rename = "2d")]
    Planar,
    #[serde(rename = "3d")]
    Spatial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: f64,
    /// Touchdowns so far.
    pub step_index: u64,
    pub com: Vec2,
    pub vel: Vec2,
    pub stance_foot: Vec2,
    pub stance_leg: LegId,
}

impl WorldState {
    /// Standing still over a foot at the origin. Leg 2 is the stance leg so
    /// leg 1 swings first.
    pub fn at_rest() -> Self {
        Self {
            time: 0.0,
            step_index: 0,
            com: Vec2::ZERO,
            vel: Vec2::ZERO,
            stance_foot: Vec2::ZERO,
            stance_leg: LegId::Two,
        }
    }

    /// Stance foot at the origin with the given CoM offset and velocity.
    pub fn relative(com: Vec2, vel: Vec2) -> Self {
        Self {
            com,
            vel,
            ..Self::at_rest()
        }
    }

    pub fn relative_x(&self) -> PendulumState {
        PendulumState::new(self.com.x - self.stance_foot.x, self.vel.x)
    }

    pub fn relative_y(&self) -> PendulumState {
        PendulumState::new(self.com.y - self.stance_foot.y, self.vel.y)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time.is_finite() {
            return Err(Error::invalid("initial.time", "must be finite"));
        }
        if !(self.com.is_finite() && self.vel.is_finite() && self.stance_foot.is_finite()) {
            return Err(Error::invalid(
                "initial",
                "positions and velocities must be finite",
            ));
        }
        Ok(())
    }
}

/// Instantaneous velocity change (impulse over mass).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushEvent {
    pub at_time: f64,
    pub delta_v: Vec2,
}

impl PushEvent {
    pub fn new(at_time: f64, dvx: f64, dvy: f64) -> Self {
        Self {
            at_time,
            delta_v: Vec2::new(dvx, dvy),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.at_time.is_finite() && self.at_time >= 0.0) {
            return Err(Error::invalid(
                "pushes.at_time",
                format!("must be finite and >= 0, got {}", self.at_time),
            ));
        }
        if !self.delta_v.is_finite() {
            return Err(Error::invalid("pushes.delta_v", "must be finite"));
        }
        Ok(())
    }
}

/// Gait parameters in force from touchdown `from_step` onward (step `k`
/// ends with touchdown `k`, counting from 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitChange {
    pub from_step: u64,
    pub gait: Gait3DParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    /// Dense sampling rate in Hz. `None` records touchdowns only.
    pub sample_rate: Option<f64>,
    /// Flag placements farther than this from the CoM as infeasible.
    pub reach_limit: Option<f64>,
}

impl SimOptions {
    pub fn sampled(rate: f64) -> Self {
        Self {
            sample_rate: Some(rate),
            reach_limit: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(r) = self.sample_rate {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(
                    "sample_rate",
                    format!("must be > 0, got {r}"),
                ));
            }
        }
        if let Some(l) = self.reach_limit {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid(
                    "reach_limit",
                    format!("must be > 0, got {l}"),
                ));
            }
        }
        Ok(())
    }
}

/// Pendulum state on both axes, relative to the stance foot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelativeState {
    pub x: PendulumState,
    pub y: PendulumState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Touchdown count after this step (1-based).
    pub index: u64,
    pub time: f64,
    /// The leg that just landed and is now in stance.
    pub leg: LegId,
    /// Relative to the old stance foot, just before touchdown.
    pub before: RelativeState,
    /// Relative to the new stance foot, just after touchdown.
    pub after: RelativeState,
    pub placement: FootPlacement,
    pub footprint: Vec2,
    /// Heading of the gait that placed this foot (0 in 2D).
    pub heading: f64,
    pub infeasible: bool,
}

impl StepRecord {
    /// Touchdown velocity along the walking axis used by 2D runs.
    pub fn velocity_x(&self) -> f64 {
        self.before.x.v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub com: Vec2,
    pub vel: Vec2,
    pub stance_foot: Vec2,
    pub stance_leg: LegId,
    pub step_index: u64,
}

impl From<&WorldState> for Sample {
    fn from(s: &WorldState) -> Self {
        Sample {
            t: s.time,
            com: s.com,
            vel: s.vel,
            stance_foot: s.stance_foot,
            stance_leg: s.stance_leg,
            step_index: s.step_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub mode: Mode,
    pub initial: WorldState,
    pub steps: Vec<StepRecord>,
    pub samples: Vec<Sample>,
    pub warnings: Vec<String>,
}

impl WalkTrace {
    /// Initial stance foot followed by every footprint.
    pub fn footprints(&self) -> Vec<Vec2> {
        std::iter::once(self.initial.stance_foot)
            .chain(self.steps.iter().map(|s| s.footprint))
            .collect()
    }

    pub fn touchdown_velocities_x(&self) -> Vec<f64> {
        self.steps.iter().map(StepRecord::velocity_x).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Policy {
    Planar { legs: [LegParams; 2], period: f64 },
    Spatial { gait: Gait3DParams },
}

/// Walker state at its last event, kept relative to the stance foot so
/// small offsets far from the origin keep full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Anchor {
    time: f64,
    step_index: u64,
    stance_foot: Vec2,
    stance_leg: LegId,
    rel: RelativeState,
}

impl Anchor {
    fn world(&self) -> WorldState {
        WorldState {
            time: self.time,
            step_index: self.step_index,
            com: Vec2::new(
                self.stance_foot.x + self.rel.x.x,
                self.stance_foot.y + self.rel.y.x,
            ),
            vel: Vec2::new(self.rel.x.v, self.rel.y.v),
            stance_foot: self.stance_foot,
            stance_leg: self.stance_leg,
        }
    }
}

/// Incremental walking engine.
///
/// State is kept as an anchor (the last touchdown or push) and every query
/// flows forward from it in closed form, so sampling never accumulates
/// error and two callers that hit the same events get identical numbers.
#[derive(Debug, Clone)]
pub struct Walker {
    model: ModelParams,
    anchor: Anchor,
    step_start: f64,
    step_period: f64,
    policy: Policy,
    reach_limit: Option<f64>,
}

impl Walker {
    pub fn planar(
        initial: WorldState,
        legs: [LegParams; 2],
        period: f64,
        model: ModelParams,
    ) -> Result<Self> {
        initial.validate()?;
        for leg in &legs {
            leg.validate()?;
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::invalid(
                "period",
                format!("must be > 0, got {period}"),
            ));
        }
        let mut anchor = Self::anchor_from(&initial);
        anchor.stance_foot.y = 0.0;
        anchor.rel.y = PendulumState::ORIGIN;
        Ok(Self {
            model,
            anchor,
            step_start: initial.time,
            step_period: period,
            policy: Policy::Planar { legs, period },
            reach_limit: None,
        })
    }

    pub fn spatial(initial: WorldState, gait: Gait3DParams, model: ModelParams) -> Result<Self> {
        initial.validate()?;
        gait.validate()?;
        Ok(Self {
            model,
            anchor: Self::anchor_from(&initial),
            step_start: initial.time,
            step_period: gait.period,
            policy: Policy::Spatial { gait },
            reach_limit: None,
        })
    }

    fn anchor_from(initial: &WorldState) -> Anchor {
        Anchor {
            time: initial.time,
            step_index: initial.step_index,
            stance_foot: initial.stance_foot,
            stance_leg: initial.stance_leg,
            rel: RelativeState {
                x: initial.relative_x(),
                y: initial.relative_y(),
            },
        }
    }

    pub fn with_reach_limit(mut self, limit: Option<f64>) -> Self {
        self.reach_limit = limit;
        self
    }

    pub fn mode(&self) -> Mode {
        match self.policy {
            Policy::Planar { .. } => Mode::Planar,
            Policy::Spatial { .. } => Mode::Spatial,
        }
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    /// The gait used at the next touchdown (3D only).
    pub fn gait(&self) -> Option<Gait3DParams> {
        match self.policy {
            Policy::Spatial { gait } => Some(gait),
            Policy::Planar { .. } => None,
        }
    }

    /// Latch a new 3D gait. It places the next foot and sets the duration
    /// of the steps after it; the step in progress keeps its period.
    pub fn set_gait(&mut self, gait: Gait3DParams) -> Result<()> {
        gait.validate()?;
        match &mut self.policy {
            Policy::Spatial { gait: g } => {
                *g = gait;
                Ok(())
            }
            Policy::Planar { .. } => Err(Error::invalid("gait", "2D walker has no 3D gait")),
        }
    }

    pub fn step_index(&self) -> u64 {
        self.anchor.step_index
    }

    pub fn anchor_time(&self) -> f64 {
        self.anchor.time
    }

    pub fn next_touchdown(&self) -> f64 {
        self.step_start + self.step_period
    }

    fn anchor_at(&self, t: f64) -> Anchor {
        debug_assert!(
            t >= self.anchor.time - TOUCHDOWN_SNAP && t <= self.next_touchdown() + TOUCHDOWN_SNAP
        );
        let dt = t - self.anchor.time;
        let mut out = self.anchor;
        out.time = t;
        out.rel.x = flow_unchecked(self.anchor.rel.x, dt, &self.model);
        if self.mode() == Mode::Spatial {
            out.rel.y = flow_unchecked(self.anchor.rel.y, dt, &self.model);
        }
        out
    }

    /// World state at `t`, which must lie between the anchor and the next
    /// touchdown.
    pub fn state_at(&self, t: f64) -> WorldState {
        self.anchor_at(t).world()
    }

    /// Pendulum state relative to the stance foot at `t`.
    pub fn relative_at(&self, t: f64) -> RelativeState {
        self.anchor_at(t).rel
    }

    /// World state at the last event (start, touchdown or push).
    pub fn current(&self) -> WorldState {
        self.anchor.world()
    }

    /// Add `delta_v` to the CoM velocity at time `t`. In 2D the `y`
    /// component is dropped.
    pub fn apply_push(&mut self, t: f64, delta_v: Vec2) {
        let mut a = self.anchor_at(t);
        a.rel.x.v += delta_v.x;
        if self.mode() == Mode::Spatial {
            a.rel.y.v += delta_v.y;
        }
        self.anchor = a;
    }

    /// Run single support to the end of the current step and land the
    /// swing foot.
    pub fn touchdown(&mut self) -> StepRecord {
        let t = self.next_touchdown();
        let pre = self.anchor_at(t);
        let swing = pre.stance_leg.other();
        let (placement, heading) = match self.policy {
            Policy::Planar { legs, .. } => (lfpc_2d(pre.rel.x.v, &legs[swing.index()]), 0.0),
            Policy::Spatial { gait } => {
                (lfpc_3d(pre.rel.x.v, pre.rel.y.v, swing, &gait), gait.theta)
            }
        };
        let com = pre.world().com;
        let footprint = Vec2::new(com.x + placement.x_f, com.y + placement.y_f);

        let post = Anchor {
            time: t,
            step_index: pre.step_index + 1,
            stance_foot: footprint,
            stance_leg: swing,
            rel: RelativeState {
                x: PendulumState::new(-placement.x_f, pre.rel.x.v),
                y: PendulumState::new(-placement.y_f, pre.rel.y.v),
            },
        };

        let record = StepRecord {
            index: post.step_index,
            time: t,
            leg: swing,
            before: pre.rel,
            after: post.rel,
            placement,
            footprint,
            heading,
            infeasible: self.reach_limit.is_some_and(|l| placement.norm() > l),
        };

        self.anchor = post;
        self.step_start = t;
        self.step_period = match self.policy {
            Policy::Planar { period, .. } => period,
            Policy::Spatial { gait } => gait.period,
        };
        record
    }

    /// Land every foot due at or before `t` (within [`TOUCHDOWN_SNAP`]).
    pub fn advance_to(&mut self, t: f64) -> Vec<StepRecord> {
        let mut out = Vec::new();
        while self.next_touchdown() <= t + TOUCHDOWN_SNAP {
            out.push(self.touchdown());
        }
        out
    }
}

fn validate_common(n_steps: usize, pushes: &[PushEvent], options: &SimOptions) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be >= 1"));
    }
    pushes.iter().try_for_each(PushEvent::validate)?;
    options.validate()
}

fn sorted_pushes(pushes: &[PushEvent]) -> Vec<PushEvent> {
    let mut sorted = pushes.to_vec();
    // stable: ties keep input order
    sorted.sort_by(|a, b| a.at_time.total_cmp(&b.at_time));
    sorted
}

/// Drive a walker for `n_steps`, interleaving pushes and dense samples.
/// `before_step(k, walker)` runs at the start of step `k`.
fn run(
    mut walker: Walker,
    n_steps: usize,
    pushes: &[PushEvent],
    options: &SimOptions,
    mut before_step: impl FnMut(u64, &mut Walker),
) -> WalkTrace {
    let initial = walker.current();
    let mut pending = sorted_pushes(pushes).into_iter().peekable();
    let mut warnings = Vec::new();
    while let Some(p) = pending.next_if(|p| p.at_time < initial.time) {
        warnings.push(format!(
            "push at t={} precedes the start time {}; ignored",
            p.at_time, initial.time
        ));
    }

    let mut steps = Vec::with_capacity(n_steps);
    let mut samples = Vec::new();
    for k in 0..n_steps as u64 {
        before_step(k, &mut walker);
        let start = walker.anchor_time();
        let end = walker.next_touchdown();
        let period = end - start;
        let mut j = 0u64;
        loop {
            let offset = options.sample_rate.map(|r| j as f64 / r);
            let sample_t = match offset {
                Some(o) if o < period - SAMPLE_EPS => Some(start + o),
                _ => None,
            };
            // a sample at a push instant shows the state just before the push
            while let Some(p) =
                pending.next_if(|p| p.at_time < end && sample_t.is_none_or(|s| p.at_time < s))
            {
                walker.apply_push(p.at_time, p.delta_v);
            }
            match sample_t {
                Some(s) => samples.push(Sample::from(&walker.state_at(s))),
                None => break,
            }
            j += 1;
        }
        steps.push(walker.touchdown());
    }
    if options.sample_rate.is_some() {
        samples.push(Sample::from(&walker.current()));
    }
    for p in pending {
        warnings.push(format!(
            "push at t={} is beyond the simulation horizon {}; ignored",
            p.at_time,
            walker.anchor_time()
        ));
    }

    WalkTrace {
        mode: walker.mode(),
        initial,
        steps,
        samples,
        warnings,
    }
}

/// Planar walking with per-leg gains; leg 1 swings first unless the
/// initial state says leg 1 is already in stance.
pub fn simulate_2d(
    initial: &WorldState,
    legs: [LegParams; 2],
    period: f64,
    n_steps: usize,
    pushes: &[PushEvent],
    options: &SimOptions,
    model: &ModelParams,
) -> Result<WalkTrace> {
    validate_common(n_steps, pushes, options)?;
    let walker =
        Walker::planar(*initial, legs, period, *model)?.with_reach_limit(options.reach_limit);
    Ok(run(walker, n_steps, pushes, options, |_, _| {}))
}

pub fn validate_schedule(schedule: &[GaitChange]) -> Result<()> {
    let first = schedule
        .first()
        .ok_or_else(|| Error::invalid("schedule", "must not be empty"))?;
    if first.from_step != 0 {
        return Err(Error::invalid(
            "schedule",
            format!("must start at step 0, starts at {}", first.from_step),
        ));
    }
    for pair in schedule.windows(2) {
        if pair[1].from_step <= pair[0].from_step {
            return Err(Error::invalid(
                "schedule",
                format!(
                    "entries must be strictly increasing in from_step ({} then {})",
                    pair[0].from_step, pair[1].from_step
                ),
            ));
        }
    }
    schedule.iter().try_for_each(|c| c.gait.validate())
}

/// Gait in force for touchdown `k`.
pub fn gait_at(schedule: &[GaitChange], k: u64) -> &Gait3DParams {
    let i = schedule.partition_point(|c| c.from_step <= k);
    &schedule[i.saturating_sub(1)].gait
}

/// 3D walking: both horizontal axes are independent pendulums; the gait
/// schedule is consulted at every touchdown.
pub fn simulate_3d(
    initial: &WorldState,
    schedule: &[GaitChange],
    n_steps: usize,
    pushes: &[PushEvent],
    options: &SimOptions,
    model: &ModelParams,
) -> Result<WalkTrace> {
    validate_common(n_steps, pushes, options)?;
    validate_schedule(schedule)?;
    let walker =
        Walker::spatial(*initial, schedule[0].gait, *model)?.with_reach_limit(options.reach_limit);
    Ok(run(walker, n_steps, pushes, options, |k, w| {
        w.set_gait(*gait_at(schedule, k))
            .expect("schedule validated above");
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitMeasurement {
    /// Displacement along the heading, per step.
    pub step_lengths: Vec<f64>,
    /// Displacement perpendicular to the heading (towards `+x` at θ = 0).
    pub step_widths: Vec<f64>,
    /// Heading used for the decomposition, radians.
    pub headings: Vec<f64>,
}

/// Per-step displacement between consecutive footprints, split along and
/// across the heading active at each touchdown. In 2D the length is the
/// signed `x` displacement and widths are zero.
pub fn measure_gait(trace: &WalkTrace) -> Result<GaitMeasurement> {
    if trace.steps.len() < 3 {
        return Err(Error::invalid(
            "trace",
            format!("need at least 3 steps, got {}", trace.steps.len()),
        ));
    }
    let feet = trace.footprints();
    let mut m = GaitMeasurement {
        step_lengths: Vec::with_capacity(trace.steps.len()),
        step_widths: Vec::with_capacity(trace.steps.len()),
        headings: Vec::with_capacity(trace.steps.len()),
    };
    for (pair, step) in feet.windows(2).zip(&trace.steps) {
        let d = pair[1] - pair[0];
        let (length, width) = match trace.mode {
            Mode::Planar => (d.x, 0.0),
            Mode::Spatial => {
                let (s, c) = step.heading.sin_cos();
                (d.x * s + d.y * c, d.x * c - d.y * s)
            }
        };
        m.step_lengths.push(length);
        m.step_widths.push(width);
        m.headings.push(step.heading);
    }
    Ok(m)
}

/// Direction of each two-step stride `f[i+2] - f[i]`, measured from `+y`
/// towards `+x` like the gait heading. Strides cancel the side-to-side
/// alternation of the feet.
pub fn stride_headings(trace: &WalkTrace) -> Vec<f64> {
    trace
        .footprints()
        .windows(3)
        .map(|w| {
            let d = w[2] - w[0];
            d.x.atan2(d.y)
        })
        .collect()
}
