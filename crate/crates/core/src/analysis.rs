//! Step-to-step analysis of LFPC walking.
//!
//! Sampling the state right after each touchdown gives a discrete map
//! `q_{k+1} = f(q_k)` that is affine in `q`. Its Jacobian does not depend on
//! the state and has eigenvalues `0` and `λ₂ = c_T - b s_T / T_c`, so the
//! gait converges from anywhere iff `|λ₂| < 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{lfpc_2d, FootPlacement, LegParams};
use crate::error::{Error, Result};
use crate::lip::{ModelParams, PendulumState, StepConstants};

/// Tolerance on `λ₂` when deciding the neutral and dead-beat boundaries.
pub const REGIME_TOLERANCE: f64 = 1e-9;

/// Denominators at or below this magnitude mean the fixed point is not
/// isolated.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `λ₂ > 1`, `b < b_min`: the walker speeds up every step.
    DivergentLow,
    /// `λ₂ = 1`: speed is preserved.
    NeutralLower,
    /// `0 < λ₂ < 1`: decays without changing direction.
    Overdamped,
    /// `λ₂ = 0`: settles in one controlled step.
    Deadbeat,
    /// `-1 < λ₂ < 0`: decays with the velocity reversing each step.
    Underdamped,
    /// `λ₂ = -1`: speed preserved, direction flips every step.
    NeutralUpper,
    /// `λ₂ < -1`, `b > b_max`.
    DivergentHigh,
}

impl Regime {
    pub fn from_lambda2(lambda2: f64) -> Regime {
        let tol = REGIME_TOLERANCE;
        if (lambda2 - 1.0).abs() <= tol {
            Regime::NeutralLower
        } else if (lambda2 + 1.0).abs() <= tol {
            Regime::NeutralUpper
        } else if lambda2.abs() <= tol {
            Regime::Deadbeat
        } else if lambda2 > 1.0 {
            Regime::DivergentLow
        } else if lambda2 > 0.0 {
            Regime::Overdamped
        } else if lambda2 > -1.0 {
            Regime::Underdamped
        } else {
            Regime::DivergentHigh
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::DivergentLow => "divergent_low",
            Regime::NeutralLower => "neutral_lower",
            Regime::Overdamped => "overdamped",
            Regime::Deadbeat => "deadbeat",
            Regime::Underdamped => "underdamped",
            Regime::NeutralUpper => "neutral_upper",
            Regime::DivergentHigh => "divergent_high",
        }
    }

    /// Strictly inside the balance criterion.
    pub fn is_stable(&self) -> bool {
        matches!(
            self,
            Regime::Overdamped | Regime::Deadbeat | Regime::Underdamped
        )
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four named feedback gains for one step period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialGains {
    pub b_min: f64,
    pub b_cp: f64,
    pub b_db: f64,
    pub b_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub b_min: f64,
    pub b_max: f64,
    pub b_db: f64,
    pub b_cp: f64,
    pub b: f64,
    pub lambda2: f64,
    pub regime: Regime,
}

/// `[[dx1/dx0, dx1/dv0], [dv1/dx0, dv1/dv0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapJacobian(pub [[f64; 2]; 2]);

impl ReturnMapJacobian {
    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepLengths {
    Period1(f64),
    Period2(f64, f64),
}

impl StepLengths {
    pub fn as_vec(&self) -> Vec<f64> {
        match *self {
            StepLengths::Period1(d) => vec![d],
            StepLengths::Period2(d1, d2) => vec![d1, d2],
        }
    }
}

/// Initial touchdown state of a periodic gait and the step lengths it
/// produces. Step length is next foothold minus current stance foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub x0: f64,
    pub v0: f64,
    pub step_lengths: StepLengths,
}

impl FixedPointSolution {
    pub fn state(&self) -> PendulumState {
        PendulumState::new(self.x0, self.v0)
    }

    pub fn period_count(&self) -> usize {
        match self.step_lengths {
            StepLengths::Period1(_) => 1,
            StepLengths::Period2(..) => 2,
        }
    }
}

/// State just before the swing foot lands, after one period of single
/// support starting from `q0`.
pub fn touchdown_state(
    q0: PendulumState,
    consts: &StepConstants,
    model: &ModelParams,
) -> PendulumState {
    let t_c = model.t_c();
    PendulumState {
        x: q0.x * consts.c_t + t_c * q0.v * consts.s_t,
        v: q0.x * consts.s_t / t_c + q0.v * consts.c_t,
    }
}

/// Leg exchange: the new stance foot sits at `x_f` from the CoM and the
/// velocity carries over unchanged.
pub fn apply_transition(q_minus: PendulumState, placement: &FootPlacement) -> PendulumState {
    PendulumState {
        x: -placement.x_f,
        v: q_minus.v,
    }
}

/// One step of the return map: fly for one period, then place the foot.
pub fn poincare_map(
    q: PendulumState,
    leg: &LegParams,
    consts: &StepConstants,
    model: &ModelParams,
) -> PendulumState {
    let minus = touchdown_state(q, consts, model);
    apply_transition(minus, &lfpc_2d(minus.v, leg))
}

pub fn return_map_jacobian(
    leg: &LegParams,
    consts: &StepConstants,
    model: &ModelParams,
) -> ReturnMapJacobian {
    let s_over = consts.s_t / model.t_c();
    ReturnMapJacobian([[-leg.b * s_over, -leg.b * consts.c_t], [s_over, consts.c_t]])
}

pub fn eigenvalue_lambda2(leg: &LegParams, consts: &StepConstants, model: &ModelParams) -> f64 {
    lambda2(leg.b, consts, model)
}

#[inline]
fn lambda2(b: f64, consts: &StepConstants, model: &ModelParams) -> f64 {
    consts.c_t - b * consts.s_t / model.t_c()
}

fn require_period(consts: &StepConstants) -> Result<()> {
    if consts.period > 0.0 && consts.s_t > 0.0 {
        Ok(())
    } else {
        Err(Error::DegeneratePeriod {
            period: consts.period,
        })
    }
}

/// Open interval `(b_min, b_max)` of gains with `|λ₂| < 1`.
pub fn balance_bounds(consts: &StepConstants, model: &ModelParams) -> Result<(f64, f64)> {
    require_period(consts)?;
    let t_c = model.t_c();
    Ok((
        t_c * (consts.c_t - 1.0) / consts.s_t,
        t_c * (consts.c_t + 1.0) / consts.s_t,
    ))
}

pub fn special_b(consts: &StepConstants, model: &ModelParams) -> Result<SpecialGains> {
    let (b_min, b_max) = balance_bounds(consts, model)?;
    Ok(SpecialGains {
        b_min,
        b_cp: model.t_c(),
        b_db: model.t_c() * consts.c_t / consts.s_t,
        b_max,
    })
}

pub fn classify_regime(b: f64, consts: &StepConstants, model: &ModelParams) -> Result<Regime> {
    require_period(consts)?;
    Ok(Regime::from_lambda2(lambda2(b, consts, model)))
}

pub fn stability_report(
    b: f64,
    consts: &StepConstants,
    model: &ModelParams,
) -> Result<StabilityReport> {
    let gains = special_b(consts, model)?;
    let lambda2 = lambda2(b, consts, model);
    Ok(StabilityReport {
        b_min: gains.b_min,
        b_max: gains.b_max,
        b_db: gains.b_db,
        b_cp: gains.b_cp,
        b,
        lambda2,
        regime: Regime::from_lambda2(lambda2),
    })
}

/// Fixed point of the return map when both legs share `(a, b)`.
pub fn period1_fixed_point(
    leg: &LegParams,
    consts: &StepConstants,
    model: &ModelParams,
) -> Result<FixedPointSolution> {
    let t_c = model.t_c();
    let (s, c) = (consts.s_t, consts.c_t);
    let denom = t_c - t_c * c + leg.b * s;
    if denom.abs() <= SINGULAR_TOLERANCE {
        return Err(Error::NoIsolatedFixedPoint {
            bound: "b_min",
            denominator: denom,
        });
    }
    let x0 = leg.a * t_c * (c - 1.0) / denom;
    let v0 = -leg.a * s / denom;
    Ok(FixedPointSolution {
        x0,
        v0,
        step_lengths: StepLengths::Period1(-2.0 * x0),
    })
}

/// Two-step periodic gait with leg 1 swinging first.
///
/// The linear system is singular exactly when `λ₂(b₁)·λ₂(b₂) = 1`.
pub fn period2_fixed_point(
    leg1: &LegParams,
    leg2: &LegParams,
    consts: &StepConstants,
    model: &ModelParams,
) -> Result<FixedPointSolution> {
    let t_c = model.t_c();
    let (s, c) = (consts.s_t, consts.c_t);
    let (a1, b1, a2, b2) = (leg1.a, leg1.b, leg2.a, leg2.b);
    let denom =
        t_c * t_c - t_c * t_c * c * c + t_c * b1 * c * s + t_c * b2 * c * s - b1 * b2 * s * s;
    if denom.abs() <= SINGULAR_TOLERANCE {
        return Err(Error::NoIsolatedFixedPoint {
            bound: "lambda2(b1)*lambda2(b2) = 1",
            denominator: denom,
        });
    }
    let x0 = -t_c * (t_c * a2 - a1 * b2 * s - t_c * a2 * c * c + a2 * b1 * c * s) / denom;
    let v0 = -(t_c * a1 * s + t_c * a2 * c * s - a2 * b1 * s * s) / denom;

    // d_k = x_k^- - x_k
    let q0 = PendulumState::new(x0, v0);
    let minus1 = touchdown_state(q0, consts, model);
    let q1 = apply_transition(minus1, &lfpc_2d(minus1.v, leg1));
    let minus2 = touchdown_state(q1, consts, model);
    let q2 = apply_transition(minus2, &lfpc_2d(minus2.v, leg2));
    Ok(FixedPointSolution {
        x0,
        v0,
        step_lengths: StepLengths::Period2(minus1.x - q1.x, minus2.x - q2.x),
    })
}

/// In-place stepping with offsets `(a, -a)` and a shared `b`; returns
/// `(d1, -d1)`.
pub fn inplace_step_length(
    a: f64,
    b: f64,
    consts: &StepConstants,
    model: &ModelParams,
) -> Result<(f64, f64)> {
    let t_c = model.t_c();
    let denom = t_c + t_c * consts.c_t - b * consts.s_t;
    if denom.abs() <= SINGULAR_TOLERANCE {
        return Err(Error::NoIsolatedFixedPoint {
            bound: "b_max",
            denominator: denom,
        });
    }
    let d1 = 2.0 * t_c * a * (consts.c_t + 1.0) / denom;
    Ok((d1, -d1))
}

/// Inclusive, evenly spaced sampling of a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::invalid(name, "range bounds must be finite"));
        }
        if self.min >= self.max {
            return Err(Error::invalid(
                name,
                format!("empty or inverted range [{}, {}]", self.min, self.max),
            ));
        }
        if self.points < 2 {
            return Err(Error::invalid(name, "need at least 2 grid points"));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub t: f64,
    pub b: f64,
    pub lambda2: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurvePoint {
    pub t: f64,
    pub b_min: f64,
    pub b_cp: f64,
    pub b_db: f64,
    pub b_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub t_axis: Axis,
    pub b_axis: Axis,
    /// Row-major: all `b` values for the first `T`, then the next `T`.
    pub cells: Vec<RegionCell>,
    pub curves: Vec<BoundaryCurvePoint>,
}

impl RegionGrid {
    pub fn cell(&self, t_index: usize, b_index: usize) -> &RegionCell {
        &self.cells[t_index * self.b_axis.points + b_index]
    }

    pub fn row(&self, t_index: usize) -> &[RegionCell] {
        let n = self.b_axis.points;
        &self.cells[t_index * n..(t_index + 1) * n]
    }
}

/// Sample `λ₂` and the regime over a `(T, b)` grid, plus the special-gain
/// curves along `T`.
pub fn region_scan(t_axis: Axis, b_axis: Axis, model: &ModelParams) -> Result<RegionGrid> {
    t_axis.validate("t_range")?;
    b_axis.validate("b_range")?;
    if t_axis.min <= 0.0 {
        return Err(Error::invalid(
            "t_range",
            format!("periods must be > 0, got min {}", t_axis.min),
        ));
    }

    let rows: Vec<(Vec<RegionCell>, BoundaryCurvePoint)> = (0..t_axis.points)
        .into_par_iter()
        .map(|i| {
            let t = t_axis.value(i);
            let consts = crate::lip::step_constants(t, model)?;
            let gains = special_b(&consts, model)?;
            let cells = b_axis
                .values()
                .map(|b| {
                    let lambda2 = lambda2(b, &consts, model);
                    RegionCell {
                        t,
                        b,
                        lambda2,
                        regime: Regime::from_lambda2(lambda2),
                    }
                })
                .collect();
            let curve = BoundaryCurvePoint {
                t,
                b_min: gains.b_min,
                b_cp: gains.b_cp,
                b_db: gains.b_db,
                b_max: gains.b_max,
            };
            Ok((cells, curve))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(t_axis.points * b_axis.points);
    let mut curves = Vec::with_capacity(t_axis.points);
    for (row, curve) in rows {
        cells.extend(row);
        curves.push(curve);
    }
    Ok(RegionGrid {
        t_axis,
        b_axis,
        cells,
        curves,
    })
}
