//! Continuous-phase dynamics of the linear inverted pendulum.
//!
//! During single support the CoM moves at constant height `h` above a point
//! foot, and its horizontal coordinate relative to that foot obeys
//! `x'' = (g/h) x`. The flow has a closed form in `sinh`/`cosh` of `t/T_c`
//! with `T_c = sqrt(h/g)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gravity and CoM height, with the derived time constant cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ModelParams {
    g: f64,
    h: f64,
    t_c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    g: f64,
    h: f64,
}

impl TryFrom<RawModel> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        ModelParams::new(raw.g, raw.h)
    }
}

impl From<ModelParams> for RawModel {
    fn from(m: ModelParams) -> Self {
        RawModel { g: m.g, h: m.h }
    }
}

impl ModelParams {
    pub fn new(g: f64, h: f64) -> Result<Self> {
        let t_c = time_constant(g, h)?;
        Ok(Self { g, h, t_c })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `T_c = sqrt(h/g)`, in seconds.
    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    /// `g/h`, the squared natural frequency of the pendulum.
    pub fn omega_sq(&self) -> f64 {
        self.g / self.h
    }
}

impl Default for ModelParams {
    /// `g = 10 m/s^2`, `h = 1 m`.
    fn default() -> Self {
        ModelParams::new(10.0, 1.0).expect("default model is valid")
    }
}

/// CoM position and velocity along one axis, relative to the stance foot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PendulumState {
    pub x: f64,
    pub v: f64,
}

impl PendulumState {
    pub const ORIGIN: PendulumState = PendulumState { x: 0.0, v: 0.0 };

    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            x: k * self.x,
            v: k * self.v,
        }
    }
}

/// `sinh` and `cosh` of `T/T_c` for a step of period `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConstants {
    pub s_t: f64,
    pub c_t: f64,
    pub period: f64,
}

pub fn time_constant(g: f64, h: f64) -> Result<f64> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::invalid(
            "g",
            format!("must be finite and > 0, got {g}"),
        ));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid(
            "h",
            format!("must be finite and > 0, got {h}"),
        ));
    }
    Ok((h / g).sqrt())
}

fn check_duration(name: &'static str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and >= 0, got {t}"),
        ))
    }
}

pub fn step_constants(t: f64, model: &ModelParams) -> Result<StepConstants> {
    check_duration("t", t)?;
    let tau = t / model.t_c;
    Ok(StepConstants {
        s_t: tau.sinh(),
        c_t: tau.cosh(),
        period: t,
    })
}

/// Closed-form state after time `t` of single support.
pub fn flow(state: PendulumState, t: f64, model: &ModelParams) -> Result<PendulumState> {
    check_duration("t", t)?;
    Ok(flow_unchecked(state, t, model))
}

#[inline]
pub(crate) fn flow_unchecked(state: PendulumState, t: f64, model: &ModelParams) -> PendulumState {
    let tau = t / model.t_c;
    let (s, c) = (tau.sinh(), tau.cosh());
    PendulumState {
        x: state.x * c + model.t_c * state.v * s,
        v: state.x * s / model.t_c + state.v * c,
    }
}

/// Fixed-step classic RK4 on `x'' = (g/h) x`.
///
/// Only used to cross-check [`flow`]. The last step is shortened so the
/// integration ends exactly at `t`.
pub fn flow_numeric(
    state: PendulumState,
    t: f64,
    model: &ModelParams,
    dt: f64,
) -> Result<PendulumState> {
    check_duration("t", t)?;
    if t == 0.0 {
        return Ok(state);
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(
            "dt",
            format!("must be finite and > 0, got {dt}"),
        ));
    }
    let w2 = model.omega_sq();
    let deriv = |x: f64, v: f64| (v, w2 * x);
    let rk4 = |s: PendulumState, h: f64| {
        let (k1x, k1v) = deriv(s.x, s.v);
        let (k2x, k2v) = deriv(s.x + 0.5 * h * k1x, s.v + 0.5 * h * k1v);
        let (k3x, k3v) = deriv(s.x + 0.5 * h * k2x, s.v + 0.5 * h * k2v);
        let (k4x, k4v) = deriv(s.x + h * k3x, s.v + h * k3v);
        PendulumState {
            x: s.x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            v: s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        }
    };

    let full_steps = (t / dt).floor() as u64;
    let mut s = state;
    for _ in 0..full_steps {
        s = rk4(s, dt);
    }
    let rest = t - full_steps as f64 * dt;
    if rest > t * 1e-12 {
        s = rk4(s, rest);
    }
    Ok(s)
}

/// `v^2 - (g/h) x^2`, conserved along the flow.
pub fn orbital_energy(state: PendulumState, model: &ModelParams) -> f64 {
    state.v * state.v - model.omega_sq() * state.x * state.x
}
