//! Linear foot placement: the next foothold, relative to the CoM at
//! touchdown, is an affine function of the CoM velocity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-leg gains of the 2D law `x_f = a + b v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegParams {
    /// Position offset (m). Negative values are legal.
    pub a: f64,
    /// Velocity feedback coefficient (s).
    pub b: f64,
}

impl LegParams {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::invalid(
                "a",
                format!("must be finite, got {}", self.a),
            ));
        }
        if !self.b.is_finite() {
            return Err(Error::invalid(
                "b",
                format!("must be finite, got {}", self.b),
            ));
        }
        Ok(())
    }
}

/// Controller knobs for 3D walking.
///
/// `theta` is the walking direction measured from `+y` towards `+x`, so the
/// heading unit vector is `(sin θ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gait3DParams {
    /// Longitudinal offset (m); positive walks forward along the heading.
    pub a_l: f64,
    /// Lateral offset (m).
    pub a_w: f64,
    /// Heading in radians.
    pub theta: f64,
    pub b: f64,
    pub period: f64,
}

impl Gait3DParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_l", self.a_l),
            ("a_w", self.a_w),
            ("theta", self.theta),
            ("b", self.b),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid(
                "period",
                format!("must be finite and > 0, got {}", self.period),
            ));
        }
        Ok(())
    }

    /// Unit vector of the walking direction in the world frame.
    pub fn heading(&self) -> (f64, f64) {
        (self.theta.sin(), self.theta.cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum LegId {
    One,
    Two,
}

impl LegId {
    pub fn other(self) -> LegId {
        match self {
            LegId::One => LegId::Two,
            LegId::Two => LegId::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            LegId::One => 0,
            LegId::Two => 1,
        }
    }
}

impl TryFrom<u8> for LegId {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(LegId::One),
            2 => Ok(LegId::Two),
            _ => Err(Error::invalid(
                "leg_id",
                format!("must be 1 or 2, got {id}"),
            )),
        }
    }
}

impl From<LegId> for u8 {
    fn from(leg: LegId) -> u8 {
        match leg {
            LegId::One => 1,
            LegId::Two => 2,
        }
    }
}

impl std::fmt::Display for LegId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Foothold relative to the CoM at touchdown. `y_f` is zero in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FootPlacement {
    pub x_f: f64,
    pub y_f: f64,
}

impl FootPlacement {
    pub fn norm(&self) -> f64 {
        self.x_f.hypot(self.y_f)
    }
}

pub fn lfpc_2d(v: f64, leg: &LegParams) -> FootPlacement {
    FootPlacement {
        x_f: leg.a + leg.b * v,
        y_f: 0.0,
    }
}

/// The 3D law: a θ-rotated pair of offsets plus velocity feedback on each
/// axis. Leg 1 takes the `-a_w` side at θ = 0.
pub fn lfpc_3d(vx: f64, vy: f64, leg: LegId, gait: &Gait3DParams) -> FootPlacement {
    let (sin, cos) = gait.theta.sin_cos();
    let a_w = match leg {
        LegId::One => gait.a_w,
        LegId::Two => -gait.a_w,
    };
    FootPlacement {
        x_f: (-gait.a_l * sin - a_w * cos) + gait.b * vx,
        y_f: (-gait.a_l * cos + a_w * sin) + gait.b * vy,
    }
}
