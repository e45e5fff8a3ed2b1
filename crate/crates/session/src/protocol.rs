//! Wire messages. Every message is one JSON object on its own line; the
//! `type` field selects the variant.

use lipwalk_core::sim::{Vec2, WorldState};
use lipwalk_core::{Gait3DParams, LegId, SpecialGains};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: &str = "1";

/// Gait parameters as they cross the wire: heading in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitWire {
    pub a_l: f64,
    pub a_w: f64,
    pub theta_deg: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub period: f64,
}

impl From<&Gait3DParams> for GaitWire {
    fn from(g: &Gait3DParams) -> Self {
        GaitWire {
            a_l: g.a_l,
            a_w: g.a_w,
            theta_deg: g.theta.to_degrees(),
            b: g.b,
            period: g.period,
        }
    }
}

impl From<&GaitWire> for Gait3DParams {
    fn from(g: &GaitWire) -> Self {
        Gait3DParams {
            a_l: g.a_l,
            a_w: g.a_w,
            theta: g.theta_deg.to_radians(),
            b: g.b,
            period: g.period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SessionCommand {
    SetGait {
        a_l: f64,
        a_w: f64,
        theta_deg: f64,
        b: f64,
        #[serde(rename = "T")]
        period: f64,
    },
    Push {
        dvx: f64,
        dvy: f64,
    },
    Run {
        speed: f64,
    },
    Pause,
    StepOnce,
    Reset {
        initial: WorldState,
    },
}

impl SessionCommand {
    pub fn set_gait(g: &GaitWire) -> Self {
        SessionCommand::SetGait {
            a_l: g.a_l,
            a_w: g.a_w,
            theta_deg: g.theta_deg,
            b: g.b,
            period: g.period,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("field `{name}` must be finite"))
            }
        };
        match self {
            SessionCommand::SetGait {
                a_l,
                a_w,
                theta_deg,
                b,
                period,
            } => {
                finite("a_l", *a_l)?;
                finite("a_w", *a_w)?;
                finite("theta_deg", *theta_deg)?;
                finite("b", *b)?;
                finite("T", *period)?;
                if *period <= 0.0 {
                    return Err(format!("field `T` must be > 0, got {period}"));
                }
            }
            SessionCommand::Push { dvx, dvy } => {
                finite("dvx", *dvx)?;
                finite("dvy", *dvy)?;
            }
            SessionCommand::Run { speed } => {
                finite("speed", *speed)?;
                if *speed <= 0.0 {
                    return Err(format!("field `speed` must be > 0, got {speed}"));
                }
            }
            SessionCommand::Reset { initial } => {
                initial.validate().map_err(|e| e.to_string())?;
            }
            SessionCommand::Pause | SessionCommand::StepOnce => {}
        }
        Ok(())
    }
}

/// Parse and validate one line of client input.
pub fn parse_command(line: &str) -> Result<SessionCommand, String> {
    let cmd: SessionCommand =
        serde_json::from_str(line.trim()).map_err(|e| format!("malformed command: {e}"))?;
    cmd.validate()?;
    Ok(cmd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    Touchdown,
    Push,
    GaitChange,
    Reset,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelWire {
    pub g: f64,
    pub h: f64,
    pub t_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionUpdate {
    /// Ticks since the last reset.
    pub tick: u64,
    pub t: f64,
    pub step_index: u64,
    pub com: Vec2,
    pub vel: Vec2,
    pub stance_foot: Vec2,
    pub stance_leg: LegId,
    /// Gait that will place the next foot.
    pub gait: GaitWire,
    /// Named gains for the active gait period.
    pub gains: SpecialGains,
    pub last_event: EventTag,
    pub running: bool,
    pub speed: f64,
    /// Oldest first, newest last; bounded by the session's cap.
    pub footprints: Vec<Vec2>,
    /// Wall-clock milliseconds since the session started. Not part of the
    /// deterministic stream.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        protocol: String,
        model: ModelWire,
        tick_rate: f64,
        footprint_cap: usize,
        gait: GaitWire,
        gains: SpecialGains,
    },
    Update(SessionUpdate),
    Error {
        reason: String,
    },
}

impl ServerMessage {
    /// Serialized form including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("server messages always serialize");
        s.push('\n');
        s
    }
}
