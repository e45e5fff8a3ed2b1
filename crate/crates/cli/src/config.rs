//! Scenario files: JSON, unknown fields rejected, headings in degrees.

use std::path::{Path, PathBuf};

use lipwalk_core::sim::{GaitChange, PushEvent, SimOptions, Vec2, WorldState};
use lipwalk_core::{special_b, step_constants, Gait3DParams, LegParams, ModelParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedGain {
    #[serde(rename = "b_min")]
    Min,
    #[serde(rename = "b_cp")]
    CapturePoint,
    #[serde(rename = "b_db")]
    DeadBeat,
    #[serde(rename = "b_max")]
    Max,
}

impl NamedGain {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedGain::Min => "b_min",
            NamedGain::CapturePoint => "b_cp",
            NamedGain::DeadBeat => "b_db",
            NamedGain::Max => "b_max",
        }
    }

    pub fn resolve(self, period: f64, model: &ModelParams) -> lipwalk_core::Result<f64> {
        let g = special_b(&step_constants(period, model)?, model)?;
        Ok(match self {
            NamedGain::Min => g.b_min,
            NamedGain::CapturePoint => g.b_cp,
            NamedGain::DeadBeat => g.b_db,
            NamedGain::Max => g.b_max,
        })
    }
}

/// A feedback gain given either as a number or by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Value(f64),
    Named(NamedGain),
}

impl Gain {
    pub fn resolve(self, period: f64, model: &ModelParams) -> lipwalk_core::Result<f64> {
        match self {
            Gain::Value(b) => Ok(b),
            Gain::Named(n) => n.resolve(period, model),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeConfig {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

/// CoM offset and velocity relative to the stance foot, plus where that
/// foot is.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub stance_x: f64,
    pub stance_y: f64,
    pub time: f64,
}

impl InitialConfig {
    pub fn world_state(&self) -> WorldState {
        WorldState {
            time: self.time,
            step_index: 0,
            com: Vec2::new(self.stance_x + self.x, self.stance_y + self.y),
            vel: Vec2::new(self.vx, self.vy),
            stance_foot: Vec2::new(self.stance_x, self.stance_y),
            ..WorldState::at_rest()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub a: f64,
    pub b: Gain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitEntryConfig {
    pub from_step: u64,
    pub a_l: f64,
    pub a_w: f64,
    pub theta_deg: f64,
    pub b: Gain,
    /// Overrides the scenario period for this entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushConfig {
    pub at_time: f64,
    #[serde(default)]
    pub dvx: f64,
    #[serde(default)]
    pub dvy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_samples_csv")]
    pub samples_csv: PathBuf,
    #[serde(default = "default_steps_json")]
    pub steps_json: PathBuf,
}

fn default_samples_csv() -> PathBuf {
    PathBuf::from("samples.csv")
}

fn default_steps_json() -> PathBuf {
    PathBuf::from("steps.json")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            samples_csv: default_samples_csv(),
            steps_json: default_steps_json(),
        }
    }
}

fn default_sample_rate() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub model: ModelParams,
    pub mode: ModeConfig,
    pub period: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legs: Option<[LegConfig; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<GaitEntryConfig>>,
    #[serde(default)]
    pub pushes: Vec<PushConfig>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach_limit: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A config problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source, line, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Everything the simulator needs, with gains resolved and angles in
/// radians.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    TwoD { legs: [LegParams; 2], period: f64 },
    ThreeD { schedule: Vec<GaitChange> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub model: ModelParams,
    pub initial: WorldState,
    pub scenario: Scenario,
    pub n_steps: usize,
    pub pushes: Vec<PushEvent>,
    pub options: SimOptions,
}

impl ScenarioConfig {
    pub fn from_str(text: &str, source: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError {
            source: source.to_string(),
            line: Some(e.line()),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<(Self, ResolvedScenario), ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        let config = Self::from_str(&text, &source)?;
        let resolved = config.resolve().map_err(|(field, message)| ConfigError {
            line: find_field_line(&text, field),
            source,
            message: format!("field `{field}`: {message}"),
        })?;
        Ok((config, resolved))
    }

    /// Check every precondition and build the simulator inputs. Errors name
    /// the offending field.
    pub fn resolve(&self) -> Result<ResolvedScenario, (&'static str, String)> {
        let model = self.model;
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(("period", format!("must be > 0, got {}", self.period)));
        }
        if self.n_steps == 0 {
            return Err(("n_steps", "must be >= 1".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err((
                "sample_rate",
                format!("must be > 0, got {}", self.sample_rate),
            ));
        }
        if let Some(r) = self.reach_limit {
            if !(r.is_finite() && r > 0.0) {
                return Err(("reach_limit", format!("must be > 0, got {r}")));
            }
        }
        let initial = self.initial.world_state();
        initial.validate().map_err(|e| ("initial", e.to_string()))?;

        let gain = |g: Gain, period: f64, field: &'static str| {
            g.resolve(period, &model)
                .map_err(|e| (field, e.to_string()))
        };
        let scenario = match self.mode {
            ModeConfig::TwoD => {
                if self.schedule.is_some() {
                    return Err(("schedule", "only valid in 3d mode".into()));
                }
                let legs = self
                    .legs
                    .ok_or(("legs", "2d mode needs two legs".to_string()))?;
                let mut resolved = [LegParams::default(); 2];
                for (out, leg) in resolved.iter_mut().zip(legs) {
                    *out = LegParams::new(leg.a, gain(leg.b, self.period, "legs")?);
                    out.validate().map_err(|e| ("legs", e.to_string()))?;
                }
                Scenario::TwoD {
                    legs: resolved,
                    period: self.period,
                }
            }
            ModeConfig::ThreeD => {
                if self.legs.is_some() {
                    return Err(("legs", "only valid in 2d mode".into()));
                }
                let entries = self
                    .schedule
                    .as_ref()
                    .ok_or(("schedule", "3d mode needs a gait schedule".to_string()))?;
                let mut schedule = Vec::with_capacity(entries.len());
                for e in entries {
                    let period = e.period.unwrap_or(self.period);
                    if !(period.is_finite() && period > 0.0) {
                        return Err(("period", format!("must be > 0, got {period}")));
                    }
                    schedule.push(GaitChange {
                        from_step: e.from_step,
                        gait: Gait3DParams {
                            a_l: e.a_l,
                            a_w: e.a_w,
                            theta: e.theta_deg.to_radians(),
                            b: gain(e.b, period, "schedule")?,
                            period,
                        },
                    });
                }
                lipwalk_core::sim::validate_schedule(&schedule)
                    .map_err(|e| ("schedule", e.to_string()))?;
                Scenario::ThreeD { schedule }
            }
        };

        let mut pushes = Vec::with_capacity(self.pushes.len());
        for p in &self.pushes {
            if !(p.at_time.is_finite() && p.at_time >= 0.0) {
                return Err(("at_time", format!("must be >= 0, got {}", p.at_time)));
            }
            if !(p.dvx.is_finite() && p.dvy.is_finite()) {
                return Err(("pushes", "velocity changes must be finite".into()));
            }
            pushes.push(PushEvent::new(p.at_time, p.dvx, p.dvy));
        }

        Ok(ResolvedScenario {
            model,
            initial,
            scenario,
            n_steps: self.n_steps,
            pushes,
            options: SimOptions {
                sample_rate: Some(self.sample_rate),
                reach_limit: self.reach_limit,
            },
        })
    }
}

/// First line mentioning `"field"` as a key, 1-based.
fn find_field_line(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    text.lines()
        .position(|l| {
            l.find(&key)
                .is_some_and(|i| l[i + key.len()..].trim_start().starts_with(':'))
        })
        .map(|i| i + 1)
}
