//! The deterministic core of a live session: a command queue drained at
//! tick boundaries and a walker advanced by a fixed simulated time per tick.
//! Wall-clock pacing lives in the server, never here.

use std::collections::VecDeque;

use lipwalk_core::sim::{Vec2, Walker, WorldState};
use lipwalk_core::{special_b, step_constants, Gait3DParams, ModelParams, Result, SpecialGains};

use crate::protocol::{
    EventTag, GaitWire, ModelWire, ServerMessage, SessionCommand, SessionUpdate,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub model: ModelParams,
    pub gait: Gait3DParams,
    pub initial: WorldState,
    /// Ticks per simulated second.
    pub tick_rate: f64,
    pub footprint_cap: usize,
}

impl SessionConfig {
    pub fn new(model: ModelParams, gait: Gait3DParams) -> Self {
        Self {
            model,
            gait,
            initial: WorldState::at_rest(),
            tick_rate: 50.0,
            footprint_cap: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gait.validate()?;
        self.initial.validate()?;
        if !(self.tick_rate.is_finite() && self.tick_rate > 0.0) {
            return Err(lipwalk_core::Error::InvalidParameter {
                name: "tick_rate",
                reason: format!("must be > 0, got {}", self.tick_rate),
            });
        }
        if self.footprint_cap == 0 {
            return Err(lipwalk_core::Error::InvalidParameter {
                name: "footprint_cap",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

pub struct Session {
    config: SessionConfig,
    walker: Walker,
    start_time: f64,
    tick: u64,
    running: bool,
    speed: f64,
    step_requested: bool,
    queue: VecDeque<SessionCommand>,
    footprints: VecDeque<Vec2>,
    last_event: EventTag,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let walker = Walker::spatial(config.initial, config.gait, config.model)?;
        let mut s = Session {
            config,
            walker,
            start_time: config.initial.time,
            tick: 0,
            running: false,
            speed: 1.0,
            step_requested: false,
            queue: VecDeque::new(),
            footprints: VecDeque::new(),
            last_event: EventTag::None,
        };
        s.record_footprint(config.initial.stance_foot);
        Ok(s)
    }

    pub fn hello(&self) -> ServerMessage {
        let gait = self.walker.gait().expect("session walker is 3D");
        ServerMessage::Hello {
            protocol: crate::protocol::PROTOCOL_VERSION.to_string(),
            model: model_wire(&self.config.model),
            tick_rate: self.config.tick_rate,
            footprint_cap: self.config.footprint_cap,
            gait: GaitWire::from(&gait),
            gains: gains_for(&self.config.model, gait.period),
        }
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn tick_rate(&self) -> f64 {
        self.config.tick_rate
    }

    /// Simulated time of the current tick boundary.
    pub fn time(&self) -> f64 {
        self.start_time + self.tick as f64 / self.config.tick_rate
    }

    pub fn enqueue(&mut self, cmd: SessionCommand) {
        self.queue.push_back(cmd);
    }

    /// Process one tick boundary: apply queued commands at the current
    /// time, then advance one tick if running (or single-stepping).
    /// Returns an update whenever something happened.
    pub fn tick(&mut self, wall_ms: f64) -> Option<SessionUpdate> {
        let had_commands = !self.queue.is_empty();
        let mut event = EventTag::None;
        while let Some(cmd) = self.queue.pop_front() {
            if let Some(tag) = self.apply(cmd) {
                event = tag;
            }
        }

        let advance = self.running || std::mem::take(&mut self.step_requested);
        if advance {
            self.tick += 1;
            let target = self.time();
            let landed = self.walker.advance_to(target);
            for step in &landed {
                self.record_footprint(step.footprint);
            }
            if !landed.is_empty() {
                event = EventTag::Touchdown;
            }
        }
        if !(advance || had_commands) {
            return None;
        }
        self.last_event = event;
        Some(self.snapshot(wall_ms))
    }

    fn apply(&mut self, cmd: SessionCommand) -> Option<EventTag> {
        match cmd {
            SessionCommand::SetGait {
                a_l,
                a_w,
                theta_deg,
                b,
                period,
            } => {
                let wire = GaitWire {
                    a_l,
                    a_w,
                    theta_deg,
                    b,
                    period,
                };
                // validated at parse time
                self.walker.set_gait(Gait3DParams::from(&wire)).ok()?;
                Some(EventTag::GaitChange)
            }
            SessionCommand::Push { dvx, dvy } => {
                let t = self.time();
                // a touchdown due at this instant lands first
                for step in self.walker.advance_to(t) {
                    self.record_footprint(step.footprint);
                }
                self.walker.apply_push(t, Vec2::new(dvx, dvy));
                Some(EventTag::Push)
            }
            SessionCommand::Run { speed } => {
                self.running = true;
                self.speed = speed;
                None
            }
            SessionCommand::Pause => {
                self.running = false;
                None
            }
            SessionCommand::StepOnce => {
                self.step_requested = true;
                None
            }
            SessionCommand::Reset { initial } => {
                let gait = self.walker.gait().expect("session walker is 3D");
                self.walker = Walker::spatial(initial, gait, self.config.model).ok()?;
                self.start_time = initial.time;
                self.tick = 0;
                self.running = false;
                self.footprints.clear();
                self.record_footprint(initial.stance_foot);
                Some(EventTag::Reset)
            }
        }
    }

    fn record_footprint(&mut self, p: Vec2) {
        if self.footprints.len() == self.config.footprint_cap {
            self.footprints.pop_front();
        }
        self.footprints.push_back(p);
    }

    pub fn snapshot(&self, wall_ms: f64) -> SessionUpdate {
        let t = self.time();
        let state = self.walker.state_at(t.max(self.walker.anchor_time()));
        let gait = self.walker.gait().expect("session walker is 3D");
        SessionUpdate {
            tick: self.tick,
            t,
            step_index: state.step_index,
            com: state.com,
            vel: state.vel,
            stance_foot: state.stance_foot,
            stance_leg: state.stance_leg,
            gait: GaitWire::from(&gait),
            gains: gains_for(&self.config.model, gait.period),
            last_event: self.last_event,
            running: self.running,
            speed: self.speed,
            footprints: self.footprints.iter().copied().collect(),
            wall_ms,
        }
    }
}

fn model_wire(m: &ModelParams) -> ModelWire {
    ModelWire {
        g: m.g(),
        h: m.h(),
        t_c: m.t_c(),
    }
}

fn gains_for(model: &ModelParams, period: f64) -> SpecialGains {
    step_constants(period, model)
        .and_then(|c| special_b(&c, model))
        .expect("gait period validated > 0")
}
