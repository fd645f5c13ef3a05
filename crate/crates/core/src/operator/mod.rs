//! Rule-based operator model.
//!
//! The operator sees the machine only through [`SensedState`] and acts only
//! through [`OperatorCommand`]. Bucket filling is governed by six rules
//! (two traction rules, bearing and attitude control, two exit triggers)
//! evaluated together on each sensed snapshot; the remaining phases of the
//! short loading cycle use simple speed regulation and waypoint pursuit.

mod fsm;
mod rules;
mod sense;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::Latch;
use crate::machine::{ChassisPose, Gear};

pub use fsm::{phase_step, PHASE_EDGES};
pub use rules::{attitude_tilt, bvv_throttle, exit_triggers, fill_step, tc1_throttle_cap, tc2_lift_boost};
pub use sense::{sense, SenseInputs, GEOMETRY_SPEED_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    ApproachPile,
    Fill,
    LeavePileReverse,
    HaulToReceiver,
    Dump,
    ReverseFromReceiver,
    ReturnOrStop,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::ApproachPile,
        Phase::Fill,
        Phase::LeavePileReverse,
        Phase::HaulToReceiver,
        Phase::Dump,
        Phase::ReverseFromReceiver,
        Phase::ReturnOrStop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ApproachPile => "ApproachPile",
            Phase::Fill => "Fill",
            Phase::LeavePileReverse => "LeavePileReverse",
            Phase::HaulToReceiver => "HaulToReceiver",
            Phase::Dump => "Dump",
            Phase::ReverseFromReceiver => "ReverseFromReceiver",
            Phase::ReturnOrStop => "ReturnOrStop",
        }
    }

    pub fn index(self) -> usize {
        Phase::ALL.iter().position(|&p| p == self).unwrap_or(0)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the operator can put into the machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorCommand {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
    pub lift: f64,
    pub tilt: f64,
    pub gear: Gear,
}

impl OperatorCommand {
    pub fn idle(gear: Gear) -> Self {
        Self { throttle: 0.0, brake: 0.0, steer: 0.0, lift: 0.0, tilt: 0.0, gear }
    }

    pub fn clamped(self) -> Self {
        Self {
            throttle: self.throttle.clamp(0.0, 1.0),
            brake: self.brake.clamp(0.0, 1.0),
            steer: self.steer.clamp(-1.0, 1.0),
            lift: self.lift.clamp(-1.0, 1.0),
            tilt: self.tilt.clamp(-1.0, 1.0),
            gear: self.gear,
        }
    }

    pub fn in_range(&self) -> bool {
        (0.0..=1.0).contains(&self.throttle)
            && (0.0..=1.0).contains(&self.brake)
            && (-1.0..=1.0).contains(&self.steer)
            && (-1.0..=1.0).contains(&self.lift)
            && (-1.0..=1.0).contains(&self.tilt)
    }
}

/// The operator's perceptual window onto the machine and the pile.
///
/// Only quantities a person in the cab can see, hear or feel: ground speed,
/// engine sound, where the bucket is and how it moves, whether the wheels
/// spin, and where the pile and the receiver are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensedState {
    pub v: f64,
    pub omega_engine: f64,
    pub pose: ChassisPose,
    pub edge_x: f64,
    pub edge_z: f64,
    pub edge_angle: f64,
    pub lift_angle: f64,
    pub tilt_angle: f64,
    /// Bucket lever against its roll-back end stop.
    pub tilt_at_back_stop: bool,
    pub geometry: FillGeometry,
    pub wheel_slip: f64,
    pub penetrating: bool,
    pub dist_to_pile_toe: f64,
    pub dist_to_receiver: f64,
    pub dist_to_reversal_waypoint: f64,
}

/// Bucket-filling angles, rad.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FillGeometry {
    /// Bearing δ of the edge velocity above horizontal.
    pub bearing: f64,
    /// Pile slope ε.
    pub slope: f64,
    /// Angle of attack γ of the bucket floor relative to the edge velocity.
    pub attack: f64,
    /// Clearance α of the bucket floor relative to the pile face.
    pub clearance: f64,
}

/// Per-channel human actuation limits, full-scale per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRates {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
    pub lift: f64,
    pub tilt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTimeouts {
    pub approach_pile: f64,
    pub fill: f64,
    pub leave_pile_reverse: f64,
    pub haul_to_receiver: f64,
    pub dump: f64,
    pub reverse_from_receiver: f64,
}

impl PhaseTimeouts {
    pub fn for_phase(&self, phase: Phase) -> f64 {
        match phase {
            Phase::ApproachPile => self.approach_pile,
            Phase::Fill => self.fill,
            Phase::LeavePileReverse => self.leave_pile_reverse,
            Phase::HaulToReceiver => self.haul_to_receiver,
            Phase::Dump => self.dump,
            Phase::ReverseFromReceiver => self.reverse_from_receiver,
            Phase::ReturnOrStop => f64::INFINITY,
        }
    }
}

/// Operator rule parameters. Thresholds are named after the rule they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorParams {
    // Traction control 1: throttle cap versus relative wheel slip.
    pub slip_threshold_1: f64,
    pub slip_threshold_1_high: f64,
    pub throttle_cap_floor: f64,
    // Traction control 2: lift boost versus integrated slip.
    pub slip_integral_limit: f64,
    pub slip_integral_high: f64,
    pub slip_integral_max: f64,
    pub lift_boost_max: f64,
    // Bucket velocity vector control.
    pub bearing_deviation_threshold: f64,
    pub bvv_ramp_rate: f64,
    pub bvv_decay_rate: f64,
    pub bvv_max: f64,
    // Bucket attitude control.
    pub target_clearance: f64,
    pub target_attack: f64,
    pub clearance_gain: f64,
    pub attack_gain: f64,
    // Exit triggers 1 and 2.
    pub exit_bucket_angle: f64,
    pub exit_lift_angle: f64,
    // Nominal fill operating point.
    pub base_throttle: f64,
    pub base_lift: f64,
    // Non-fill phases.
    pub approach_speed: f64,
    pub reverse_speed: f64,
    pub haul_speed: f64,
    pub speed_gain: f64,
    pub brake_gain: f64,
    pub arrival_decel: f64,
    pub steer_gain: f64,
    pub waypoint_tolerance: f64,
    pub stop_speed: f64,
    pub dump_empty_angle: f64,
    pub carry_tilt_angle: f64,
    pub rates: ChannelRates,
    pub timeouts: PhaseTimeouts,
}

/// Goals of the working task: where to start, where to turn, where to dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub start_pose: ChassisPose,
    pub reversal_waypoint: [f64; 2],
    /// Chassis position at which the bucket is over the receiver.
    pub receiver_position: [f64; 2],
    /// Cutting-edge height needed to clear the receiver, m.
    pub dump_height: f64,
    /// Distance to back away from the receiver before the cycle ends, m.
    pub return_distance: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let vals = [
            self.start_pose.x,
            self.start_pose.y,
            self.start_pose.heading,
            self.reversal_waypoint[0],
            self.reversal_waypoint[1],
            self.receiver_position[0],
            self.receiver_position[1],
        ];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(ConfigError::invalid("", "positions must be finite"));
        }
        if !(self.dump_height.is_finite() && self.dump_height > 0.0) {
            return Err(ConfigError::invalid("dump_height", "must be finite and positive"));
        }
        if !(self.return_distance.is_finite() && self.return_distance > 0.0) {
            return Err(ConfigError::invalid("return_distance", "must be finite and positive"));
        }
        Ok(())
    }
}

impl OperatorParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let named: [(&str, f64); 30] = [
            ("slip_threshold_1", self.slip_threshold_1),
            ("slip_threshold_1_high", self.slip_threshold_1_high),
            ("throttle_cap_floor", self.throttle_cap_floor),
            ("slip_integral_limit", self.slip_integral_limit),
            ("slip_integral_high", self.slip_integral_high),
            ("slip_integral_max", self.slip_integral_max),
            ("lift_boost_max", self.lift_boost_max),
            ("bearing_deviation_threshold", self.bearing_deviation_threshold),
            ("bvv_ramp_rate", self.bvv_ramp_rate),
            ("bvv_decay_rate", self.bvv_decay_rate),
            ("bvv_max", self.bvv_max),
            ("target_clearance", self.target_clearance),
            ("target_attack", self.target_attack),
            ("clearance_gain", self.clearance_gain),
            ("attack_gain", self.attack_gain),
            ("exit_bucket_angle", self.exit_bucket_angle),
            ("exit_lift_angle", self.exit_lift_angle),
            ("base_throttle", self.base_throttle),
            ("base_lift", self.base_lift),
            ("approach_speed", self.approach_speed),
            ("reverse_speed", self.reverse_speed),
            ("haul_speed", self.haul_speed),
            ("speed_gain", self.speed_gain),
            ("brake_gain", self.brake_gain),
            ("arrival_decel", self.arrival_decel),
            ("steer_gain", self.steer_gain),
            ("waypoint_tolerance", self.waypoint_tolerance),
            ("stop_speed", self.stop_speed),
            ("dump_empty_angle", self.dump_empty_angle),
            ("carry_tilt_angle", self.carry_tilt_angle),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(ConfigError::invalid(name, "must be finite"));
            }
        }
        if self.slip_threshold_1 >= self.slip_threshold_1_high {
            return Err(ConfigError::invalid("slip_threshold_1", "must be below slip_threshold_1_high"));
        }
        if self.slip_integral_limit >= self.slip_integral_high {
            return Err(ConfigError::invalid("slip_integral_limit", "must be below slip_integral_high"));
        }
        if self.slip_integral_limit < 0.0 || self.slip_integral_max <= 0.0 {
            return Err(ConfigError::invalid("slip_integral_limit", "slip integral bounds must be non-negative"));
        }
        let unit = [
            ("throttle_cap_floor", self.throttle_cap_floor),
            ("lift_boost_max", self.lift_boost_max),
            ("bvv_max", self.bvv_max),
            ("base_throttle", self.base_throttle),
            ("base_lift", self.base_lift),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(name, "must be in [0, 1]"));
            }
        }
        let non_negative = [
            ("bearing_deviation_threshold", self.bearing_deviation_threshold),
            ("bvv_ramp_rate", self.bvv_ramp_rate),
            ("bvv_decay_rate", self.bvv_decay_rate),
            ("clearance_gain", self.clearance_gain),
            ("attack_gain", self.attack_gain),
            ("speed_gain", self.speed_gain),
            ("brake_gain", self.brake_gain),
            ("steer_gain", self.steer_gain),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(ConfigError::invalid(name, "must be non-negative"));
            }
        }
        let positive = [
            ("approach_speed", self.approach_speed),
            ("reverse_speed", self.reverse_speed),
            ("haul_speed", self.haul_speed),
            ("arrival_decel", self.arrival_decel),
            ("waypoint_tolerance", self.waypoint_tolerance),
            ("stop_speed", self.stop_speed),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(ConfigError::invalid(name, "must be positive"));
            }
        }
        let r = &self.rates;
        for (name, v) in [("throttle", r.throttle), ("brake", r.brake), ("steer", r.steer), ("lift", r.lift), ("tilt", r.tilt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(format!("rates.{name}"), "must be finite and positive"));
            }
        }
        let t = &self.timeouts;
        for p in Phase::ALL.iter().take(6) {
            let v = t.for_phase(*p);
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid("timeouts", format!("{p} timeout must be finite and positive")));
            }
        }
        Ok(())
    }
}

/// Operator memory carried between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorState {
    pub phase: Phase,
    pub phase_elapsed: f64,
    pub slip_integral: f64,
    pub exit_latch: Latch,
    /// Current additive throttle term from bearing control.
    pub bvv_term: f64,
    /// Last emitted command; the rate limiters start from here.
    pub last_command: OperatorCommand,
}

impl OperatorState {
    pub fn new(gear: Gear) -> Self {
        Self {
            phase: Phase::ApproachPile,
            phase_elapsed: 0.0,
            slip_integral: 0.0,
            exit_latch: Latch::default(),
            bvv_term: 0.0,
            last_command: OperatorCommand::idle(gear),
        }
    }

    pub(crate) fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.phase_elapsed = 0.0;
        if phase == Phase::Fill {
            self.slip_integral = 0.0;
            self.bvv_term = 0.0;
            self.exit_latch = Latch::default();
        }
    }
}

/// Applies the human actuation limits channel by channel.
pub fn limit_command(prev: &OperatorCommand, target: &OperatorCommand, rates: &ChannelRates, dt: f64) -> OperatorCommand {
    use crate::kernel::rate_limit;
    let t = target.clamped();
    OperatorCommand {
        throttle: rate_limit(prev.throttle, t.throttle, rates.throttle, dt),
        brake: rate_limit(prev.brake, t.brake, rates.brake, dt),
        steer: rate_limit(prev.steer, t.steer, rates.steer, dt),
        lift: rate_limit(prev.lift, t.lift, rates.lift, dt),
        tilt: rate_limit(prev.tilt, t.tilt, rates.tilt, dt),
        gear: t.gear,
    }
    .clamped()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensed_state_exposes_no_machine_internals() {
        let cfg = crate::config::RunConfig::reference();
        let machine = crate::machine::MachineState::at_rest(&cfg.engine, &cfg.linkage, cfg.task.start_pose, Gear::F2);
        let s = sense(SenseInputs {
            machine: &machine,
            lift_rate: 0.0,
            tilt_rate: 0.0,
            linkage: &cfg.linkage,
            pile: &cfg.pile,
            driveline: &cfg.driveline,
            task: &cfg.task,
            previous: None,
        });
        let keys = field_names(&serde_json::to_value(s).unwrap());
        assert!(keys.iter().any(|k| k == "wheel_slip"));
        for banned in ["converter", "pump", "pressure", "displacement", "turbine", "speed_ratio", "fill"] {
            for key in &keys {
                assert!(!key.contains(banned), "SensedState field `{key}` exposes `{banned}`");
            }
        }
    }

    fn field_names(v: &serde_json::Value) -> Vec<String> {
        match v {
            serde_json::Value::Object(map) => map
                .iter()
                .flat_map(|(k, v)| std::iter::once(k.clone()).chain(field_names(v)))
                .collect(),
            _ => Vec::new(),
        }
    }

    #[test]
    fn rate_limited_command_stays_in_range() {
        let rates = ChannelRates { throttle: 5.0, brake: 5.0, steer: 5.0, lift: 5.0, tilt: 5.0 };
        let prev = OperatorCommand::idle(Gear::F1);
        let target = OperatorCommand { throttle: 3.0, brake: -1.0, steer: -4.0, lift: 2.0, tilt: -2.0, gear: Gear::F1 };
        let out = limit_command(&prev, &target, &rates, 0.01);
        assert!(out.in_range());
        assert!((out.throttle - 0.05).abs() < 1e-12);
        assert!((out.steer + 0.05).abs() < 1e-12);
    }
}
