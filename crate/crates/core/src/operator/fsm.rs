//! Loading-cycle phase machine.
//!
//! Transitions are evaluated first on the sensed snapshot, then the command
//! for the (possibly new) phase is produced, so a shift event and the first
//! command of the next phase leave together.

use std::f64::consts::PI;

use crate::machine::Gear;
use crate::operator::rules::fill_targets;
use crate::operator::{limit_command, OperatorCommand, OperatorParams, OperatorState, Phase, SensedState, TaskSpec};

/// Every allowed phase transition.
pub const PHASE_EDGES: [(Phase, Phase); 6] = [
    (Phase::ApproachPile, Phase::Fill),
    (Phase::Fill, Phase::LeavePileReverse),
    (Phase::LeavePileReverse, Phase::HaulToReceiver),
    (Phase::HaulToReceiver, Phase::Dump),
    (Phase::Dump, Phase::ReverseFromReceiver),
    (Phase::ReverseFromReceiver, Phase::ReturnOrStop),
];

fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI) % (2.0 * PI);
    if x < 0.0 {
        x += 2.0 * PI;
    }
    x - PI
}

/// Steering command that points the direction of travel at `target`.
fn pursue(s: &SensedState, target: [f64; 2], reverse: bool, p: &OperatorParams) -> f64 {
    let bearing = (target[1] - s.pose.y).atan2(target[0] - s.pose.x);
    let travel = if reverse { s.pose.heading + PI } else { s.pose.heading };
    let err = wrap_angle(bearing - travel);
    let steer = (p.steer_gain * err).clamp(-1.0, 1.0);
    if reverse {
        -steer
    } else {
        steer
    }
}

/// Throttle and brake that regulate speed in the direction of travel.
fn regulate_speed(speed: f64, target: f64, p: &OperatorParams) -> (f64, f64) {
    let err = target - speed;
    let throttle = (p.speed_gain * err).clamp(0.0, 1.0);
    let brake = if err < -0.2 * target.max(p.stop_speed) {
        (p.brake_gain * -err).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (throttle, brake)
}

fn next_phase(s: &SensedState, state: &OperatorState, p: &OperatorParams, task: &TaskSpec) -> Option<Phase> {
    match state.phase {
        Phase::ApproachPile => s.penetrating.then_some(Phase::Fill),
        Phase::Fill => (!s.penetrating && state.exit_latch.is_set() && s.tilt_at_back_stop).then_some(Phase::LeavePileReverse),
        Phase::LeavePileReverse => (s.dist_to_reversal_waypoint <= p.waypoint_tolerance).then_some(Phase::HaulToReceiver),
        Phase::HaulToReceiver => (s.dist_to_receiver <= p.waypoint_tolerance && s.edge_z >= task.dump_height)
            .then_some(Phase::Dump),
        Phase::Dump => (s.tilt_angle <= p.dump_empty_angle).then_some(Phase::ReverseFromReceiver),
        Phase::ReverseFromReceiver => (s.dist_to_receiver >= task.return_distance).then_some(Phase::ReturnOrStop),
        Phase::ReturnOrStop => None,
    }
}

fn phase_targets(s: &SensedState, state: &OperatorState, p: &OperatorParams, task: &TaskSpec) -> OperatorCommand {
    let lift_to_height = if s.edge_z < task.dump_height { 1.0 } else { 0.0 };
    match state.phase {
        Phase::ApproachPile => {
            let (throttle, brake) = regulate_speed(s.v, p.approach_speed, p);
            OperatorCommand {
                throttle,
                brake,
                steer: (-p.steer_gain * wrap_angle(s.pose.heading)).clamp(-1.0, 1.0),
                lift: 0.0,
                tilt: 0.0,
                gear: Gear::F2,
            }
        }
        Phase::Fill => unreachable!("fill targets come from the rule set"),
        Phase::LeavePileReverse => {
            let (throttle, brake) = regulate_speed(-s.v, p.reverse_speed, p);
            OperatorCommand {
                throttle,
                brake,
                steer: pursue(s, task.reversal_waypoint, true, p),
                lift: 1.0,
                tilt: 0.0,
                gear: Gear::R2,
            }
        }
        Phase::HaulToReceiver => {
            let (throttle, brake) = if s.v < -p.stop_speed {
                (0.0, 1.0)
            } else {
                let near = (2.0 * p.arrival_decel * (s.dist_to_receiver - 0.5 * p.waypoint_tolerance).max(0.0)).sqrt();
                regulate_speed(s.v, p.haul_speed.min(near.max(p.stop_speed)), p)
            };
            OperatorCommand {
                throttle,
                brake,
                steer: pursue(s, task.receiver_position, false, p),
                lift: lift_to_height,
                tilt: 0.0,
                gear: Gear::F2,
            }
        }
        Phase::Dump => OperatorCommand {
            throttle: 1.0,
            brake: 1.0,
            steer: 0.0,
            lift: 0.0,
            tilt: -1.0,
            gear: Gear::N,
        },
        Phase::ReverseFromReceiver => {
            let (throttle, brake) = regulate_speed(-s.v, p.reverse_speed, p);
            let tilt = if s.tilt_angle < p.carry_tilt_angle { 1.0 } else { 0.0 };
            OperatorCommand {
                throttle,
                brake,
                steer: 0.0,
                lift: -1.0,
                tilt,
                gear: Gear::R2,
            }
        }
        Phase::ReturnOrStop => OperatorCommand { brake: 1.0, ..OperatorCommand::idle(Gear::N) },
    }
}

/// Operator step for every phase: transition check, phase targets, then
/// human rate limits.
pub fn phase_step(
    sensed: &SensedState,
    state: &OperatorState,
    p: &OperatorParams,
    task: &TaskSpec,
    dt: f64,
) -> (OperatorCommand, OperatorState) {
    let mut next = *state;
    if let Some(phase) = next_phase(sensed, state, p, task) {
        next.enter(phase);
    }
    let target = if next.phase == Phase::Fill {
        let (t, after) = fill_targets(sensed, &next, p, dt);
        next = after;
        t
    } else {
        phase_targets(sensed, &next, p, task)
    };
    let cmd = limit_command(&state.last_command, &target, &p.rates, dt);
    next.last_command = cmd;
    next.phase_elapsed += dt;
    (cmd, next)
}
