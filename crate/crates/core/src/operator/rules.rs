//! The bucket-filling rules and how their outputs are merged.
//!
//! Throttle: base demand times the traction-control-1 cap, plus the additive
//! bearing term. Lift: base demand plus the traction-control-2 boost. Tilt:
//! the larger of the attitude demand and the exit-trigger full command.

use crate::kernel::{clamped_integrate, rate_limit, step3, Latch, SmoothStep};
use crate::machine::Gear;
use crate::operator::{limit_command, OperatorCommand, OperatorParams, OperatorState, SensedState};

/// Throttle multiplier from relative wheel slip: 1 below `slip_threshold_1`,
/// falling smoothly to `throttle_cap_floor` at `slip_threshold_1_high`.
pub fn tc1_throttle_cap(slip: f64, p: &OperatorParams) -> f64 {
    step3(
        slip,
        &SmoothStep { x0: p.slip_threshold_1, h0: 1.0, x1: p.slip_threshold_1_high, h1: p.throttle_cap_floor },
    )
}

/// Lift increment from integrated wheel slip.
pub fn tc2_lift_boost(slip_integral: f64, p: &OperatorParams) -> f64 {
    step3(
        slip_integral,
        &SmoothStep { x0: p.slip_integral_limit, h0: 0.0, x1: p.slip_integral_high, h1: p.lift_boost_max },
    )
}

/// Additive throttle term from the bucket bearing.
///
/// Ramps up while the edge climbs shallower than the pile face by more than
/// the deviation threshold, and decays back to zero otherwise. More throttle
/// means more engine speed and therefore more pump flow to the lift.
pub fn bvv_throttle(bearing: f64, slope: f64, p: &OperatorParams, prev: f64, dt: f64) -> f64 {
    let next = if slope - bearing > p.bearing_deviation_threshold {
        rate_limit(prev, p.bvv_max, p.bvv_ramp_rate, dt)
    } else {
        rate_limit(prev, 0.0, p.bvv_decay_rate, dt)
    };
    next.clamp(0.0, p.bvv_max)
}

/// Roll-back demand that holds clearance and attack angles at their targets.
pub fn attitude_tilt(clearance: f64, attack: f64, p: &OperatorParams) -> f64 {
    (p.clearance_gain * (p.target_clearance - clearance) + p.attack_gain * (p.target_attack - attack)).clamp(0.0, 1.0)
}

/// Latches once the bucket is rolled back past `exit_bucket_angle` relative
/// to the pile face or the boom is raised past `exit_lift_angle`.
pub fn exit_triggers(bucket_angle_rel_slope: f64, lift_angle: f64, latch: Latch, p: &OperatorParams) -> Latch {
    let set = bucket_angle_rel_slope > p.exit_bucket_angle || lift_angle > p.exit_lift_angle;
    latch.update(set, false)
}

/// Rule targets before human rate limiting.
pub(crate) fn fill_targets(sensed: &SensedState, state: &OperatorState, p: &OperatorParams, dt: f64) -> (OperatorCommand, OperatorState) {
    let g = sensed.geometry;
    let mut next = *state;
    next.slip_integral = clamped_integrate(state.slip_integral, sensed.wheel_slip.max(0.0), dt, 0.0, p.slip_integral_max);
    next.bvv_term = bvv_throttle(g.bearing, g.slope, p, state.bvv_term, dt);
    next.exit_latch = exit_triggers(g.clearance, sensed.lift_angle, state.exit_latch, p);

    let throttle = p.base_throttle * tc1_throttle_cap(sensed.wheel_slip, p) + next.bvv_term;
    let lift = p.base_lift + tc2_lift_boost(next.slip_integral, p);
    let full_tilt = if next.exit_latch.is_set() && !sensed.tilt_at_back_stop { 1.0 } else { 0.0 };
    let tilt = attitude_tilt(g.clearance, g.attack, p).max(full_tilt);
    let cmd = OperatorCommand {
        throttle: throttle.clamp(0.0, 1.0),
        brake: 0.0,
        steer: 0.0,
        lift: lift.clamp(0.0, 1.0),
        tilt,
        gear: Gear::F1,
    };
    (cmd, next)
}

/// One operator step inside the bucket-filling phase.
pub fn fill_step(sensed: &SensedState, state: &OperatorState, p: &OperatorParams, dt: f64) -> (OperatorCommand, OperatorState) {
    let (target, mut next) = fill_targets(sensed, state, p, dt);
    let cmd = limit_command(&state.last_command, &target, &p.rates, dt);
    next.last_command = cmd;
    (cmd, next)
}
