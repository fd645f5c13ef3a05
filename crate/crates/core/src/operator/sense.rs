//! The perceptual boundary: the only place where operator code touches plant
//! state. Everything past [`sense`] works on [`SensedState`] alone.

use crate::environment::{clearance_angle, dig_contact, PileModel};
use crate::machine::driveline::{wheel_slip, DrivelineModel};
use crate::machine::{linkage_fk, LinkageModel, MachineState};
use crate::operator::{FillGeometry, SensedState, TaskSpec};

/// Edge speed below which the bearing is not updated, m/s.
pub const GEOMETRY_SPEED_EPS: f64 = 0.01;

pub struct SenseInputs<'a> {
    pub machine: &'a MachineState,
    /// Achieved lift and tilt angle rates over the last step, rad/s.
    pub lift_rate: f64,
    pub tilt_rate: f64,
    pub linkage: &'a LinkageModel,
    pub pile: &'a PileModel,
    pub driveline: &'a DrivelineModel,
    pub task: &'a TaskSpec,
    /// Geometry sensed on the previous step; the bearing is held from it
    /// while the edge is (nearly) at rest.
    pub previous: Option<FillGeometry>,
}

/// Edge velocity `[vx, vz]` in the vertical plane along the heading, m/s.
pub fn edge_velocity(m: &MachineState, lift_rate: f64, tilt_rate: f64, linkage: &LinkageModel) -> [f64; 2] {
    let (l, t, _) = linkage.clamp_angles(m.lift, m.tilt);
    let j = linkage.jacobian(l, t);
    [
        m.v + j[0][0] * lift_rate + j[0][1] * tilt_rate,
        j[1][0] * lift_rate + j[1][1] * tilt_rate,
    ]
}

pub fn sense(input: SenseInputs<'_>) -> SensedState {
    let m = input.machine;
    let edge = linkage_fk(m.lift, m.tilt, m.pose, input.linkage);
    let vel = edge_velocity(m, input.lift_rate, input.tilt_rate, input.linkage);
    let slope = input.pile.slope_angle;
    let bearing = if vel[0].hypot(vel[1]) > GEOMETRY_SPEED_EPS {
        vel[1].atan2(vel[0])
    } else {
        input.previous.map_or(0.0, |g| g.bearing)
    };
    let geometry = FillGeometry {
        bearing,
        slope,
        attack: edge.angle - bearing,
        clearance: clearance_angle(edge.angle, input.pile),
    };
    let contact = dig_contact(edge.x, edge.z, input.pile);
    let dist = |p: [f64; 2]| (p[0] - m.pose.x).hypot(p[1] - m.pose.y);
    let (_, tilt, _) = input.linkage.clamp_angles(m.lift, m.tilt);
    SensedState {
        v: m.v,
        omega_engine: m.omega_engine,
        pose: m.pose,
        edge_x: edge.x,
        edge_z: edge.z,
        edge_angle: edge.angle,
        lift_angle: m.lift,
        tilt_angle: m.tilt,
        tilt_at_back_stop: tilt >= input.linkage.bucket_angle_range[1] - 1e-6,
        geometry,
        wheel_slip: wheel_slip(m.omega_wheel, input.driveline.wheel_radius, m.v),
        penetrating: contact.in_contact,
        dist_to_pile_toe: input.pile.toe_x - edge.x,
        dist_to_receiver: dist(input.task.receiver_position),
        dist_to_reversal_waypoint: dist(input.task.reversal_waypoint),
    }
}
