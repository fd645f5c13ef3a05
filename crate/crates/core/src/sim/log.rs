use serde::{Deserialize, Serialize};

use crate::machine::{Gear, PowerSplit};
use crate::operator::{FillGeometry, OperatorCommand, Phase};

/// One logged simulation step.
///
/// State fields describe the machine at `t`; command, power and force fields
/// describe the step that starts at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: u64,
    pub t: f64,
    pub phase: Phase,
    pub command: OperatorCommand,
    pub gear: Gear,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub omega_engine: f64,
    pub omega_wheel: f64,
    pub omega_turbine: f64,
    pub speed_ratio: f64,
    pub wheel_slip: f64,
    pub lift_angle: f64,
    pub tilt_angle: f64,
    pub lift_rate: f64,
    pub tilt_rate: f64,
    pub edge_x: f64,
    pub edge_z: f64,
    pub edge_angle: f64,
    pub geometry: FillGeometry,
    pub penetration: f64,
    pub bucket_fill: f64,
    pub engine_torque: f64,
    pub pump_torque: f64,
    pub turbine_torque: f64,
    pub traction_force: f64,
    pub lift_pressure: f64,
    pub tilt_pressure: f64,
    pub power: PowerSplit,
    pub fuel_rate: f64,
    pub fuel_used: f64,
    pub dig_force: [f64; 2],
}

impl LogRow {
    /// Column names in the order of [`LogRow::numeric_values`], after the
    /// leading `t`, `phase`, `gear_cmd` and `gear` columns.
    pub const NUMERIC_COLUMNS: [&'static str; 41] = [
        "throttle",
        "brake",
        "steer",
        "lift_cmd",
        "tilt_cmd",
        "x",
        "y",
        "heading",
        "v",
        "omega_engine",
        "omega_wheel",
        "omega_turbine",
        "speed_ratio",
        "wheel_slip",
        "lift_angle",
        "tilt_angle",
        "lift_rate",
        "tilt_rate",
        "edge_x",
        "edge_z",
        "edge_angle",
        "bearing",
        "slope",
        "attack",
        "clearance",
        "penetration",
        "bucket_fill",
        "engine_torque",
        "pump_torque",
        "turbine_torque",
        "traction_force",
        "lift_pressure",
        "tilt_pressure",
        "p_engine",
        "p_driveline",
        "p_hydraulics",
        "p_loss",
        "fuel_rate",
        "fuel_used",
        "dig_force_x",
        "dig_force_z",
    ];

    pub fn numeric_values(&self) -> [f64; 41] {
        let c = &self.command;
        let g = &self.geometry;
        let p = &self.power;
        [
            c.throttle,
            c.brake,
            c.steer,
            c.lift,
            c.tilt,
            self.x,
            self.y,
            self.heading,
            self.v,
            self.omega_engine,
            self.omega_wheel,
            self.omega_turbine,
            self.speed_ratio,
            self.wheel_slip,
            self.lift_angle,
            self.tilt_angle,
            self.lift_rate,
            self.tilt_rate,
            self.edge_x,
            self.edge_z,
            self.edge_angle,
            g.bearing,
            g.slope,
            g.attack,
            g.clearance,
            self.penetration,
            self.bucket_fill,
            self.engine_torque,
            self.pump_torque,
            self.turbine_torque,
            self.traction_force,
            self.lift_pressure,
            self.tilt_pressure,
            p.p_engine,
            p.p_driveline,
            p.p_hydraulics,
            p.p_loss,
            self.fuel_rate,
            self.fuel_used,
            self.dig_force[0],
            self.dig_force[1],
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleLog {
    pub rows: Vec<LogRow>,
}

impl CycleLog {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Rows belonging to each contiguous stretch of `phase`.
    pub fn phase_segments(&self, phase: Phase) -> Vec<&[LogRow]> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, r) in self.rows.iter().enumerate() {
            match (r.phase == phase, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push(&self.rows[s..i]);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(&self.rows[s..]);
        }
        out
    }

    /// Sequence of phases visited, without repeats.
    pub fn phase_sequence(&self) -> Vec<Phase> {
        let mut seq: Vec<Phase> = Vec::new();
        for r in &self.rows {
            if seq.last() != Some(&r.phase) {
                seq.push(r.phase);
            }
        }
        seq
    }
}
