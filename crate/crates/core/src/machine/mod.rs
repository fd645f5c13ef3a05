//! Planar wheel loader plant.
//!
//! Engine power leaves through two parallel paths: the torque converter into
//! gearbox, wheels and chassis, and the hydraulic pump into the lift and tilt
//! functions.

pub mod converter;
pub mod driveline;
pub mod engine;
pub mod hydraulics;
pub mod linkage;
pub mod power;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use converter::{converter_torques, scale_converter, ConverterMap};
pub use driveline::{driveline_step, traction_force, wheel_slip, DrivelineModel};
pub use engine::{engine_step, EngineModel};
pub use hydraulics::{hydraulics_step, HydraulicsModel};
pub use linkage::{linkage_fk, ChassisPose, EdgePose, LinkageModel};
pub use power::{power_split, PowerSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gear {
    N,
    F1,
    F2,
    R1,
    R2,
}

impl Gear {
    pub fn as_str(self) -> &'static str {
        match self {
            Gear::N => "N",
            Gear::F1 => "F1",
            Gear::F2 => "F2",
            Gear::R1 => "R1",
            Gear::R2 => "R2",
        }
    }
}

impl fmt::Display for Gear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineState {
    pub pose: ChassisPose,
    /// Speed along the heading, m/s (negative when reversing).
    pub v: f64,
    pub omega_engine: f64,
    /// Engaged gear; `N` while a shift interlock is running.
    pub gear: Gear,
    /// Gear that will engage when the interlock expires.
    pub selected_gear: Gear,
    pub shift_timer: f64,
    pub lift: f64,
    pub tilt: f64,
    pub omega_wheel: f64,
    pub bucket_fill: f64,
    /// Cumulative fuel, g.
    pub fuel_used: f64,
}

impl MachineState {
    /// Machine at rest with the bucket flat on the ground and the engine at idle.
    pub fn at_rest(engine: &EngineModel, linkage: &LinkageModel, pose: ChassisPose, gear: Gear) -> Self {
        Self {
            pose,
            v: 0.0,
            omega_engine: engine.idle_speed,
            gear,
            selected_gear: gear,
            shift_timer: 0.0,
            lift: linkage.lift_ref_angle(),
            tilt: linkage.bucket_ref_angle,
            omega_wheel: 0.0,
            bucket_fill: 0.0,
            fuel_used: 0.0,
        }
    }

    /// Requests a gear; a change starts the torque-free interlock.
    pub fn select_gear(&mut self, gear: Gear, interlock: f64) {
        if gear == self.selected_gear {
            return;
        }
        self.selected_gear = gear;
        if interlock > 0.0 {
            self.gear = Gear::N;
            self.shift_timer = interlock;
        } else {
            self.gear = gear;
            self.shift_timer = 0.0;
        }
    }

    pub fn advance_shift(&mut self, dt: f64) {
        if self.shift_timer > 0.0 {
            self.shift_timer -= dt;
            if self.shift_timer <= 1e-12 {
                self.shift_timer = 0.0;
                self.gear = self.selected_gear;
            }
        }
    }
}
