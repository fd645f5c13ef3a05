use serde::{Deserialize, Serialize};

/// Momentary split of indicated engine power between the two parallel
/// transfer paths. `p_loss` absorbs engine friction and the rate of change
/// of rotating kinetic energy, so the four terms close exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub p_engine: f64,
    pub p_driveline: f64,
    pub p_hydraulics: f64,
    pub p_loss: f64,
}

pub const POWER_IDENTITY_TOL: f64 = 1e-9;

impl PowerSplit {
    pub fn residual(&self) -> f64 {
        self.p_engine - (self.p_driveline + self.p_hydraulics + self.p_loss)
    }

    pub fn closes(&self) -> bool {
        self.residual().abs() <= POWER_IDENTITY_TOL * self.p_engine.abs().max(1.0)
    }
}

/// Builds the split from one plant step. `Err` carries the residual when the
/// accounting does not close or a term is non-finite.
pub fn power_split(
    omega_engine: f64,
    indicated_torque: f64,
    pump_torque: f64,
    hydraulic_torque: f64,
) -> Result<PowerSplit, f64> {
    let p_engine = indicated_torque * omega_engine;
    let p_driveline = pump_torque * omega_engine;
    let p_hydraulics = hydraulic_torque * omega_engine;
    let split = PowerSplit {
        p_engine,
        p_driveline,
        p_hydraulics,
        p_loss: p_engine - p_driveline - p_hydraulics,
    };
    let finite = [split.p_engine, split.p_driveline, split.p_hydraulics, split.p_loss]
        .iter()
        .all(|v| v.is_finite());
    if finite && split.closes() {
        Ok(split)
    } else {
        Err(split.residual())
    }
}
