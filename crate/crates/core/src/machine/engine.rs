use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::{Table1D, Table2D};

/// Diesel engine with a proportional speed governor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineModel {
    /// Full-load torque curve, rad/s → N·m.
    pub max_torque_curve: Table1D,
    pub idle_speed: f64,
    pub rated_speed: f64,
    pub rated_torque: f64,
    /// Rotating inertia of crankshaft, flywheel and converter pump, kg·m².
    pub inertia: f64,
    /// Internal friction and pumping torque, N·m. The governor supplies it
    /// on top of the external load, so idle fuel is non-zero.
    pub friction_torque: f64,
    /// Brake specific fuel consumption in g/kWh over (rad/s, N·m).
    pub fuel_map: Table2D,
    /// Governor bandwidth, 1/s.
    pub governor_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineStep {
    pub omega: f64,
    /// g/s
    pub fuel_rate: f64,
    pub indicated_torque: f64,
}

impl EngineModel {
    pub fn min_speed(&self) -> f64 {
        0.9 * self.idle_speed
    }

    pub fn max_speed(&self) -> f64 {
        1.15 * self.rated_speed
    }

    pub fn max_torque(&self, omega: f64) -> f64 {
        self.max_torque_curve.eval(omega).max(0.0)
    }

    /// Governor set point for a throttle position.
    pub fn target_speed(&self, throttle: f64) -> f64 {
        self.idle_speed + throttle.clamp(0.0, 1.0) * (self.rated_speed - self.idle_speed)
    }

    /// Indicated torque the governor asks for at `omega`, saturated by the
    /// full-load curve.
    pub fn indicated_torque(&self, throttle: f64, omega: f64) -> f64 {
        let demand = self.friction_torque
            + self.inertia * self.governor_gain * (self.target_speed(throttle) - omega);
        demand.clamp(0.0, self.max_torque(omega))
    }

    /// Fuel mass flow in g/s at an operating point.
    pub fn fuel_rate(&self, omega: f64, torque: f64) -> f64 {
        let power_w = (torque * omega).max(0.0);
        self.fuel_map.eval(omega, torque) * power_w / 3.6e6
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.max_torque_curve.validate("max_torque_curve")?;
        self.fuel_map.validate("fuel_map")?;
        let positive = [
            ("idle_speed", self.idle_speed),
            ("rated_speed", self.rated_speed),
            ("rated_torque", self.rated_torque),
            ("inertia", self.inertia),
            ("governor_gain", self.governor_gain),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and positive"));
            }
        }
        if !(self.friction_torque.is_finite() && self.friction_torque >= 0.0) {
            return Err(ConfigError::invalid("friction_torque", "must be finite and non-negative"));
        }
        if self.idle_speed >= self.rated_speed {
            return Err(ConfigError::invalid("idle_speed", "idle speed must be below rated speed"));
        }
        // Sample the operating band densely enough to hit every knot interval.
        let (lo, hi) = (self.idle_speed, self.rated_speed);
        let samples = self
            .max_torque_curve
            .knots
            .iter()
            .copied()
            .filter(|k| (lo..=hi).contains(k))
            .chain((0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0));
        for w in samples {
            if self.max_torque_curve.eval(w) <= 0.0 {
                return Err(ConfigError::invalid(
                    "max_torque_curve",
                    format!("full-load torque must be positive on [idle, rated], got {} at {w} rad/s",
                        self.max_torque_curve.eval(w)),
                ));
            }
        }
        if self.max_torque(self.idle_speed) < self.friction_torque {
            return Err(ConfigError::invalid(
                "friction_torque",
                "friction exceeds the full-load torque at idle",
            ));
        }
        if self.fuel_map.min_value() <= 0.0 {
            return Err(ConfigError::invalid("fuel_map.values", "specific fuel consumption must be positive"));
        }
        Ok(())
    }
}

/// Advances engine speed by one step against `load_torque` (converter pump
/// plus hydraulic pump, N·m).
///
/// Returns `None` if any input or the result is non-finite.
pub fn engine_step(
    throttle: f64,
    load_torque: f64,
    omega: f64,
    model: &EngineModel,
    dt: f64,
) -> Option<EngineStep> {
    if !(throttle.is_finite() && load_torque.is_finite() && omega.is_finite() && dt.is_finite()) {
        return None;
    }
    let indicated = model.indicated_torque(throttle, omega);
    let accel = (indicated - model.friction_torque - load_torque) / model.inertia;
    let omega_new = (omega + accel * dt).clamp(model.min_speed(), model.max_speed());
    let fuel_rate = model.fuel_rate(omega, indicated);
    let step = EngineStep {
        omega: omega_new,
        fuel_rate,
        indicated_torque: indicated,
    };
    (omega_new.is_finite() && fuel_rate.is_finite()).then_some(step)
}
