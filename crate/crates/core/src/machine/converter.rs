use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::Table1D;

/// Hydrodynamic torque converter characteristic.
///
/// Pump torque follows the similarity law `C(ν)·ω_pump²`; turbine torque is
/// `μ(ν)` times pump torque, with `ν = ω_turbine / ω_pump`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterMap {
    pub speed_ratio_knots: Vec<f64>,
    /// Capacity factor, N·m·s²/rad².
    pub capacity: Vec<f64>,
    pub torque_ratio: Vec<f64>,
}

impl ConverterMap {
    pub fn capacity_table(&self) -> Table1D {
        Table1D {
            knots: self.speed_ratio_knots.clone(),
            values: self.capacity.clone(),
        }
    }

    pub fn torque_ratio_table(&self) -> Table1D {
        Table1D {
            knots: self.speed_ratio_knots.clone(),
            values: self.torque_ratio.clone(),
        }
    }

    pub fn capacity_at(&self, nu: f64) -> f64 {
        self.capacity_table().eval(nu)
    }

    pub fn torque_ratio_at(&self, nu: f64) -> f64 {
        self.torque_ratio_table().eval(nu)
    }

    /// Smallest speed ratio at which the torque ratio has dropped to one.
    pub fn coupling_ratio(&self) -> f64 {
        self.speed_ratio_knots
            .iter()
            .zip(&self.torque_ratio)
            .find(|(_, &mu)| mu <= 1.0)
            .map(|(&nu, _)| nu)
            .unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let cap = self.capacity_table();
        cap.validate("capacity")?;
        self.torque_ratio_table().validate("torque_ratio")?;
        let knots = &self.speed_ratio_knots;
        if knots[0] != 0.0 || knots[knots.len() - 1] > 1.0 {
            return Err(ConfigError::invalid(
                "speed_ratio_knots",
                "speed ratio knots must start at 0 and stay within [0, 1]",
            ));
        }
        if self.capacity.iter().any(|&c| c <= 0.0) || self.capacity.windows(2).any(|w| w[1] > w[0]) {
            return Err(ConfigError::invalid("capacity", "capacity must be positive and non-increasing"));
        }
        if self.torque_ratio.iter().any(|&mu| mu < 1.0)
            || self.torque_ratio.windows(2).any(|w| w[1] > w[0])
        {
            return Err(ConfigError::invalid(
                "torque_ratio",
                "torque ratio must be >= 1 and non-increasing",
            ));
        }
        if self.torque_ratio[self.torque_ratio.len() - 1] != 1.0 {
            return Err(ConfigError::invalid("torque_ratio", "torque ratio must reach 1 at the coupling point"));
        }
        for (&nu, &mu) in knots.iter().zip(&self.torque_ratio) {
            if mu * nu > 1.0 {
                return Err(ConfigError::invalid(
                    "torque_ratio",
                    format!("knot nu = {nu} has mu*nu = {} > 1 (converter would create power)", mu * nu),
                ));
            }
        }
        Ok(())
    }
}

/// Clamped speed ratio; zero when the pump is not turning.
pub fn speed_ratio(omega_pump: f64, omega_turbine: f64) -> f64 {
    if omega_pump <= 0.0 {
        0.0
    } else {
        (omega_turbine / omega_pump).clamp(0.0, 1.0)
    }
}

/// `(t_pump, t_turbine)` in N·m.
pub fn converter_torques(omega_pump: f64, omega_turbine: f64, map: &ConverterMap) -> (f64, f64) {
    if omega_pump <= 0.0 {
        return (0.0, 0.0);
    }
    let nu = speed_ratio(omega_pump, omega_turbine);
    let t_pump = map.capacity_at(nu) * omega_pump * omega_pump;
    (t_pump, map.torque_ratio_at(nu) * t_pump)
}

/// Scales the capacity factor; `capacity_scale < 1` gives a weaker converter.
pub fn scale_converter(map: &ConverterMap, capacity_scale: f64) -> Result<ConverterMap, ConfigError> {
    if !(capacity_scale.is_finite() && capacity_scale > 0.0) {
        return Err(ConfigError::invalid("capacity_scale", "converter capacity scale must be positive"));
    }
    Ok(ConverterMap {
        speed_ratio_knots: map.speed_ratio_knots.clone(),
        capacity: map.capacity.iter().map(|c| c * capacity_scale).collect(),
        torque_ratio: map.torque_ratio.clone(),
    })
}
