use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::SmoothStep;

/// One hydraulic function (lift or tilt) lumped to an angle-rate actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    /// Valve opening (0..1) versus |lever| (0..1).
    pub lever_to_valve: SmoothStep,
    /// Angle rate at full valve opening, rad/s.
    pub max_rate: f64,
    /// Angle rate per unit flow, rad/m³.
    pub angle_rate_per_flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydraulicsModel {
    /// Pump displacement, m³/rad of engine rotation.
    pub pump_displacement: f64,
    pub relief_pressure: f64,
    pub lift: FunctionSpec,
    pub tilt: FunctionSpec,
    /// Standby loss drawn whenever the engine runs, W.
    pub parasitic_power: f64,
}

impl HydraulicsModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("pump_displacement", self.pump_displacement),
            ("relief_pressure", self.relief_pressure),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and positive"));
            }
        }
        if !(self.parasitic_power.is_finite() && self.parasitic_power >= 0.0) {
            return Err(ConfigError::invalid("parasitic_power", "must be finite and non-negative"));
        }
        for (name, f) in [("lift", &self.lift), ("tilt", &self.tilt)] {
            f.lever_to_valve
                .validate("lever_to_valve")
                .map_err(|e| e.within(name))?;
            if !(f.max_rate > 0.0 && f.max_rate.is_finite()) {
                return Err(ConfigError::invalid(format!("{name}.max_rate"), "must be finite and positive"));
            }
            if !(f.angle_rate_per_flow > 0.0 && f.angle_rate_per_flow.is_finite()) {
                return Err(ConfigError::invalid(format!("{name}.angle_rate_per_flow"), "must be finite and positive"));
            }
        }
        Ok(())
    }

    pub fn pump_flow(&self, omega_engine: f64) -> f64 {
        self.pump_displacement * omega_engine.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FunctionResult {
    /// Achieved angle rate, rad/s.
    pub rate: f64,
    /// Flow delivered to the function (including any relief flow), m³/s.
    pub flow: f64,
    pub pressure: f64,
    pub relieving: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydraulicsStep {
    pub lift: FunctionResult,
    pub tilt: FunctionResult,
    /// Angle increments over the step, rad.
    pub d_lift: f64,
    pub d_tilt: f64,
    pub power: f64,
    pub torque_on_engine: f64,
    /// Ratio applied to both flow demands (1 when the pump keeps up).
    pub flow_scale: f64,
}

fn demanded_rate(cmd: f64, f: &FunctionSpec) -> f64 {
    let c = cmd.clamp(-1.0, 1.0);
    c.signum() * f.lever_to_valve.eval(c.abs()) * f.max_rate
}

fn settle(rate: f64, load_torque: f64, f: &FunctionSpec, relief: f64) -> FunctionResult {
    let flow = rate.abs() / f.angle_rate_per_flow;
    if flow == 0.0 {
        return FunctionResult::default();
    }
    // Load torque resisting the commanded direction; an assisting load needs
    // no pump pressure.
    let resisting = load_torque * rate.signum();
    let pressure = resisting.max(0.0) * f.angle_rate_per_flow;
    if pressure > relief {
        FunctionResult { rate: 0.0, flow, pressure: relief, relieving: true }
    } else {
        FunctionResult { rate, flow, pressure, relieving: false }
    }
}

/// Lever commands to angle increments and the torque the pump takes from
/// the engine. Load torques are positive when they resist positive motion.
pub fn hydraulics_step(
    lift_cmd: f64,
    tilt_cmd: f64,
    omega_engine: f64,
    load_torque_lift: f64,
    load_torque_tilt: f64,
    model: &HydraulicsModel,
    dt: f64,
) -> HydraulicsStep {
    let lift_rate = demanded_rate(lift_cmd, &model.lift);
    let tilt_rate = demanded_rate(tilt_cmd, &model.tilt);
    let demand = lift_rate.abs() / model.lift.angle_rate_per_flow
        + tilt_rate.abs() / model.tilt.angle_rate_per_flow;
    let available = model.pump_flow(omega_engine);
    let flow_scale = if demand > available && demand > 0.0 { available / demand } else { 1.0 };

    let lift = settle(lift_rate * flow_scale, load_torque_lift, &model.lift, model.relief_pressure);
    let tilt = settle(tilt_rate * flow_scale, load_torque_tilt, &model.tilt, model.relief_pressure);
    let power = lift.pressure * lift.flow + tilt.pressure * tilt.flow + model.parasitic_power;
    let torque_on_engine = if omega_engine > 0.0 { power / omega_engine } else { 0.0 };
    HydraulicsStep {
        lift,
        tilt,
        d_lift: lift.rate * dt,
        d_tilt: tilt.rate * dt,
        power,
        torque_on_engine,
        flow_scale,
    }
}
