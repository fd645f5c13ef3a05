use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::Table1D;
use crate::machine::Gear;

pub const GRAVITY: f64 = 9.81;

/// Ground speed below which slip uses a fixed denominator, m/s.
pub const SLIP_SPEED_EPS: f64 = 0.1;
/// Speeds below which brake and rolling resistance fade linearly to zero.
const BRAKE_OMEGA_EPS: f64 = 0.05;
const ROLL_SPEED_EPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GearSpec {
    /// Signed overall ratio from converter turbine to wheel.
    pub ratio: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GearSet {
    pub f1: GearSpec,
    pub f2: GearSpec,
    pub r1: GearSpec,
    pub r2: GearSpec,
}

impl GearSet {
    pub fn get(&self, gear: Gear) -> Option<GearSpec> {
        match gear {
            Gear::N => None,
            Gear::F1 => Some(self.f1),
            Gear::F2 => Some(self.f2),
            Gear::R1 => Some(self.r1),
            Gear::R2 => Some(self.r2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivelineModel {
    pub gears: GearSet,
    pub wheel_radius: f64,
    /// Lumped inertia of all wheels plus the reflected driveline, kg·m².
    pub wheel_inertia: f64,
    pub vehicle_mass: f64,
    pub rolling_resistance_coeff: f64,
    /// Adhesion coefficient versus |relative slip|; must start at (0, 0).
    pub traction_curve: Table1D,
    /// Share of vehicle weight on the driven axle with the boom at rest.
    pub static_axle_split: f64,
    /// Additional weight share per unit of positive lift command.
    pub lift_transfer_gain: f64,
    pub brake_torque_max: f64,
    pub wheelbase: f64,
    /// Steering angle at full steering command, rad.
    pub max_steer_angle: f64,
    /// Torque-free window after each gear change, s.
    pub shift_interlock: f64,
}

impl DrivelineModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.traction_curve.validate("traction_curve")?;
        if self.traction_curve.knots[0] != 0.0 || self.traction_curve.values[0] != 0.0 {
            return Err(ConfigError::invalid("traction_curve", "adhesion must be 0 at zero slip"));
        }
        if self.traction_curve.values.iter().any(|&m| m < 0.0) {
            return Err(ConfigError::invalid("traction_curve", "adhesion must be non-negative"));
        }
        let g = &self.gears;
        for (name, spec) in [("f1", g.f1), ("f2", g.f2), ("r1", g.r1), ("r2", g.r2)] {
            if !(spec.efficiency > 0.0 && spec.efficiency <= 1.0) {
                return Err(ConfigError::invalid(format!("gears.{name}.efficiency"), "efficiency must be in (0, 1]"));
            }
            if !spec.ratio.is_finite() || spec.ratio == 0.0 {
                return Err(ConfigError::invalid(format!("gears.{name}.ratio"), "ratio must be finite and non-zero"));
            }
        }
        if g.f1.ratio <= 0.0 || g.f2.ratio <= 0.0 {
            return Err(ConfigError::invalid("gears", "forward ratios must be positive"));
        }
        if g.r1.ratio >= 0.0 || g.r2.ratio >= 0.0 {
            return Err(ConfigError::invalid("gears", "reverse ratios must be negative"));
        }
        if g.f1.ratio <= g.f2.ratio {
            return Err(ConfigError::invalid("gears.f1.ratio", "first gear must be lower than second (|F1| > |F2|)"));
        }
        let positive = [
            ("wheel_radius", self.wheel_radius),
            ("wheel_inertia", self.wheel_inertia),
            ("vehicle_mass", self.vehicle_mass),
            ("brake_torque_max", self.brake_torque_max),
            ("wheelbase", self.wheelbase),
            ("max_steer_angle", self.max_steer_angle),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and positive"));
            }
        }
        let non_negative = [
            ("rolling_resistance_coeff", self.rolling_resistance_coeff),
            ("lift_transfer_gain", self.lift_transfer_gain),
            ("shift_interlock", self.shift_interlock),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and non-negative"));
            }
        }
        if !(self.static_axle_split > 0.0 && self.static_axle_split + self.lift_transfer_gain <= 1.0) {
            return Err(ConfigError::invalid(
                "static_axle_split",
                "axle split must be positive and static_axle_split + lift_transfer_gain <= 1",
            ));
        }
        if self.max_steer_angle >= std::f64::consts::FRAC_PI_2 {
            return Err(ConfigError::invalid("max_steer_angle", "steer angle must be below 90 degrees"));
        }
        Ok(())
    }

    /// Normal load on the driven axle for a given lift lever position, N.
    pub fn normal_load(&self, lift_cmd: f64) -> f64 {
        let share = self.static_axle_split + self.lift_transfer_gain * lift_cmd.clamp(0.0, 1.0);
        self.vehicle_mass * GRAVITY * share
    }

    pub fn rolling_resistance(&self, v: f64) -> f64 {
        -self.rolling_resistance_coeff
            * self.vehicle_mass
            * GRAVITY
            * (v / ROLL_SPEED_EPS).clamp(-1.0, 1.0)
    }
}

pub fn wheel_slip(omega_wheel: f64, radius: f64, v: f64) -> f64 {
    let circumferential = omega_wheel * radius;
    (circumferential - v) / circumferential.abs().max(SLIP_SPEED_EPS)
}

pub fn traction_force(slip: f64, normal_load: f64, curve: &Table1D) -> f64 {
    if slip == 0.0 {
        return 0.0;
    }
    slip.signum() * curve.eval(slip.abs()) * normal_load.max(0.0)
}

/// Per-step inputs to the wheel/chassis update besides the turbine torque.
#[derive(Debug, Clone, Copy)]
pub struct DriveInputs {
    pub gear: Gear,
    pub brake: f64,
    pub normal_load: f64,
    pub v: f64,
    pub omega_wheel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivelineStep {
    pub v: f64,
    pub omega_wheel: f64,
    /// Turbine speed at the start of the step (zero in neutral).
    pub omega_turbine: f64,
    pub wheel_torque: f64,
    pub traction_force: f64,
    pub slip: f64,
}

/// Turbine speed seen through the engaged gear.
pub fn turbine_speed(omega_wheel: f64, gear: Gear, model: &DrivelineModel) -> f64 {
    match model.gears.get(gear) {
        Some(spec) => omega_wheel * spec.ratio,
        None => 0.0,
    }
}

/// One step of wheel and chassis longitudinal dynamics.
///
/// `turbine_torque` maps turbine speed (rad/s, signed as seen through the
/// gear) to turbine torque; `external_force` maps chassis speed to the sum of
/// external longitudinal forces (dig resistance, positive forward). Rolling
/// resistance and brake are applied here.
///
/// Tyre adhesion couples wheel and chassis through a stiff slip law, so the
/// two states are advanced with a linearly implicit Euler step using a
/// finite-difference Jacobian.
pub fn driveline_step(
    turbine_torque: impl Fn(f64) -> f64,
    external_force: impl Fn(f64) -> f64,
    inputs: DriveInputs,
    model: &DrivelineModel,
    dt: f64,
) -> DrivelineStep {
    let spec = model.gears.get(inputs.gear);
    let r = model.wheel_radius;
    let wheel_torque = |omega: f64| match spec {
        Some(g) => turbine_torque(omega * g.ratio) * g.ratio * g.efficiency,
        None => 0.0,
    };
    let brake = |omega: f64| {
        inputs.brake.clamp(0.0, 1.0) * model.brake_torque_max * (omega / BRAKE_OMEGA_EPS).clamp(-1.0, 1.0)
    };
    let rhs = |omega: f64, v: f64| {
        let f_trac = traction_force(wheel_slip(omega, r, v), inputs.normal_load, &model.traction_curve);
        let d_omega = (wheel_torque(omega) - f_trac * r - brake(omega)) / model.wheel_inertia;
        let d_v = (f_trac + model.rolling_resistance(v) + external_force(v)) / model.vehicle_mass;
        [d_omega, d_v]
    };

    let (w0, v0) = (inputs.omega_wheel, inputs.v);
    let f0 = rhs(w0, v0);
    let hw = 1e-7 * w0.abs().max(1.0);
    let hv = 1e-7 * v0.abs().max(1.0);
    let fw = rhs(w0 + hw, v0);
    let fv = rhs(w0, v0 + hv);
    let jac = [
        [(fw[0] - f0[0]) / hw, (fv[0] - f0[0]) / hv],
        [(fw[1] - f0[1]) / hw, (fv[1] - f0[1]) / hv],
    ];
    // (I - dt J) Δ = dt f0
    let a = [
        [1.0 - dt * jac[0][0], -dt * jac[0][1]],
        [-dt * jac[1][0], 1.0 - dt * jac[1][1]],
    ];
    let b = [dt * f0[0], dt * f0[1]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let (dw, dv) = if det.abs() > 1e-12 {
        (
            (b[0] * a[1][1] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - a[1][0] * b[0]) / det,
        )
    } else {
        (b[0], b[1])
    };

    let slip = wheel_slip(w0, r, v0);
    DrivelineStep {
        v: v0 + dv,
        omega_wheel: w0 + dw,
        omega_turbine: turbine_speed(w0, inputs.gear, model),
        wheel_torque: wheel_torque(w0),
        traction_force: traction_force(slip, inputs.normal_load, &model.traction_curve),
        slip,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use approx::assert_relative_eq;

    fn model() -> DrivelineModel {
        RunConfig::reference().driveline
    }

    #[test]
    fn slip_examples() {
        assert_eq!(wheel_slip(2.0, 0.5, 1.0), 0.0);
        assert_eq!(wheel_slip(1.0, 1.0, 0.0), 1.0);
        assert_eq!(wheel_slip(0.0, 0.7, 0.0), 0.0);
        assert!(wheel_slip(0.0, 0.7, 3.0).is_finite());
    }

    #[test]
    fn traction_examples() {
        let m = model();
        let curve = &m.traction_curve;
        assert_eq!(traction_force(0.0, 1e5, curve), 0.0);
        let mu_max = *curve.values.last().unwrap();
        let sat = curve.last_knot();
        assert_eq!(traction_force(sat, 1e5, curve), mu_max * 1e5);
        assert_eq!(traction_force(-2.0 * sat, 1e5, curve), -mu_max * 1e5);
        for s in [0.01, 0.07, 0.2, 0.5] {
            assert_eq!(traction_force(-s, 5e4, curve), -traction_force(s, 5e4, curve));
        }
    }

    fn coast(gear: Gear, v0: f64, seconds: f64) -> f64 {
        let m = model();
        let dt = 1e-3;
        let mut v = v0;
        let mut w = v0 / m.wheel_radius;
        for _ in 0..(seconds / dt) as usize {
            let inputs = DriveInputs { gear, brake: 0.0, normal_load: m.normal_load(0.0), v, omega_wheel: w };
            let s = driveline_step(|_| 0.0, |_| 0.0, inputs, &m, dt);
            v = s.v;
            w = s.omega_wheel;
        }
        v
    }

    #[test]
    fn neutral_coast_decays_by_rolling_resistance() {
        let m = model();
        let v0 = 2.0;
        let t = 1.0;
        let v = coast(Gear::N, v0, t);
        // Rolling resistance decelerates at c_rr·g; wheel inertia adds a
        // small effective mass so the drop is slightly less than that bound.
        let bound = m.rolling_resistance_coeff * GRAVITY * t;
        let eff_mass = m.vehicle_mass + m.wheel_inertia / (m.wheel_radius * m.wheel_radius);
        let expected = m.rolling_resistance_coeff * m.vehicle_mass * GRAVITY / eff_mass * t;
        assert!(v0 - v <= bound + 1e-9);
        assert_relative_eq!(v0 - v, expected, max_relative = 1e-3);
    }

    #[test]
    fn constant_torque_reaches_force_balance() {
        let m = model();
        let dt = 1e-3;
        let (mut v, mut w) = (0.0, 0.0);
        // Small constant turbine torque: the machine accelerates until the
        // external resistance balances traction.
        let resist = |v: f64| -8000.0 * v;
        let mut last = None;
        for _ in 0..30_000 {
            let inputs = DriveInputs { gear: Gear::F2, brake: 0.0, normal_load: m.normal_load(0.0), v, omega_wheel: w };
            let s = driveline_step(|_| 200.0, resist, inputs, &m, dt);
            v = s.v;
            w = s.omega_wheel;
            last = Some(s);
        }
        let s = last.unwrap();
        let resistance = -(m.rolling_resistance(v) + resist(v));
        assert_relative_eq!(s.traction_force, resistance, max_relative = 1e-4);
        assert_relative_eq!(s.traction_force * m.wheel_radius, s.wheel_torque, max_relative = 1e-4);
    }

    #[test]
    fn reverse_gear_flips_wheel_torque() {
        let m = model();
        let inputs = DriveInputs { gear: Gear::R2, brake: 0.0, normal_load: m.normal_load(0.0), v: 0.0, omega_wheel: 0.0 };
        let s = driveline_step(|_| 100.0, |_| 0.0, inputs, &m, 1e-3);
        assert!(s.wheel_torque < 0.0);
        assert!(s.omega_wheel < 0.0);
    }

    #[test]
    fn neutral_has_no_torque_path() {
        let m = model();
        let inputs = DriveInputs { gear: Gear::N, brake: 0.0, normal_load: m.normal_load(0.0), v: 0.0, omega_wheel: 3.0 };
        let s = driveline_step(|_| 1e4, |_| 0.0, inputs, &m, 1e-3);
        assert_eq!(s.wheel_torque, 0.0);
        assert_eq!(s.omega_turbine, 0.0);
    }

    #[test]
    fn brake_stops_the_machine() {
        let m = model();
        let dt = 1e-3;
        let (mut v, mut w) = (3.0, 3.0 / m.wheel_radius);
        for _ in 0..5000 {
            let inputs = DriveInputs { gear: Gear::N, brake: 1.0, normal_load: m.normal_load(0.0), v, omega_wheel: w };
            let s = driveline_step(|_| 0.0, |_| 0.0, inputs, &m, dt);
            v = s.v;
            w = s.omega_wheel;
        }
        assert!(v.abs() < 1e-2, "v = {v}");
    }
}
