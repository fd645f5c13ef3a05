//! Run configuration and the shipped reference machine.
//!
//! The reference values describe a generic mid-size wheel loader. They are
//! calibration choices, not measured data: the maps are shaped so that the
//! loading cycle exercises every operator rule.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::{SmoothStep, Table1D, Table2D};
use crate::machine::converter::{scale_converter, ConverterMap};
use crate::machine::driveline::{DrivelineModel, GearSet, GearSpec};
use crate::machine::engine::EngineModel;
use crate::machine::hydraulics::{FunctionSpec, HydraulicsModel};
use crate::machine::linkage::{ChassisPose, LinkageModel};
use crate::environment::PileModel;
use crate::operator::{ChannelRates, OperatorParams, PhaseTimeouts, TaskSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub log_decimation: u32,
    pub max_sim_time: f64,
    /// Spacing of the cutting-edge trajectory markers, s.
    pub marker_interval: f64,
    /// Reserved; the simulation itself draws no random numbers.
    pub random_seed: u64,
}

impl SimConfig {
    pub fn log_interval(&self) -> f64 {
        self.dt * f64::from(self.log_decimation)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::invalid("dt", "time step must be positive"));
        }
        if self.log_decimation < 1 {
            return Err(ConfigError::invalid("log_decimation", "must be at least 1"));
        }
        if !self.max_sim_time.is_finite() || self.max_sim_time < 0.0 {
            return Err(ConfigError::invalid("max_sim_time", "must be finite and non-negative"));
        }
        let ratio = self.marker_interval / self.log_interval();
        if !(self.marker_interval > 0.0 && ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() < 1e-6) {
            return Err(ConfigError::invalid(
                "marker_interval",
                "must be a positive multiple of dt * log_decimation",
            ));
        }
        Ok(())
    }

    /// Number of log rows between two trajectory markers.
    pub fn marker_stride(&self) -> usize {
        (self.marker_interval / self.log_interval()).round().max(1.0) as usize
    }
}

/// Converter characteristic plus the capacity scale used for converter-swap
/// experiments (1 = as tabulated, < 1 = weaker).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterConfig {
    pub speed_ratio_knots: Vec<f64>,
    pub capacity: Vec<f64>,
    pub torque_ratio: Vec<f64>,
    pub capacity_scale: f64,
}

impl ConverterConfig {
    pub fn base_map(&self) -> ConverterMap {
        ConverterMap {
            speed_ratio_knots: self.speed_ratio_knots.clone(),
            capacity: self.capacity.clone(),
            torque_ratio: self.torque_ratio.clone(),
        }
    }

    /// The map the simulation actually uses.
    pub fn effective_map(&self) -> Result<ConverterMap, ConfigError> {
        scale_converter(&self.base_map(), self.capacity_scale)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base_map().validate()?;
        self.effective_map()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: EngineModel,
    pub converter: ConverterConfig,
    pub driveline: DrivelineModel,
    pub linkage: LinkageModel,
    pub hydraulics: HydraulicsModel,
    pub pile: PileModel,
    pub operator: OperatorParams,
    pub sim: SimConfig,
    pub task: TaskSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.engine.validate().map_err(|e| e.within("engine"))?;
        self.converter.validate().map_err(|e| e.within("converter"))?;
        self.driveline.validate().map_err(|e| e.within("driveline"))?;
        self.linkage.validate().map_err(|e| e.within("linkage"))?;
        self.hydraulics.validate().map_err(|e| e.within("hydraulics"))?;
        self.pile.validate().map_err(|e| e.within("pile"))?;
        self.operator.validate().map_err(|e| e.within("operator"))?;
        self.sim.validate().map_err(|e| e.within("sim"))?;
        self.task.validate().map_err(|e| e.within("task"))?;
        Ok(())
    }

    /// Reference configuration with the converter capacity scaled.
    pub fn with_converter_scale(mut self, scale: f64) -> Self {
        self.converter.capacity_scale = scale;
        self
    }

    pub fn reference() -> Self {
        let engine = EngineModel {
            max_torque_curve: Table1D {
                knots: vec![70.0, 90.0, 110.0, 130.0, 150.0, 170.0, 190.0, 210.0, 220.0, 253.0],
                values: vec![560.0, 720.0, 880.0, 980.0, 1000.0, 960.0, 900.0, 820.0, 780.0, 0.0],
            },
            idle_speed: 80.0,
            rated_speed: 220.0,
            rated_torque: 780.0,
            inertia: 2.5,
            friction_torque: 60.0,
            fuel_map: Table2D {
                x_knots: vec![80.0, 120.0, 160.0, 200.0, 240.0],
                y_knots: vec![0.0, 100.0, 300.0, 500.0, 700.0, 900.0, 1100.0],
                values: vec![
                    vec![600.0, 380.0, 260.0, 235.0, 230.0, 230.0, 230.0],
                    vec![620.0, 370.0, 250.0, 222.0, 215.0, 214.0, 214.0],
                    vec![650.0, 380.0, 252.0, 224.0, 214.0, 212.0, 212.0],
                    vec![700.0, 400.0, 262.0, 232.0, 222.0, 220.0, 220.0],
                    vec![760.0, 430.0, 280.0, 248.0, 238.0, 236.0, 236.0],
                ],
            },
            governor_gain: 30.0,
        };
        let converter = ConverterConfig {
            speed_ratio_knots: vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.85, 0.9, 0.95, 1.0],
            capacity: vec![0.030, 0.030, 0.0295, 0.0285, 0.026, 0.024, 0.020, 0.013, 0.006],
            torque_ratio: vec![2.6, 2.25, 1.9, 1.55, 1.2, 1.05, 1.0, 1.0, 1.0],
            capacity_scale: 1.0,
        };
        let driveline = DrivelineModel {
            gears: GearSet {
                f1: GearSpec { ratio: 40.0, efficiency: 0.85 },
                f2: GearSpec { ratio: 22.0, efficiency: 0.88 },
                r1: GearSpec { ratio: -40.0, efficiency: 0.85 },
                r2: GearSpec { ratio: -22.0, efficiency: 0.88 },
            },
            wheel_radius: 0.75,
            wheel_inertia: 250.0,
            vehicle_mass: 16_000.0,
            rolling_resistance_coeff: 0.03,
            traction_curve: Table1D { knots: vec![0.0, 0.1, 0.3], values: vec![0.0, 0.45, 0.5] },
            static_axle_split: 0.55,
            lift_transfer_gain: 0.25,
            brake_torque_max: 60_000.0,
            wheelbase: 3.2,
            max_steer_angle: 0.6,
            shift_interlock: 0.3,
        };
        let linkage = LinkageModel {
            boom_pivot: [-0.5, 2.1],
            boom_length: 3.0,
            lift_angle_range: [-0.555, 0.85],
            bucket_angle_range: [-2.0, 0.75],
            edge_offset: 1.2,
            edge_drop_angle: 0.45,
            bucket_ref_angle: 0.0,
            bucket_capacity: 3.0,
            boom_mass: 2500.0,
            bucket_mass: 1500.0,
        };
        let valve = SmoothStep { x0: 0.05, h0: 0.0, x1: 1.0, h1: 1.0 };
        let hydraulics = HydraulicsModel {
            pump_displacement: 2.0e-5,
            relief_pressure: 28e6,
            lift: FunctionSpec { lever_to_valve: valve, max_rate: 0.3, angle_rate_per_flow: 50.0 },
            tilt: FunctionSpec { lever_to_valve: valve, max_rate: 0.8, angle_rate_per_flow: 150.0 },
            parasitic_power: 4000.0,
        };
        let pile = PileModel {
            toe_x: 9.0,
            slope_angle: 35f64.to_radians(),
            crest_height: 2.5,
            specific_resistance: 2.0e5,
            fill_gain: 0.65,
            material_density: 1700.0,
            fill_drag: 30_000.0,
            clearance_penalty: 1.0,
            spill_angle: 0.2,
            spill_rate: 20.0,
        };
        let operator = OperatorParams {
            slip_threshold_1: 0.1,
            slip_threshold_1_high: 0.25,
            throttle_cap_floor: 0.5,
            slip_integral_limit: 0.15,
            slip_integral_high: 0.5,
            slip_integral_max: 2.0,
            lift_boost_max: 0.4,
            bearing_deviation_threshold: 0.15,
            bvv_ramp_rate: 0.5,
            bvv_decay_rate: 0.5,
            bvv_max: 0.4,
            target_clearance: 0.05,
            target_attack: 0.15,
            clearance_gain: 0.8,
            attack_gain: 0.8,
            exit_bucket_angle: 0.5,
            exit_lift_angle: -0.3,
            base_throttle: 0.7,
            base_lift: 0.5,
            approach_speed: 1.5,
            reverse_speed: 2.0,
            haul_speed: 2.5,
            speed_gain: 0.8,
            brake_gain: 1.0,
            arrival_decel: 1.0,
            steer_gain: 2.0,
            waypoint_tolerance: 0.8,
            stop_speed: 0.1,
            dump_empty_angle: -1.95,
            carry_tilt_angle: 0.7,
            rates: ChannelRates { throttle: 5.0, brake: 5.0, steer: 5.0, lift: 5.0, tilt: 5.0 },
            timeouts: PhaseTimeouts {
                approach_pile: 30.0,
                fill: 30.0,
                leave_pile_reverse: 30.0,
                haul_to_receiver: 30.0,
                dump: 30.0,
                reverse_from_receiver: 30.0,
            },
        };
        let sim = SimConfig {
            dt: 1e-3,
            log_decimation: 10,
            max_sim_time: 120.0,
            marker_interval: 0.5,
            random_seed: 0,
        };
        let task = TaskSpec {
            start_pose: ChassisPose { x: -4.0, y: 0.0, heading: 0.0 },
            reversal_waypoint: [1.0, 5.0],
            receiver_position: [8.0, -4.0],
            dump_height: 3.0,
            return_distance: 4.0,
        };
        RunConfig { engine, converter, driveline, linkage, hydraulics, pile, operator, sim, task }
    }
}
