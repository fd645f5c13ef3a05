//! Fixed-step integration of operator, machine and pile.
//!
//! Each step runs in a fixed order: sense the state left by the previous
//! step, let the operator act, then advance the plant (gear interlock,
//! hydraulics, converter, driveline, engine, bucket fill, chassis pose).
//! Hydraulic load torques use the cutting-edge force from the previous
//! step; everything else is evaluated on the current state.

mod log;
mod metrics;

pub use log::{CycleLog, LogRow};
pub use metrics::{
    compare_runs, compute_metrics, trapezoid, ComparisonReport, Delta, DutyPoint, Metrics, MetricsError, PhaseDurations,
};

use thiserror::Error;

use crate::config::RunConfig;
use crate::environment::{dig_contact, dig_force, fill_update, spill_update, swept_area_rate};
use crate::error::{ConfigError, FaultKind, SimFault};
use crate::machine::converter::speed_ratio;
use crate::machine::driveline::{turbine_speed, DriveInputs};
use crate::machine::{
    converter_torques, driveline_step, engine_step, hydraulics_step, linkage_fk, power_split, ConverterMap, Gear,
    MachineState,
};
use crate::operator::{phase_step, sense, FillGeometry, OperatorState, Phase, SenseInputs};

/// A completed cycle.
#[derive(Debug, Clone)]
pub struct CycleRun {
    pub log: CycleLog,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The log holds every row recorded before the fault.
    #[error("{fault}")]
    Fault { fault: SimFault, log: CycleLog },
}

/// Simulation instance: owns the machine and operator state of one run.
pub struct Simulation<'a> {
    cfg: &'a RunConfig,
    converter: ConverterMap,
    machine: MachineState,
    operator: OperatorState,
    geometry: Option<FillGeometry>,
    lift_rate: f64,
    tilt_rate: f64,
    /// Edge force `[forward, up]` from the previous step, N.
    edge_force: [f64; 2],
    step: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let converter = cfg.converter.effective_map().map_err(|e| e.within("converter"))?;
        let machine = MachineState::at_rest(&cfg.engine, &cfg.linkage, cfg.task.start_pose, Gear::F2);
        Ok(Self {
            cfg,
            converter,
            machine,
            operator: OperatorState::new(Gear::F2),
            geometry: None,
            lift_rate: 0.0,
            tilt_rate: 0.0,
            edge_force: [0.0, 0.0],
            step: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.sim.dt
    }

    pub fn phase(&self) -> Phase {
        self.operator.phase
    }

    pub fn machine(&self) -> &MachineState {
        &self.machine
    }

    fn fault(&self, kind: FaultKind) -> SimFault {
        SimFault { kind, step: self.step, t: self.time(), phase: self.operator.phase }
    }

    /// Advances one step and returns the row describing it.
    pub fn step(&mut self) -> Result<LogRow, SimFault> {
        let cfg = self.cfg;
        let dt = cfg.sim.dt;
        let t = self.time();
        let m0 = self.machine;

        let sensed = sense(SenseInputs {
            machine: &m0,
            lift_rate: self.lift_rate,
            tilt_rate: self.tilt_rate,
            linkage: &cfg.linkage,
            pile: &cfg.pile,
            driveline: &cfg.driveline,
            task: &cfg.task,
            previous: self.geometry,
        });
        self.geometry = Some(sensed.geometry);
        let (cmd, op) = phase_step(&sensed, &self.operator, &cfg.operator, &cfg.task, dt);
        self.operator = op;
        if op.phase != Phase::ReturnOrStop && op.phase_elapsed > cfg.operator.timeouts.for_phase(op.phase) + 0.5 * dt {
            return Err(self.fault(FaultKind::PhaseTimeout));
        }

        let mut m = m0;
        m.select_gear(cmd.gear, cfg.driveline.shift_interlock);

        // Linkage and cutting edge at the start of the step.
        let linkage = &cfg.linkage;
        let (lift, tilt, _) = linkage.clamp_angles(m.lift, m.tilt);
        let edge = linkage_fk(lift, tilt, m.pose, linkage);
        let contact = dig_contact(edge.x, edge.z, &cfg.pile);
        let payload = m.bucket_fill * linkage.bucket_capacity * cfg.pile.material_density;

        // Hydraulics with end stops: a lever pushing into a stop does nothing.
        let at_stop = |angle: f64, range: [f64; 2], c: f64| {
            if (c > 0.0 && angle >= range[1]) || (c < 0.0 && angle <= range[0]) {
                0.0
            } else {
                c
            }
        };
        let lift_cmd = at_stop(lift, linkage.lift_angle_range, cmd.lift);
        let tilt_cmd = at_stop(tilt, linkage.bucket_angle_range, cmd.tilt);
        let (load_lift, load_tilt) = linkage.load_torques(lift, tilt, payload, self.edge_force);
        let hyd = hydraulics_step(lift_cmd, tilt_cmd, m.omega_engine, load_lift, load_tilt, &cfg.hydraulics, dt);

        // Converter and driveline.
        let omega_pump = m.omega_engine;
        let omega_turbine = turbine_speed(m.omega_wheel, m.gear, &cfg.driveline);
        let engaged = m.gear != Gear::N;
        let (pump_torque, turbine_torque) = if engaged {
            converter_torques(omega_pump, omega_turbine, &self.converter)
        } else {
            (0.0, 0.0)
        };
        let jac = linkage.jacobian(lift, tilt);
        let edge_rise = [jac[0][0] * hyd.lift.rate + jac[0][1] * hyd.tilt.rate, jac[1][0] * hyd.lift.rate + jac[1][1] * hyd.tilt.rate];
        let fill = m.bucket_fill;
        let pile = &cfg.pile;
        let edge_vel = |v: f64| [v + edge_rise[0], edge_rise[1]];
        let conv = &self.converter;
        let drive = driveline_step(
            |wt| converter_torques(omega_pump, wt, conv).1,
            |v| dig_force(&contact, edge_vel(v), edge.angle, fill, pile)[0],
            DriveInputs {
                gear: m.gear,
                brake: cmd.brake,
                normal_load: cfg.driveline.normal_load(cmd.lift),
                v: m.v,
                omega_wheel: m.omega_wheel,
            },
            &cfg.driveline,
            dt,
        );
        let edge_force = dig_force(&contact, edge_vel(drive.v), edge.angle, fill, pile);

        // Engine.
        let Some(eng) = engine_step(cmd.throttle, pump_torque + hyd.torque_on_engine, m.omega_engine, &cfg.engine, dt) else {
            return Err(self.fault(FaultKind::NonFinite("engine speed")));
        };
        let power = power_split(m.omega_engine, eng.indicated_torque, pump_torque, hyd.torque_on_engine)
            .map_err(|residual| self.fault(FaultKind::PowerIdentity { residual }))?;

        // Bucket contents.
        let swept = swept_area_rate(&contact, edge_vel(drive.v));
        let mut fill_next = fill_update(fill, swept, &contact, pile, dt);
        fill_next = spill_update(fill_next, edge.angle, pile, dt);

        // Chassis pose: yaw from the bicycle model, driven by the new speed.
        let dl = &cfg.driveline;
        let yaw_rate = drive.v * (cmd.steer * dl.max_steer_angle).tan() / dl.wheelbase;
        m.pose.heading += yaw_rate * dt;
        m.pose.x += drive.v * m.pose.heading.cos() * dt;
        m.pose.y += drive.v * m.pose.heading.sin() * dt;

        let (lift_next, tilt_next, _) = linkage.clamp_angles(lift + hyd.d_lift, tilt + hyd.d_tilt);
        m.v = drive.v;
        m.omega_wheel = drive.omega_wheel;
        m.omega_engine = eng.omega;
        m.lift = lift_next;
        m.tilt = tilt_next;
        m.bucket_fill = fill_next;
        m.fuel_used += eng.fuel_rate * dt;
        m.advance_shift(dt);

        let state = [m.v, m.omega_wheel, m.omega_engine, m.lift, m.tilt, m.pose.x, m.pose.y, m.pose.heading, m.bucket_fill];
        if !state.iter().all(|x| x.is_finite()) {
            return Err(self.fault(FaultKind::NonFinite("machine state")));
        }

        let row = LogRow {
            step: self.step,
            t,
            phase: op.phase,
            command: cmd,
            gear: m0.gear,
            x: m0.pose.x,
            y: m0.pose.y,
            heading: m0.pose.heading,
            v: m0.v,
            omega_engine: m0.omega_engine,
            omega_wheel: m0.omega_wheel,
            omega_turbine,
            speed_ratio: if engaged { speed_ratio(omega_pump, omega_turbine) } else { 0.0 },
            wheel_slip: sensed.wheel_slip,
            lift_angle: m0.lift,
            tilt_angle: m0.tilt,
            lift_rate: (lift_next - lift) / dt,
            tilt_rate: (tilt_next - tilt) / dt,
            edge_x: edge.x,
            edge_z: edge.z,
            edge_angle: edge.angle,
            geometry: sensed.geometry,
            penetration: contact.penetration_depth,
            bucket_fill: m0.bucket_fill,
            engine_torque: eng.indicated_torque,
            pump_torque,
            turbine_torque,
            traction_force: drive.traction_force,
            lift_pressure: hyd.lift.pressure,
            tilt_pressure: hyd.tilt.pressure,
            power,
            fuel_rate: eng.fuel_rate,
            fuel_used: m0.fuel_used,
            dig_force: edge_force,
        };

        self.lift_rate = row.lift_rate;
        self.tilt_rate = row.tilt_rate;
        self.edge_force = edge_force;
        self.machine = m;
        self.step += 1;
        Ok(row)
    }
}

/// Runs one loading cycle until the operator reaches [`Phase::ReturnOrStop`].
pub fn run_cycle(cfg: &RunConfig) -> Result<CycleRun, RunError> {
    let mut sim = Simulation::new(cfg)?;
    let mut log = CycleLog::default();
    let decimation = u64::from(cfg.sim.log_decimation);
    let max_steps = (cfg.sim.max_sim_time / cfg.sim.dt).floor() as u64;
    if max_steps == 0 {
        let fault = sim.fault(FaultKind::NoProgress);
        return Err(RunError::Fault { fault, log });
    }
    loop {
        if sim.step >= max_steps {
            let fault = sim.fault(FaultKind::MaxTimeReached);
            return Err(RunError::Fault { fault, log });
        }
        let row = match sim.step() {
            Ok(row) => row,
            Err(fault) => return Err(RunError::Fault { fault, log }),
        };
        let done = row.phase == Phase::ReturnOrStop;
        if row.step % decimation == 0 || done {
            log.rows.push(row);
        }
        if done {
            break;
        }
    }
    let metrics = compute_metrics(&log, cfg).expect("a completed cycle logs at least one row");
    Ok(CycleRun { log, metrics })
}
