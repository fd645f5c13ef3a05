use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::operator::Phase;
use crate::sim::log::{CycleLog, LogRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("cannot compute metrics of an empty log")]
    EmptyLog,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseDurations {
    pub approach_pile: f64,
    pub fill: f64,
    pub leave_pile_reverse: f64,
    pub haul_to_receiver: f64,
    pub dump: f64,
    pub reverse_from_receiver: f64,
    pub return_or_stop: f64,
}

impl PhaseDurations {
    pub fn get(&self, phase: Phase) -> f64 {
        *self.slot(phase)
    }

    fn slot(&self, phase: Phase) -> &f64 {
        match phase {
            Phase::ApproachPile => &self.approach_pile,
            Phase::Fill => &self.fill,
            Phase::LeavePileReverse => &self.leave_pile_reverse,
            Phase::HaulToReceiver => &self.haul_to_receiver,
            Phase::Dump => &self.dump,
            Phase::ReverseFromReceiver => &self.reverse_from_receiver,
            Phase::ReturnOrStop => &self.return_or_stop,
        }
    }

    fn slot_mut(&mut self, phase: Phase) -> &mut f64 {
        match phase {
            Phase::ApproachPile => &mut self.approach_pile,
            Phase::Fill => &mut self.fill,
            Phase::LeavePileReverse => &mut self.leave_pile_reverse,
            Phase::HaulToReceiver => &mut self.haul_to_receiver,
            Phase::Dump => &mut self.dump,
            Phase::ReverseFromReceiver => &mut self.reverse_from_receiver,
            Phase::ReturnOrStop => &mut self.return_or_stop,
        }
    }
}

/// Normalized engine operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyPoint {
    pub phase: Phase,
    /// ω / ω_rated
    pub speed: f64,
    /// T / T_rated
    pub torque: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub cycle_time: f64,
    /// g
    pub fuel_total: f64,
    /// Fill carried out of the pile: the largest fill seen over the cycle.
    pub bucket_fill_final: f64,
    pub mean_engine_speed: f64,
    pub max_engine_speed: f64,
    pub phase_durations: PhaseDurations,
    /// J
    pub energy_engine: f64,
    pub energy_driveline: f64,
    pub energy_hydraulics: f64,
    pub energy_loss: f64,
    /// Time integral of positive wheel slip during bucket filling, s.
    pub fill_slip_integral: f64,
    pub duty_points: Vec<DutyPoint>,
}

/// Trapezoidal time integral of `f` over consecutive rows.
pub fn trapezoid(rows: &[LogRow], f: impl Fn(&LogRow) -> f64) -> f64 {
    rows.windows(2).map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t)).sum()
}

pub fn compute_metrics(log: &CycleLog, config: &RunConfig) -> Result<Metrics, MetricsError> {
    let rows = &log.rows;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(MetricsError::EmptyLog),
    };
    let span = last.t - first.t;
    let mean_engine_speed = if span > 0.0 {
        trapezoid(rows, |r| r.omega_engine) / span
    } else {
        first.omega_engine
    };

    let mut phase_durations = PhaseDurations::default();
    for w in rows.windows(2) {
        *phase_durations.slot_mut(w[0].phase) += w[1].t - w[0].t;
    }

    let fill_slip_integral = log
        .phase_segments(Phase::Fill)
        .iter()
        .map(|seg| trapezoid(seg, |r| r.wheel_slip.max(0.0)))
        .sum();

    let engine = &config.engine;
    let duty_points = rows
        .iter()
        .map(|r| DutyPoint {
            phase: r.phase,
            speed: r.omega_engine / engine.rated_speed,
            torque: r.engine_torque / engine.rated_torque,
        })
        .collect();

    Ok(Metrics {
        cycle_time: last.t,
        fuel_total: trapezoid(rows, |r| r.fuel_rate),
        bucket_fill_final: rows.iter().map(|r| r.bucket_fill).fold(0.0, f64::max),
        mean_engine_speed,
        max_engine_speed: rows.iter().map(|r| r.omega_engine).fold(f64::NEG_INFINITY, f64::max),
        phase_durations,
        energy_engine: trapezoid(rows, |r| r.power.p_engine),
        energy_driveline: trapezoid(rows, |r| r.power.p_driveline),
        energy_hydraulics: trapezoid(rows, |r| r.power.p_hydraulics),
        energy_loss: trapezoid(rows, |r| r.power.p_loss),
        fill_slip_integral,
        duty_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub a: f64,
    pub b: f64,
    /// b − a
    pub delta: f64,
    /// b / a
    pub ratio: f64,
}

impl Delta {
    fn of(a: f64, b: f64) -> Self {
        Self { a, b, delta: b - a, ratio: if a != 0.0 { b / a } else if b == 0.0 { 1.0 } else { f64::INFINITY } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cycle_time: Delta,
    pub fuel_total: Delta,
    pub mean_engine_speed: Delta,
    pub max_engine_speed: Delta,
    pub bucket_fill_final: Delta,
    /// Shift of the mean normalized duty-point speed, b − a.
    pub mean_normalized_speed_shift: f64,
    /// Shift of the mean normalized duty-point torque, b − a.
    pub mean_normalized_torque_shift: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Compares run `b` against baseline `a`.
pub fn compare_runs(a: &Metrics, b: &Metrics) -> ComparisonReport {
    let speed = |m: &Metrics| mean(m.duty_points.iter().map(|d| d.speed));
    let torque = |m: &Metrics| mean(m.duty_points.iter().map(|d| d.torque));
    ComparisonReport {
        cycle_time: Delta::of(a.cycle_time, b.cycle_time),
        fuel_total: Delta::of(a.fuel_total, b.fuel_total),
        mean_engine_speed: Delta::of(a.mean_engine_speed, b.mean_engine_speed),
        max_engine_speed: Delta::of(a.max_engine_speed, b.max_engine_speed),
        bucket_fill_final: Delta::of(a.bucket_fill_final, b.bucket_fill_final),
        mean_normalized_speed_shift: speed(b) - speed(a),
        mean_normalized_torque_shift: torque(b) - torque(a),
    }
}
