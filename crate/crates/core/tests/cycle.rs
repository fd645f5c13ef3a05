use loadcycle_core::operator::Phase;
use loadcycle_core::sim::{compute_metrics, trapezoid, Simulation};
use loadcycle_core::{run_cycle, CycleRun, RunConfig};

fn reference_run() -> CycleRun {
    run_cycle(&RunConfig::reference()).expect("reference cycle completes")
}

#[test]
fn reference_cycle_visits_every_phase_in_order() {
    let run = reference_run();
    assert_eq!(run.log.phase_sequence(), Phase::ALL.to_vec());
    let last = run.log.rows.last().unwrap();
    assert_eq!(last.phase, Phase::ReturnOrStop);
    assert!((run.metrics.cycle_time - last.t).abs() < 1e-9);
}

#[test]
fn runs_are_deterministic() {
    let (a, b) = (reference_run(), reference_run());
    assert_eq!(a.log.len(), b.log.len());
    for (x, y) in a.log.rows.iter().zip(&b.log.rows) {
        let (vx, vy) = (x.numeric_values(), y.numeric_values());
        assert!(vx.iter().zip(&vy).all(|(p, q)| p.to_bits() == q.to_bits()), "rows differ at t = {}", x.t);
    }
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn stepping_by_hand_matches_run_cycle() {
    let cfg = RunConfig::reference();
    let run = reference_run();
    let mut sim = Simulation::new(&cfg).unwrap();
    let decimation = u64::from(cfg.sim.log_decimation);
    let mut logged = run.log.rows.iter();
    while sim.phase() != Phase::ReturnOrStop {
        let row = sim.step().unwrap();
        if row.step % decimation == 0 {
            let expected = logged.next().expect("run_cycle logged this step");
            assert_eq!(row.step, expected.step);
            assert_eq!(row.numeric_values().map(f64::to_bits), expected.numeric_values().map(f64::to_bits));
        }
    }
}

#[test]
fn metrics_are_recomputable_from_the_log() {
    let cfg = RunConfig::reference();
    let run = reference_run();
    assert_eq!(compute_metrics(&run.log, &cfg).unwrap(), run.metrics);
    let fuel = trapezoid(&run.log.rows, |r| r.fuel_rate);
    assert!((fuel - run.metrics.fuel_total).abs() <= 1e-9 * fuel.max(1.0));
    let total: f64 = Phase::ALL.iter().map(|&p| run.metrics.phase_durations.get(p)).sum();
    assert!((total - run.metrics.cycle_time).abs() < 1e-6);
}

#[test]
fn bucket_is_loaded_at_the_pile_and_emptied_at_the_receiver() {
    let run = reference_run();
    let fill_at_end_of = |phase: Phase| run.log.phase_segments(phase).last().unwrap().last().unwrap().bucket_fill;
    assert!(fill_at_end_of(Phase::Fill) > 0.8);
    assert!(fill_at_end_of(Phase::HaulToReceiver) > 0.8);
    assert!(fill_at_end_of(Phase::Dump) < 0.05);
    assert!(run.log.rows.iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r.bucket_fill)));
}

#[test]
fn power_split_balances_on_every_row() {
    let run = reference_run();
    for r in &run.log.rows {
        let residual = r.power.p_engine - r.power.p_driveline - r.power.p_hydraulics - r.power.p_loss;
        assert!(residual.abs() <= 1e-9 * r.power.p_engine.abs().max(1.0), "t = {}: residual {residual}", r.t);
    }
}

#[test]
fn weaker_converter_spins_the_engine_faster() {
    let reference = reference_run();
    let weak = run_cycle(&RunConfig::reference().with_converter_scale(0.8)).unwrap();
    assert!(weak.metrics.mean_engine_speed > reference.metrics.mean_engine_speed);
}
