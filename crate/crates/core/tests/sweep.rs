use bec_cavity::classify::classify_phase;
use bec_cavity::dynamics::evolve_meanfield;
use bec_cavity::sweep::{run_sweep, write_json, Axis, SweepParam, SweepResult, SweepSpec, Task};
use bec_cavity::RunConfig;

fn base() -> RunConfig {
    RunConfig { u0n: -12.0, ..RunConfig::default() }
}

#[test]
fn single_point_grid_matches_a_direct_run() {
    let spec = SweepSpec {
        workers: 1,
        ..SweepSpec::new(
            Axis::fixed(SweepParam::DeltaC, 9.0),
            Axis::fixed(SweepParam::Eta, 6.4),
            base(),
            vec![Task::Classify],
        )
    };
    let result = run_sweep(&spec).unwrap();
    let rec = &result.records[0];

    let cfg = RunConfig { delta_c: 9.0, eta: 6.4, ..base() };
    let p = cfg.params().unwrap();
    let traj = evolve_meanfield(&cfg.initial_state(), &p, &cfg.integrator()).unwrap();
    let direct = classify_phase(&traj, &cfg.rules()).unwrap();

    assert_eq!(rec.label, direct.label.to_string());
    assert_eq!(rec.ipr, direct.ipr);
    assert_eq!(rec.mean_intensity, Some(direct.mean_intensity));
    assert_eq!(rec.dominant_frequency, direct.dominant_frequency);
}

#[test]
fn stored_result_reproduces_itself() {
    let spec = SweepSpec {
        workers: 2,
        ..SweepSpec::new(
            Axis::new(SweepParam::DeltaC, 8.0, 12.0, 3),
            Axis::new(SweepParam::Eta, 2.0, 10.0, 4),
            base(),
            vec![Task::Steady, Task::Stability],
        )
    };
    let first = run_sweep(&spec).unwrap();
    let mut buf = Vec::new();
    write_json(&first, &mut buf).unwrap();
    let stored: SweepResult = serde_json::from_slice(&buf).unwrap();
    assert_eq!(stored, first);

    let again = run_sweep(&SweepSpec { workers: 1, ..stored.spec.clone() }).unwrap();
    assert_eq!(again.records, first.records);
    assert_eq!(again.provenance.config_hash, first.provenance.config_hash);
}

#[test]
fn checkpoint_resume_gives_the_same_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::new(
        Axis::new(SweepParam::Eta, 2.0, 9.0, 3),
        Axis::new(SweepParam::DeltaC, 9.0, 11.0, 2),
        base(),
        vec![Task::Steady],
    );
    spec.workers = 1;
    spec.checkpoint_interval = 2;
    spec.checkpoint = Some(dir.path().join("log.jsonl"));
    let fresh = run_sweep(&spec).unwrap();
    let resumed = run_sweep(&spec).unwrap();
    assert_eq!(fresh.records, resumed.records);
}
