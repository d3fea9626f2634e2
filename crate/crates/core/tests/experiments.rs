use slelab::experiments::{
    run_drift_consistency_experiment, run_jump_universality_experiment, run_levelline_kappa_experiment,
    DriftConsistencyConfig, JumpUniversalityConfig, LevelLineKappaConfig,
};

fn drift(q: &str, spectators: &[(&str, &str)]) -> (f64, f64, f64) {
    let cfg = DriftConsistencyConfig {
        q: q.into(),
        spectators: spectators.iter().map(|(x, c)| (x.to_string(), c.to_string())).collect(),
        radius: 64,
        n_samples: 300,
        seed: 5,
        ..Default::default()
    };
    let r = run_drift_consistency_experiment(&cfg).unwrap();
    assert!(r.n_failed as f64 <= 0.05 * r.n_samples as f64);
    let d = r.estimate("initial_drift").unwrap();
    (d.value, d.stderr, r.estimate("predicted_drift").unwrap().value)
}

#[test]
fn unit_charge_has_no_drift_whatever_the_spectators() {
    let (value, stderr, predicted) = drift("1", &[("2", "1"), ("-3", "1/2")]);
    assert_eq!(predicted, 0.0);
    assert!(value.abs() <= 3.0 * stderr, "{value} ± {stderr}");
}

#[test]
fn mirror_spectators_cancel() {
    let (value, stderr, predicted) = drift("1/2", &[("2", "1"), ("-2", "1")]);
    assert_eq!(predicted, 0.0);
    assert!(value.abs() <= 3.0 * stderr, "{value} ± {stderr}");
}

#[test]
fn kappa_does_not_move_away_from_four_as_radius_doubles() {
    let run = |radius| {
        let cfg = LevelLineKappaConfig { radius, n_samples: 200, n_boot: 100, seed: 2, ..Default::default() };
        let r = run_levelline_kappa_experiment(&cfg).unwrap();
        let k = r.estimate("kappa").unwrap();
        (k.value, k.stderr)
    };
    let (k64, _) = run(64);
    let (k128, se128) = run(128);
    assert!((k128 - 4.0).abs() <= (k64 - 4.0).abs() || (k128 - 4.0).abs() <= 3.0 * se128, "{k64} then {k128} ± {se128}");
}

#[test]
fn unit_charge_jump_profile_decreases_with_distance() {
    let cfg = JumpUniversalityConfig { q_list: vec![1.0], radii: vec![64, 64], n_samples: 60, ..Default::default() };
    let r = run_jump_universality_experiment(&cfg).unwrap();
    let profile = r.series.iter().find(|s| s.name == "jump_profile[q=1,R=64]").unwrap();
    for k in 1..profile.y.len() {
        let slack = 2.0 * (profile.yerr[k] + profile.yerr[k - 1]);
        assert!(profile.y[k] <= profile.y[k - 1] + slack, "{:?}", profile.y);
    }
    assert!(r.notes.iter().any(|n| n.contains("extrapolation")));
}
