//! Build-level acceptance suite. Prints one line per criterion; criterion 7 is
//! exploratory and only reported.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slelab::cft::{
    check_deformed_null_on_correlator, check_deformed_null_with_rho, check_m2_identity, check_m2_with_alpha,
    check_perturbed_identity, m2_alpha, parse_rational, rho_coefficients, ChargeConfig, RationalEvaluator, Q,
};
use slelab::driver::{sample_ensemble, sample_sle_driving, sample_sle_rho_driving, sample_via_current, DriftRoute, ForcePoint};
use slelab::experiments::{
    run_drift_consistency_experiment, run_jump_universality_experiment, run_levelline_kappa_experiment,
    DriftConsistencyConfig, JumpUniversalityConfig, LevelLineKappaConfig,
};
use slelab::gff::{continuum_harmonic, sample_fluctuation, solve_harmonic_part, BoundaryData, LatticeDomain};
use slelab::loewner::{compute_trace, fit_laurent, LoewnerChain};
use slelab::stats::{ks_critical, ks_two_sample, mean, variance};
use slelab::zipper::{estimate_drift, estimate_kappa, extract_driving_with, CurveInput, GridSpec, ZipperConfig};
use slelab::{Complex64, DrivingPath, ForceSpec, SdeConfig};

// Tolerances.
const TIP_TOL: f64 = 1e-4;
const CAPACITY_REL_TOL: f64 = 1e-3;
const ROUND_TRIP_SUP: f64 = 5e-2;
const ROUTE_SUP: f64 = 1e-8;
const N_SIGMA: f64 = 3.0;
const KS_ALPHA: f64 = 0.01;
const CALIBRATION_DRIFT: f64 = 0.02;
/// Harmonic part error at mid-domain, in units of `1/R`.
const HARMONIC_ERR_TIMES_R: f64 = 2.0;
const JUMP_REL_TOL: f64 = 0.15;

// Budgets.
const N_SDE_PATHS: usize = 10_000;
const N_FIELD_SAMPLES: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn q(s: &str) -> Q {
    parse_rational(s).unwrap()
}

fn criterion_1() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let two = q("2");
    let charges = ["1", "-1", "1/2", "-1/2", "3/2", "2/3"];
    for c in charges {
        let r = check_m2_identity(&q(c), &two).unwrap();
        pass &= r.pass;
        // Negative control: shifted α.
        let alpha = m2_alpha(&q(c)).unwrap() + q("1/7");
        pass &= !check_m2_with_alpha(&q(c), &two, &alpha).unwrap().pass;
    }
    lines.push(format!("m2 on {} charges", charges.len()));

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let rational = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| {
        let mut v = 0;
        while v == 0 {
            v = rng.random_range(lo..=hi);
        }
        Q::new(BigInt::from(v), BigInt::from(rng.random_range(1..=9i64)))
    };
    let mut n_configs = 0;
    for k in 0..20 {
        let n = 2 + k % 3;
        let mut charges: Vec<Q> = (0..n).map(|_| rational(&mut rng, -9, 9)).collect();
        if k % 4 == 0 {
            charges[0] = q("1");
        }
        let mut positions: Vec<Q> = Vec::new();
        while positions.len() < n {
            let x = rational(&mut rng, -30, 30);
            if !positions.contains(&x) {
                positions.push(x);
            }
        }
        let cfg = ChargeConfig::new(charges, positions).unwrap();
        pass &= check_deformed_null_on_correlator(&cfg, 0, 6, k as u64).unwrap().pass;
        // Negative control: perturbed ρ.
        let mut rho = rho_coefficients(&cfg, 0).unwrap();
        rho[1] += q("1/3");
        pass &= !check_deformed_null_with_rho(&cfg, 0, &rho, &RationalEvaluator::random(n, 5, k as u64)).unwrap().pass;
        n_configs += 1;
    }
    lines.push(format!("{n_configs} correlator configurations"));

    let mut holds = 0;
    for s in ["1", "2", "4", "9/4"] {
        for c in charges {
            let r = check_perturbed_identity(&q(c), &q(s)).unwrap();
            pass &= r.pass && r.undeformed.pass == r.undeformed_expected;
            holds += r.undeformed.pass as usize;
        }
    }
    lines.push(format!("perturbed: undeformed holds in {holds} of 24 cases"));
    Outcome { pass, detail: lines.join("; ") }
}

/// Reads the trace as a straight-segment polyline, upsampled `m` times, and
/// compares the re-extracted driving function at the original vertices.
fn polyline_round_trip_error(path: &DrivingPath, m: usize) -> f64 {
    let trace = compute_trace(path).unwrap();
    let mut pts = vec![trace.points[0]];
    for w in trace.points.windows(2) {
        pts.extend((1..=m).map(|j| w[0] + (w[1] - w[0]) * (j as f64 / m as f64)));
    }
    let cfg = ZipperConfig { n_min: 0, ..Default::default() };
    let back = extract_driving_with(&CurveInput::new(pts).unwrap(), &cfg).unwrap();
    (0..path.len()).map(|k| (back.values()[k * m] - path.values()[k]).abs()).fold(0.0, f64::max)
}

fn criterion_2() -> Outcome {
    let zero = DrivingPath::constant(1.0, 2000, 0.0);
    let tip = compute_trace(&zero).unwrap().tip();
    let tip_err = (tip - Complex64::new(0.0, 2.0)).norm();

    let fine = sample_sle_driving(4.0, &SdeConfig::new(1.0, 4000, 1)).unwrap();
    let coarse = DrivingPath::uniform(1.0, fine.values().iter().step_by(2).copied().collect()).unwrap();
    let chain = LoewnerChain::from_driving(&coarse);
    let fit = fit_laurent(&chain, 1e4, 64).unwrap();
    let cap_err = (fit.capacity() - chain.capacity()).abs() / chain.capacity();
    let lead_err = (fit.leading - 1.0).norm();

    let e_n = polyline_round_trip_error(&coarse, 4);
    let e_2n = polyline_round_trip_error(&fine, 4);
    let pass = tip_err < TIP_TOL && cap_err < CAPACITY_REL_TOL && lead_err < 1e-6 && e_n <= ROUND_TRIP_SUP && e_2n < e_n;
    Outcome {
        pass,
        detail: format!(
            "tip error {tip_err:.2e}; capacity rel error {cap_err:.2e}; leading {lead_err:.1e}; round trip sup {e_n:.4} (n=2000) > {e_2n:.4} (n=4000)"
        ),
    }
}

fn criterion_3() -> Outcome {
    let spec = ForceSpec::new(4.0, vec![ForcePoint { x: 1.0, rho: 1.0 }]).unwrap();
    let window = 0.01;
    let ens = sample_ensemble(&spec, &SdeConfig::new(window, 100, 3), N_SDE_PATHS, DriftRoute::ForcePoints).unwrap();
    let d = estimate_drift(&ens.paths, (0.0, window), 1).unwrap();
    let drift_ok = d.window.within(-1.0, N_SIGMA);

    let mut sup: f64 = 0.0;
    for seed in 0..10 {
        let cfg = SdeConfig::new(1.0, 1000, seed);
        let a = sample_sle_rho_driving(&spec, &cfg).unwrap();
        let b = sample_via_current(&spec, &cfg).unwrap();
        sup = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(sup, f64::max);
    }
    Outcome {
        pass: drift_ok && sup < ROUTE_SUP,
        detail: format!(
            "initial drift {:.3} ± {:.3} over {} paths (target -1); route sup difference {sup:.1e}",
            d.window.value, d.window.stderr, d.window.n
        ),
    }
}

fn criterion_4() -> Outcome {
    let plain = ForceSpec::plain(4.0);
    let ens = sample_ensemble(&plain, &SdeConfig::new(1.0, 100, 4), N_SDE_PATHS, DriftRoute::ForcePoints).unwrap();
    let k = estimate_kappa(&ens.paths, GridSpec::default(), 200, 4).unwrap();
    let kappa_ok = (k.kappa - 4.0).abs() <= N_SIGMA * k.stderr;

    let sigma = 2.0;
    let long = sample_ensemble(&plain, &SdeConfig::new(sigma * sigma, 400, 5), N_SDE_PATHS, DriftRoute::ForcePoints).unwrap();
    let a: Vec<f64> = long.paths.iter().map(|p| p.rescaled(sigma).value_at(1.0)).collect();
    let b: Vec<f64> = ens.paths.iter().map(|p| p.value_at(1.0)).collect();
    let d = ks_two_sample(&a, &b);
    let crit = ks_critical(KS_ALPHA, a.len(), b.len());
    Outcome {
        pass: kappa_ok && d < crit,
        detail: format!("kappa {:.4} ± {:.4} (target 4); scaling KS {d:.4} < {crit:.4}", k.kappa, k.stderr),
    }
}

fn criterion_5() -> Outcome {
    let dom = LatticeDomain::new(64).unwrap();
    let kappa_lat = dom.calibrate(1.0).unwrap().kappa_lat;
    let r = dom.radius() as f64;
    let probes: Vec<usize> = (0..10)
        .map(|k| {
            let theta = std::f64::consts::PI * (k as f64 + 0.5) / 10.0;
            let rad = r * (0.2 + 0.06 * k as f64);
            dom.nearest_site(Complex64::from_polar(rad, theta)).unwrap()
        })
        .collect();
    let mut cols = vec![Vec::with_capacity(N_FIELD_SAMPLES); probes.len()];
    for i in 0..N_FIELD_SAMPLES as u64 {
        let f = sample_fluctuation(&dom, kappa_lat, 5, i);
        for (c, &s) in cols.iter_mut().zip(&probes) {
            c.push(f[s]);
        }
    }
    let mut worst_z: f64 = 0.0;
    for (c, &s) in cols.iter().zip(&probes) {
        let want = kappa_lat * dom.green_column(s)[s];
        let m = mean(c);
        let v = variance(c);
        let fourth = c.iter().map(|x| (x - m).powi(4)).sum::<f64>() / c.len() as f64;
        let se = ((fourth - v * v) / c.len() as f64).sqrt();
        worst_z = worst_z.max((v - want).abs() / se);
    }
    let cov_ok = worst_z <= N_SIGMA;

    let k64 = kappa_lat;
    let k128 = LatticeDomain::new(128).unwrap().calibrate(1.0).unwrap().kappa_lat;
    let cal_drift = (k128 - k64).abs() / k64;

    let mut harm_worst: f64 = 0.0;
    for radius in [64usize, 128] {
        let dom = if radius == 64 { dom.clone() } else { LatticeDomain::new(radius).unwrap() };
        let bc = BoundaryData::single(1.0, 1.0).unwrap();
        let h = solve_harmonic_part(&dom, &bc).unwrap();
        let rr = radius as f64;
        for z in [Complex64::new(0.0, 0.5), Complex64::new(0.3, 0.35), Complex64::new(-0.3, 0.25)] {
            let s = dom.nearest_site(z * rr).unwrap();
            let err = (h[s] - continuum_harmonic(dom.position(s), &bc).unwrap()).abs();
            harm_worst = harm_worst.max(err * rr);
        }
    }
    Outcome {
        pass: cov_ok && cal_drift < CALIBRATION_DRIFT && harm_worst < HARMONIC_ERR_TIMES_R,
        detail: format!(
            "variance worst |z| {worst_z:.2} at 10 sites; kappa_lat {k64:.4} (R=64) vs {k128:.4} (R=128), change {:.2}%; harmonic error x R {harm_worst:.3}",
            100.0 * cal_drift
        ),
    }
}

fn criterion_6() -> Outcome {
    let r = run_levelline_kappa_experiment(&LevelLineKappaConfig::default()).unwrap();
    let k = r.estimate("kappa").unwrap();
    let d = r.estimate("initial_drift").unwrap();
    let drift = r.check("drift_zero").unwrap();
    Outcome {
        pass: r.pass && !r.degenerate && drift.pass,
        detail: format!(
            "kappa {:.3} ± {:.3} in [3.5, 4.5]; drift {:.3} ± {:.3}; {} of {} samples failed",
            k.value, k.stderr, d.value, d.stderr, r.n_failed, r.n_samples
        ),
    }
}

fn criterion_7() -> Outcome {
    let j = run_jump_universality_experiment(&JumpUniversalityConfig { tolerance: JUMP_REL_TOL, ..Default::default() }).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["unit_charge_jump_2pi", "universality_2pi[q=0.5]", "unit_charge_jump_pi", "universality_pi[q=0.5]"] {
        let c = j.check(name).unwrap();
        parts.push(format!("{name} {:.3} {}", c.observed, if c.pass { "ok" } else { "miss" }));
        if name.ends_with("2pi") || name.contains("2pi[") {
            pass &= c.pass;
        }
    }
    let d = run_drift_consistency_experiment(&DriftConsistencyConfig::default()).unwrap();
    let dc = d.check("drift_matches_prediction").unwrap();
    pass &= dc.pass;
    parts.push(format!(
        "spectator drift {:.3} ± {:.3} vs predicted {:.3} {}",
        dc.observed,
        d.estimate("initial_drift").unwrap().stderr,
        dc.expected,
        if dc.pass { "ok" } else { "miss" }
    ));
    Outcome { pass, detail: parts.join("; ") }
}

fn main() {
    // Honour `cargo test -- <filter>` loosely: any filter not mentioning
    // acceptance skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str()) || a.contains("criterion")) {
        return;
    }
    let criteria: [(u32, &str, bool, fn() -> Outcome); 7] = [
        (1, "exact CFT suite", false, criterion_1),
        (2, "Loewner determinism", false, criterion_2),
        (3, "SDE drift", false, criterion_3),
        (4, "diffusivity recovery", false, criterion_4),
        (5, "GFF fidelity", false, criterion_5),
        (6, "level-line SLE4 check", false, criterion_6),
        (7, "jump universality (exploratory)", true, criterion_7),
    ];
    let mut failed = Vec::new();
    for (n, name, exploratory, run) in criteria {
        let t = Instant::now();
        let out = run();
        let elapsed: Duration = t.elapsed();
        let verdict = match (out.pass, exploratory) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (reported only)",
        };
        println!("criterion {n} [{name}]: {verdict} in {:.1}s: {}", elapsed.as_secs_f64(), out.detail);
        if !out.pass && !exploratory {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: primary criteria failed: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all primary criteria pass");
}
