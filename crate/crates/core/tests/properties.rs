use std::sync::Arc;

use proptest::prelude::*;

use slelab::cft::{check_m2_identity, check_perturbed_identity, parse_rational, Q};
use slelab::gff::{GffSampler, LatticeDomain};
use slelab::io::{driving_csv_string, driving_from_json, driving_to_json, read_driving_csv};
use slelab::levelline::{default_level, extract_from_values, Orientation};
use slelab::loewner::{compute_trace, elementary_slit_map, forward_evaluate, inverse_slit_map, LoewnerChain, Step};
use slelab::zipper::{extract_driving_with, CurveInput, ZipperConfig};
use slelab::{BoundaryData, Complex64, DrivingPath};

fn rational() -> impl Strategy<Value = Q> {
    (prop_oneof![-12i64..=-1, 1i64..=12], 1i64..=12).prop_map(|(p, q)| parse_rational(&format!("{p}/{q}")).unwrap())
}

fn steps() -> impl Strategy<Value = Vec<Step>> {
    prop::collection::vec((0.001f64..0.2, -0.3f64..0.3), 1..30)
        .prop_map(|v| v.into_iter().map(|(dt, offset)| Step { dt, offset }).collect())
}

fn walk() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.05f64..0.05, 10..80).prop_map(|inc| {
        let mut w = vec![0.0];
        for d in inc {
            w.push(w.last().unwrap() + d);
        }
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn capacity_is_additive_under_concatenation(a in steps(), b in steps()) {
        let ca = LoewnerChain::new(a.clone()).unwrap();
        let cb = LoewnerChain::new(b.clone()).unwrap();
        let sum: f64 = a.iter().chain(&b).map(|s| s.dt).sum();
        prop_assert_eq!(ca.concat(&cb).capacity(), sum);
    }

    #[test]
    fn slit_map_sends_tip_to_origin(dt in 1e-4f64..2.0, w in -3.0f64..3.0) {
        let tip = Complex64::new(w, 2.0 * dt.sqrt());
        prop_assert!(elementary_slit_map(tip, dt, w).unwrap().norm() < 1e-12);
    }

    #[test]
    fn slit_inverse_round_trips(dt in 1e-3f64..1.0, w in -1.0f64..1.0, x in -5.0f64..5.0, y in 0.01f64..5.0) {
        let z = Complex64::new(x, y);
        let back = inverse_slit_map(elementary_slit_map(z, dt, w).unwrap(), dt, w).unwrap();
        prop_assert!((back - z).norm() < 1e-9 * (1.0 + z.norm()));
    }

    #[test]
    fn forward_images_stay_in_upper_half_plane(s in steps(), x in -4.0f64..4.0, y in 0.5f64..4.0) {
        let chain = LoewnerChain::new(s).unwrap();
        let u = forward_evaluate(&chain, Complex64::new(x, y)).unwrap();
        prop_assert!(u.im >= 0.0);
    }

    #[test]
    fn trace_scales_covariantly(w in walk(), sigma in 0.5f64..3.0) {
        let path = DrivingPath::uniform(0.5, w).unwrap();
        let a = compute_trace(&path).unwrap();
        let b = compute_trace(&path.rescaled(sigma)).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert!((p / sigma - q).norm() < 1e-9);
        }
    }

    #[test]
    fn zipper_inverts_the_forward_trace(w in walk()) {
        let path = DrivingPath::uniform(0.3, w).unwrap();
        let trace = compute_trace(&path).unwrap();
        let cfg = ZipperConfig { n_min: 0, ..Default::default() };
        let back = extract_driving_with(&CurveInput::from_trace(&trace).unwrap(), &cfg).unwrap();
        for (a, b) in back.values().iter().zip(path.values()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn driving_paths_round_trip_through_files(w in walk()) {
        let path = DrivingPath::uniform(1.0, w).unwrap();
        prop_assert_eq!(&read_driving_csv(driving_csv_string(&path).as_bytes()).unwrap(), &path);
        prop_assert_eq!(&driving_from_json(&driving_to_json(&path)).unwrap(), &path);
    }

    #[test]
    fn m2_holds_for_any_rational_charge(c in rational()) {
        prop_assert!(check_m2_identity(&c, &parse_rational("2").unwrap()).unwrap().pass);
    }

    #[test]
    fn perturbed_identity_holds_for_any_s(c in rational(), s in rational()) {
        let s = if s < Q::from_integer(0.into()) { -s } else { s };
        let r = check_perturbed_identity(&c, &s).unwrap();
        prop_assert!(r.pass);
        prop_assert_eq!(r.undeformed.pass, &c * &c * &s == Q::from_integer(1.into()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn level_line_separates_values(seed in 0u64..1000) {
        let dom = Arc::new(LatticeDomain::new(16).unwrap());
        let s = GffSampler::new(dom.clone(), BoundaryData::single(1.0, 1.0).unwrap(), 10.0).unwrap();
        let values = s.sample(seed, 0).total();
        let level = default_level(&dom, &values) + 1e-9;
        let line = extract_from_values(&dom, &values, level).unwrap();
        prop_assert_eq!(line.orientation, Orientation::AboveRight);
        prop_assert!(line.check_separation(&values).is_ok());
        for &(l, r) in &line.edges {
            prop_assert!(values[l] < level && values[r] >= level);
        }
    }
}
