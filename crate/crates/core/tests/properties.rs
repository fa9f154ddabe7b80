//! Property tests over random states, fields and covariances.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use satmag::attitude::{attitude_error_angle, Quaternion, Vec3};
use satmag::dynamics::{magnetic_torque, rk4_step, RigidBody, SatelliteParams, TruthState};
use satmag::estimator::{update, FilterConfig, FilterState, FilterVariant};
use satmag::geomag::{GeomagCoefficients, ReferenceField};
use satmag::kalman::{joseph_update, min_eigenvalue};
use satmag::orbit::OrbitConfig;

fn unit_quat() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("non-degenerate", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|a| Quaternion::from_array(a).normalize())
}

fn vec3(half: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-half..half).prop_map(Vec3::from)
}

fn variant() -> impl Strategy<Value = FilterVariant> {
    prop_oneof![Just(FilterVariant::SixState), Just(FilterVariant::NineState)]
}

/// Random symmetric positive definite matrix `L Lᵀ + εI`.
fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let l = DMatrix::from_vec(n, n, v);
        &l * l.transpose() + DMatrix::identity(n, n) * 1e-3
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rk4_keeps_unit_quaternion(q in unit_quat(), w in vec3(0.2), m in vec3(2.0), b in vec3(5e-5)) {
        let body = RigidBody::new(&SatelliteParams::default()).unwrap();
        let s = TruthState { q, omega_ib_b: w, m, t: 0.0 };
        let field = move |_: f64| b;
        let next = rk4_step(&s, 0.1, &field, &body, 1.1e-3, &Vec3::zeros());
        prop_assert!((next.q.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torque_within_envelope(m_dir in vec3(1.0), t in 0.0f64..5400.0) {
        prop_assume!(m_dir.norm() > 1e-3);
        let m = m_dir.normalize() * 0.5;
        let field = ReferenceField::new(GeomagCoefficients::igrf13().into(), OrbitConfig::default()).unwrap();
        let b = field.at(t);
        prop_assert!(magnetic_torque(&m, &b).norm() <= 0.5 * 5e-5);
    }

    #[test]
    fn reference_field_is_continuous(t in 0.0f64..5400.0) {
        let field = ReferenceField::new(GeomagCoefficients::igrf13().into(), OrbitConfig::default()).unwrap();
        let step = (field.at(t + 0.1) - field.at(t)).norm();
        prop_assert!(step < 50e-9, "step {step:e} T at t = {t}");
    }

    #[test]
    fn error_angle_in_range(a in unit_quat(), b in unit_quat()) {
        let e = attitude_error_angle(a, b).to_degrees();
        prop_assert!((0.0..=180.0).contains(&e));
        prop_assert!(attitude_error_angle(a, -a).to_degrees() < 1e-6);
    }

    #[test]
    fn update_keeps_health(
        v in variant(),
        q in unit_quat(),
        w in vec3(0.01),
        b_o in vec3(5e-5),
        noise in vec3(1e-6),
        p in spd(9),
        scale in 1e-6f64..1e-1,
    ) {
        prop_assume!(b_o.norm() > 1e-5);
        let cfg = FilterConfig { variant: v, ..FilterConfig::default() };
        let n = v.dim();
        let mut fs = FilterState::new(&cfg, q, w, 0.0);
        fs.p = p.view((0, 0), (n, n)).into_owned() * scale;
        let trace_before = fs.p.trace();
        let b_meas = q.to_dcm() * b_o + noise;
        let (next, info) = update(&fs, &b_meas, &b_o, &cfg).unwrap();
        prop_assert!((next.q_hat.norm() - 1.0).abs() < 1e-9);
        prop_assert!((&next.p - next.p.transpose()).amax() < 1e-12);
        if info.applied {
            prop_assert!(min_eigenvalue(&next.p) >= -1e-12 * scale);
            prop_assert!(next.p.trace() <= trace_before * (1.0 + 1e-12));
        }
    }

    #[test]
    fn joseph_update_never_increases_trace(p in spd(4), h in prop::collection::vec(-1.0f64..1.0, 8), r in 0.01f64..10.0) {
        let h = DMatrix::from_vec(2, 4, h);
        let rm = DMatrix::identity(2, 2) * r;
        let out = joseph_update(&p, &h, &rm, &DVector::from_vec(vec![0.3, -0.2])).unwrap();
        prop_assert!(out.covariance.trace() <= p.trace() * (1.0 + 1e-12));
        prop_assert!(min_eigenvalue(&out.covariance) > -1e-12);
    }
}
