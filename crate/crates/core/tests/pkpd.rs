use std::io::Write;

use nalgebra::{DMatrix, DVector};
use pgnmpc::model::DiscreteSystem;
use pgnmpc::pkpd::{
    bis, bis_gradient, build_pk_matrices, discretize, patient_system, DrugRates,
    InputBoundsSchedule, PatientFile, PatientModel, PdParams, PkRates, EFFECT_P, EFFECT_R,
};
use pgnmpc::reference::{euler_zoh, expm_taylor};
use pgnmpc::Error;
use proptest::prelude::*;

const PATIENT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/patient_nominal.json");

fn nominal() -> PatientModel {
    PatientModel::from_file(&PatientFile::load(PATIENT).unwrap(), 0.1).unwrap()
}

fn rates(values: [f64; 7]) -> DrugRates {
    let [k12, k13, k10, k21, k31, k1e, ke0] = values;
    DrugRates {
        k12,
        k13,
        k10,
        k21,
        k31,
        k1e,
        ke0,
    }
}

fn rate_strategy() -> impl Strategy<Value = DrugRates> {
    (
        prop::array::uniform5(0.0..1.0f64),
        0.0..1.0f64,
        0.01..2.0f64,
    )
        .prop_map(|(a, k1e, ke0)| rates([a[0], a[1], a[2], a[3], a[4], k1e, ke0]))
}

#[test]
fn pk_matrices_have_block_structure() {
    let r = rates([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    let (ac, bc) = build_pk_matrices(&PkRates { p: r, r }).unwrap();
    #[rustfmt::skip]
    let block = DMatrix::from_row_slice(4, 4, &[
        -6.0, 4.0, 5.0, 0.0,
        1.0, -4.0, 0.0, 0.0,
        2.0, 0.0, -5.0, 0.0,
        6.0, 0.0, 0.0, -7.0,
    ]);
    assert_eq!(ac.view((0, 0), (4, 4)).into_owned(), block);
    assert_eq!(ac.view((4, 4), (4, 4)).into_owned(), block);
    assert_eq!(ac.view((0, 4), (4, 4)).amax(), 0.0);
    assert_eq!(ac.view((4, 0), (4, 4)).amax(), 0.0);
    let mut expected_b = DMatrix::zeros(8, 2);
    expected_b[(0, 0)] = 1.0;
    expected_b[(4, 1)] = 1.0;
    assert_eq!(bc, expected_b);
}

#[test]
fn negative_rate_rejected() {
    let mut pk = *nominal().pk();
    pk.r.k21 = -0.1;
    assert!(matches!(build_pk_matrices(&pk), Err(Error::Config(_))));
}

#[test]
fn discretize_examples() {
    let (ad, bd) = discretize(
        &DMatrix::from_element(1, 1, -1.0),
        &DMatrix::from_element(1, 1, 1.0),
        1.0,
    )
    .unwrap();
    assert!((ad[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
    assert!((bd[(0, 0)] - (1.0 - (-1f64).exp())).abs() < 1e-15);
    let m = nominal();
    assert!(matches!(
        discretize(m.ac(), m.bc(), 0.0),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        discretize(m.ac(), m.bc(), -0.1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn exponential_matches_taylor_oracle() {
    let m = nominal();
    for ts in [0.05, 0.1, 1.0, 5.0] {
        let (ad, _) = discretize(m.ac(), m.bc(), ts).unwrap();
        let oracle = expm_taylor(&(m.ac() * ts));
        assert!((ad - oracle).amax() <= 1e-10, "ts {ts}");
    }
}

#[test]
fn euler_converges_at_first_order() {
    let m = nominal();
    let x0 = DVector::from_vec(vec![20.0, 5.0, 1.0, 0.5, 30.0, 2.0, 0.1, 1.0]);
    let u = DVector::from_vec(vec![100.0, 10.0]);
    let exact = m.ad() * &x0 + m.bd() * &u;
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| (euler_zoh(m.ac(), m.bc(), &x0, &u, 0.1, n) - &exact).norm())
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.05, "{errors:?}");
    }
}

#[test]
fn bis_examples() {
    let pd = PdParams::default();
    assert_eq!(bis(0.0, 0.0, &pd).unwrap(), 100.0);
    assert!((bis(pd.c50p, 0.0, &pd).unwrap() - 50.0).abs() <= 1e-12);
    assert!((bis(0.0, pd.c50r, &pd).unwrap() - 50.0).abs() <= 1e-12);
    // Both drugs at their C50: U = 2 + β.
    let expected = 100.0 - 100.0 * (2.0 + 5.1f64).powf(3.76) / ((2.0 + 5.1f64).powf(3.76) + 1.0);
    let got = bis(1.8, 12.5, &pd).unwrap();
    assert!((got - expected).abs() <= 1e-12);
    assert!((got - 0.062_949_913_073_263_53).abs() <= 1e-12);
    assert!(matches!(bis(-0.1, 0.0, &pd), Err(Error::Domain(_))));
    assert!(matches!(bis(0.0, f64::NAN, &pd), Err(Error::Domain(_))));
}

#[test]
fn bis_gradient_matches_central_differences() {
    let pd = PdParams::default();
    let h = 1e-6;
    for &(cp, cr) in &[(0.5, 2.0), (1.8, 12.5), (3.0, 0.4), (0.1, 20.0), (4.0, 8.0)] {
        let (gp, gr) = bis_gradient(cp, cr, &pd).unwrap();
        let fp = (bis(cp + h, cr, &pd).unwrap() - bis(cp - h, cr, &pd).unwrap()) / (2.0 * h);
        let fr = (bis(cp, cr + h, &pd).unwrap() - bis(cp, cr - h, &pd).unwrap()) / (2.0 * h);
        assert!((gp - fp).abs() <= 1e-6 * fp.abs().max(1.0), "({cp}, {cr})");
        assert!((gr - fr).abs() <= 1e-6 * fr.abs().max(1.0), "({cp}, {cr})");
    }
}

#[test]
fn bis_grid_bounded_and_monotone() {
    let pd = PdParams::default();
    let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
    let rgrid: Vec<f64> = (0..50).map(|i| i as f64 * 1.0).collect();
    let mut values = vec![vec![0.0; 50]; 50];
    for (i, &cp) in grid.iter().enumerate() {
        for (j, &cr) in rgrid.iter().enumerate() {
            let b = bis(cp, cr, &pd).unwrap();
            assert!((pd.e0 - pd.emax..=pd.e0).contains(&b));
            let (gp, gr) = bis_gradient(cp, cr, &pd).unwrap();
            assert!(gp <= 0.0 && gr <= 0.0);
            values[i][j] = b;
        }
    }
    for i in 0..50 {
        for j in 0..50 {
            if i + 1 < 50 {
                assert!(values[i + 1][j] <= values[i][j]);
            }
            if j + 1 < 50 {
                assert!(values[i][j + 1] <= values[i][j]);
            }
        }
    }
}

#[test]
fn patient_system_steps_and_decouples() {
    let m = nominal();
    let sys = patient_system(&m);
    assert_eq!(sys.state_dim(), 8);
    assert_eq!(sys.input_dim(), 2);
    let zero = DVector::zeros(8);
    assert_eq!(sys.step(&zero, &DVector::zeros(2)), zero);
    assert_eq!(sys.output(&zero), 100.0);

    // Propofol alone leaves the remifentanil block untouched.
    let x = sys.step(&zero, &DVector::from_vec(vec![50.0, 0.0]));
    assert!(x.rows(0, 4).iter().all(|v| *v > 0.0));
    assert!(x.rows(4, 4).iter().all(|v| *v == 0.0));
    let x = sys.step(&zero, &DVector::from_vec(vec![0.0, 5.0]));
    assert!(x.rows(0, 4).iter().all(|v| *v == 0.0));
    assert!(x.rows(4, 4).iter().all(|v| *v > 0.0));
    assert_eq!(sys.jacobian_x(&zero, &DVector::zeros(2)), *m.ad());
    assert_eq!(sys.jacobian_u(&zero, &DVector::zeros(2)), *m.bd());
    assert_eq!(m.output(&zero), 100.0);
    // Only the effect-site entries reach the output.
    let mut at_c50 = DVector::from_element(8, 7.0);
    at_c50[EFFECT_P] = m.pd().c50p;
    at_c50[EFFECT_R] = 0.0;
    assert!((sys.output(&at_c50) - 50.0).abs() <= 1e-12);
}

#[test]
fn infusion_drives_bis_down() {
    let m = nominal();
    let sys = patient_system(&m);
    let mut x = DVector::zeros(8);
    let u = DVector::from_vec(vec![140.0, 7.0]);
    let mut last = sys.output(&x);
    for _ in 0..50 {
        x = sys.step(&x, &u);
        let y = sys.output(&x);
        assert!(y <= last);
        last = y;
    }
    assert!(last < 60.0, "BIS after 5 min of induction infusion: {last}");
}

#[test]
fn bounds_schedule() {
    let s = InputBoundsSchedule::default();
    let b = s.bounds_at(0.0, 70.0);
    assert!((b.upper()[0] - 280.0).abs() < 1e-12 && (b.upper()[1] - 25.2).abs() < 1e-12);
    let b = s.bounds_at(10.0, 70.0);
    assert!((b.upper()[0] - 56.0).abs() < 1e-12 && (b.upper()[1] - 4.9).abs() < 1e-12);
    let b = s.bounds_at(10.0 - 1e-9, 70.0);
    assert!((b.upper()[0] - 280.0).abs() < 1e-12);
    assert_eq!(b.lower().as_slice(), &[0.0, 0.0]);
}

#[test]
fn patient_file_round_trip_and_strictness() {
    let file = PatientFile::load(PATIENT).unwrap();
    let model = PatientModel::from_file(&file, 0.1).unwrap();
    assert_eq!(model.to_file(), file);
    assert_eq!(model.weight_kg(), 70.0);

    let text = std::fs::read_to_string(PATIENT).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["pd"]["gamma"] = serde_json::json!(1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("patient.json");
    std::fs::File::create(&path)
        .unwrap()
        .write_all(value.to_string().as_bytes())
        .unwrap();
    assert!(matches!(PatientFile::load(&path), Err(Error::Config(_))));
    assert!(matches!(
        PatientFile::load(dir.path().join("missing.json")),
        Err(Error::Config(_))
    ));
}

#[test]
fn perturbation_scales_parameters() {
    let m = nominal();
    let p = m.perturbed(0.9, 1.1, 1.2).unwrap();
    assert!((p.pd().c50p - 1.62).abs() < 1e-12);
    assert!((p.pd().c50r - 13.75).abs() < 1e-12);
    assert!((p.pk().p.ke0 - 1.2 * m.pk().p.ke0).abs() < 1e-12);
    assert_eq!(m.perturbed(1.0, 1.0, 1.0).unwrap().ad(), m.ad());
    assert!(m.perturbed(0.0, 1.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pk_eigenvalues_in_closed_left_half_plane(p in rate_strategy(), r in rate_strategy()) {
        let (ac, _) = build_pk_matrices(&PkRates { p, r }).unwrap();
        for z in ac.complex_eigenvalues().iter() {
            prop_assert!(z.re <= 1e-12, "eigenvalue {z}");
        }
    }

    #[test]
    fn nonnegative_inputs_keep_states_nonnegative(
        inputs in prop::collection::vec((0.0..300.0f64, 0.0..30.0f64), 1..80),
        x0 in prop::array::uniform8(0.0..50.0f64),
    ) {
        let sys = patient_system(&nominal());
        let mut x = DVector::from_row_slice(&x0);
        for (up, ur) in inputs {
            x = sys.step(&x, &DVector::from_vec(vec![up, ur]));
            prop_assert!(x.iter().all(|v| *v >= -1e-12), "{x}");
        }
    }
}
