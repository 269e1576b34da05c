use mqs_core::indices::{
    build_vcm, commutator_spectrum_check, double_commutator_trace_norm, extract_witness, fit_exponent,
    max_variance, maximize_q, variance, QSearch,
};
use mqs_core::lattice::{embed_local, pauli_x, pauli_y, pauli_z, C64};
use mqs_core::linalg;
use mqs_core::{AdditiveOperator, CMatrix, DensityState, LatticeConfig, PureState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn qubits(n: usize) -> LatticeConfig {
    LatticeConfig::qubits(n).unwrap()
}

/// Dense `<A^2> - <A>^2` from the realized matrix.
fn dense_variance(psi: &PureState, a: &CMatrix) -> f64 {
    let v = psi.amplitudes();
    let av = a * v;
    let mean = v.dotc(&av).re;
    av.norm_squared() - mean * mean
}

/// Dense `||[A,[A,rho]]||_1` via full eigendecomposition.
fn dense_q(rho: &CMatrix, a: &CMatrix) -> f64 {
    let y = a * rho - rho * a;
    let x = a * &y - &y * a;
    linalg::eigvalsh(&x).iter().map(|v| v.abs()).sum()
}

/// Quasi-uniform points on the unit sphere.
fn fibonacci_sphere(k: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn site_matrix(c: &[f64; 3]) -> CMatrix {
    pauli_x() * C64::new(c[0], 0.0) + pauli_y() * C64::new(c[1], 0.0) + pauli_z() * C64::new(c[2], 0.0)
}

#[test]
fn variance_examples() {
    let lat = qubits(4);
    let mz = AdditiveOperator::magnetization_z(lat);
    assert!((variance(&PureState::cat(lat).unwrap(), &mz).unwrap() - 16.0).abs() < 1e-12);
    assert_eq!(variance(&PureState::all_zero(lat).unwrap(), &mz).unwrap(), 0.0);
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let plus = PureState::product(lat, &vec![vec![h, h]; 4]).unwrap();
    assert!((variance(&plus, &mz).unwrap() - 4.0).abs() < 1e-12);
    assert!(variance(&plus, &AdditiveOperator::magnetization_z(qubits(3))).is_err());
}

#[test]
fn vcm_examples_and_quadratic_form() {
    let lat = qubits(4);
    let zero = build_vcm(&PureState::all_zero(lat).unwrap());
    for i in 0..12 {
        for j in 0..12 {
            // Per-site oracle: x, y have variance 1 on |0>, z has 0, no cross-site terms.
            let expected = if i == j && i % 3 != 2 { 1.0 } else { 0.0 };
            assert!((zero.entries[(i, j)] - expected).abs() < 1e-12);
        }
    }
    let cat = build_vcm(&PureState::cat(lat).unwrap());
    let (vals, _) = cat.eigen();
    assert!((vals[11] - 4.0).abs() < 1e-12);
    for l in 0..4 {
        for m in 0..4 {
            assert!((cat.entries[(3 * l + 2, 3 * m + 2)] - 1.0).abs() < 1e-12);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in [2usize, 3, 5] {
        let lat = qubits(n);
        let psi = PureState::random(lat, &mut rng).unwrap();
        let vcm = build_vcm(&psi);
        let (vals, _) = vcm.eigen();
        assert!(vals[0] >= -1e-9);
        assert!((&vcm.entries - vcm.entries.transpose()).amax() < 1e-10);
        for _ in 0..50 {
            let a = AdditiveOperator::random(lat, &mut rng);
            let q = vcm.quadratic_form(a.coeffs());
            assert!((q - dense_variance(&psi, &a.realize())).abs() < 1e-9);
        }
    }
}

#[test]
fn max_variance_examples() {
    let lat = qubits(4);
    let cat = max_variance(&PureState::cat(lat).unwrap());
    assert!((cat.max_variance - 16.0).abs() < 1e-9);
    assert!((cat.vcm_upper_bound - 16.0).abs() < 1e-9);
    for site in 1..=4 {
        let c = cat.optimal_operator.site_coeffs(site);
        assert!((c[2].abs() - 1.0).abs() < 1e-9, "{c:?}");
    }
    let zero = max_variance(&PureState::all_zero(lat).unwrap());
    assert!((zero.max_variance - 4.0).abs() < 1e-9);
    let single = max_variance(&PureState::all_zero(qubits(1)).unwrap());
    assert!((single.max_variance - 1.0).abs() < 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=6 {
        let psi = PureState::random(qubits(n), &mut rng).unwrap();
        let r = max_variance(&psi);
        assert!(r.max_variance <= r.vcm_upper_bound + 1e-8);
        assert!((r.max_variance - variance(&psi, &r.optimal_operator).unwrap()).abs() < 1e-9);
        for site in 1..=n {
            assert!(r.optimal_operator.site_norm(site) <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn max_variance_matches_grid_search_two_sites() {
    let lat = qubits(2);
    let grid = fibonacci_sphere(300);
    let mats: Vec<(CMatrix, CMatrix)> = grid
        .iter()
        .map(|c| {
            let m = site_matrix(c);
            (embed_local(&m, 1, &lat).unwrap(), embed_local(&m, 2, &lat).unwrap())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut states = vec![PureState::cat(lat).unwrap(), PureState::all_zero(lat).unwrap()];
    for _ in 0..3 {
        states.push(PureState::random(lat, &mut rng).unwrap());
    }
    for psi in &states {
        let mut best = 0.0f64;
        for (m1, _) in &mats {
            for (_, m2) in &mats {
                best = best.max(dense_variance(psi, &(m1 + m2)));
            }
        }
        let got = max_variance(psi).max_variance;
        assert!((got - best).abs() <= 0.02 * best, "got {got} grid {best}");
    }
}

#[test]
fn commutator_spectrum_identity_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..60 {
        let n = 1 + trial % 6;
        let lat = qubits(n);
        let psi = PureState::random(lat, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let r = commutator_spectrum_check(&psi, &a).unwrap();
        assert!(r.identity_error < 1e-9);
        assert!((r.trace_norm - 2.0 * r.std_dev).abs() < 1e-9);
        assert!((r.frobenius_norm - 2f64.sqrt() * r.std_dev).abs() < 1e-9);
        assert!((r.operator_norm - r.std_dev).abs() < 1e-9);
    }
    let lat = qubits(4);
    let r = commutator_spectrum_check(&PureState::cat(lat).unwrap(), &AdditiveOperator::magnetization_z(lat)).unwrap();
    assert!((r.eigenvalues[0] + 4.0).abs() < 1e-12 && (r.eigenvalues[15] - 4.0).abs() < 1e-12);
    let r = commutator_spectrum_check(&PureState::all_zero(lat).unwrap(), &AdditiveOperator::magnetization_z(lat)).unwrap();
    assert!(r.eigenvalues.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn double_commutator_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..40 {
        let n = 1 + trial % 5;
        let lat = qubits(n);
        let rank = 1 + trial % lat.dim();
        let rho = DensityState::random(lat, rank, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let oracle = dense_q(rho.matrix(), &a.realize());
        let got = double_commutator_trace_norm(&rho, &a).unwrap();
        assert!((got - oracle).abs() < 1e-9 * oracle.max(1.0));
    }
}

#[test]
fn witness_identity_and_cat_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..100 {
        let n = 1 + trial % 6;
        let lat = qubits(n);
        let rho = DensityState::random(lat, 1 + trial % 4, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let w = extract_witness(&rho, &a).unwrap();
        let am = a.realize();
        let y = &am * rho.matrix() - rho.matrix() * &am;
        let x = &am * &y - &y * &am;
        let value = 2.0 * linalg::trace_product(&w.projector, &x).re;
        assert!((value - dense_q(rho.matrix(), &am)).abs() < 1e-8);
        assert!(linalg::max_abs(&(&w.projector * &w.projector - &w.projector)) < 1e-9);
    }
    let lat = qubits(4);
    let cat = PureState::cat(lat).unwrap();
    let w = extract_witness(&cat.to_density().unwrap(), &AdditiveOperator::magnetization_z(lat)).unwrap();
    assert_eq!(w.rank, 1);
    assert!((w.witness_value - 64.0).abs() < 1e-9);
}

/// Oracle: for a pure product state `||[A,[A,psi]]||_1 <= 2 sqrt(<dA^4>) + 2 Var`
/// with `<dA^4> <= 3N^2 + 4N`, and the trace norm is convex in the state.
fn product_mixture_bound(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (3.0 * n * n + 4.0 * n).sqrt() + 2.0 * n
}

#[test]
fn maximize_q_product_mixture_is_linearly_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [3usize, 4, 5, 6] {
        let rho = DensityState::random_product_mixture(qubits(n), 10, &mut rng).unwrap();
        let r = maximize_q(&rho, &QSearch::new(2, 1)).unwrap();
        assert!(r.best_value >= n as f64);
        assert!(r.best_trace_norm <= product_mixture_bound(n), "n={n} {}", r.best_trace_norm);
    }
}

#[test]
fn maximize_q_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rho = DensityState::random(qubits(4), 2, &mut rng).unwrap();
    let a = maximize_q(&rho, &QSearch::new(3, 5)).unwrap();
    let b = maximize_q(&rho, &QSearch::new(3, 5)).unwrap();
    assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
    assert_eq!(a.best_operator, b.best_operator);
}

#[test]
fn fit_examples() {
    let f = fit_exponent(&[(4, 16.0), (6, 36.0), (8, 64.0), (10, 100.0)]).unwrap();
    assert!((f.exponent - 2.0).abs() < 1e-12);
    let f = fit_exponent(&[(4, 4.0), (8, 8.0), (16, 16.0)]).unwrap();
    assert!((f.exponent - 1.0).abs() < 1e-12);
    let err = fit_exponent(&[(4, 4.0), (8, -1.0), (16, 16.0)]).unwrap_err();
    assert!(err.to_string().contains("N=8"));
}
