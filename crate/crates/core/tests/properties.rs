use mqs_core::lattice::{embed_local, local_basis, C64};
use mqs_core::linalg;
use mqs_core::norms::{schatten, schatten_norm, SchattenOrder};
use mqs_core::schmidt::schmidt;
use mqs_core::{AdditiveOperator, CMatrix, DensityState, LatticeConfig, PureState, SubsystemSupport};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    g.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn norm_ordering_and_triangle(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1 << n;
        let x = random_hermitian(dim, &mut rng);
        let y = random_hermitian(dim, &mut rng);
        let t = schatten(&x, SchattenOrder::Trace);
        let f = schatten(&x, SchattenOrder::Frobenius);
        let o = schatten(&x, SchattenOrder::Operator);
        prop_assert!(t >= f - 1e-9 && f >= o - 1e-9);
        for k in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let lhs = schatten_norm(&(&x + &y), k).unwrap();
            let rhs = schatten_norm(&x, k).unwrap() + schatten_norm(&y, k).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn unitary_invariance(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1 << n;
        let x = random_hermitian(dim, &mut rng);
        let u = random_unitary(dim, &mut rng);
        let y = &u * &x * u.adjoint();
        for k in [1.0, 2.0, 4.0, f64::INFINITY] {
            let a = schatten_norm(&x, k).unwrap();
            let b = schatten_norm(&y, k).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn schmidt_reconstruction(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = LatticeConfig::qubits(n).unwrap();
        let psi = PureState::random(lat, &mut rng).unwrap();
        for mask in 1u32..((1 << n) - 1) {
            let sites: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| k + 1).collect();
            let support = SubsystemSupport::new(sites, &lat).unwrap();
            let dec = schmidt(&psi, &support).unwrap();
            let total: f64 = dec.lambdas.iter().map(|l| l * l).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            let rebuilt = dec.reconstruct(&psi);
            let overlap = psi.amplitudes().dotc(&rebuilt).norm_sqr();
            prop_assert!(overlap >= 1.0 - 1e-10);
            for (i, a) in dec.xi_vectors.iter().enumerate() {
                for (j, b) in dec.xi_vectors.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((a.dotc(b).norm() - expected).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn identity_shift_leaves_commutators_unchanged(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = LatticeConfig::qubits(n).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let rho = DensityState::random(lat, 2, &mut rng).unwrap();
        let psi = PureState::random(lat, &mut rng).unwrap();
        let base = a.realize();
        let mut shifted = base.clone();
        for site in 1..=n {
            let c: f64 = StandardNormal.sample(&mut rng);
            let id = CMatrix::identity(2, 2) * C64::new(c, 0.0);
            shifted += embed_local(&id, site, &lat).unwrap();
        }
        let comm = |m: &CMatrix| m * rho.matrix() - rho.matrix() * m;
        prop_assert!((comm(&base) - comm(&shifted)).norm() < 1e-10);
        let var = |m: &CMatrix| {
            let v = psi.amplitudes();
            let mv = m * v;
            let mean = v.dotc(&mv).re;
            mv.norm_squared() - mean * mean
        };
        prop_assert!((var(&base) - var(&shifted)).abs() < 1e-10);
    }

    #[test]
    fn additive_operator_matches_site_sum(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = LatticeConfig::qubits(n).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let basis = local_basis(2);
        let mut oracle = CMatrix::zeros(lat.dim(), lat.dim());
        for site in 1..=n {
            for (alpha, b) in basis.iter().enumerate() {
                let c = a.site_coeffs(site)[alpha];
                oracle += embed_local(b, site, &lat).unwrap() * C64::new(c, 0.0);
            }
        }
        prop_assert!((a.realize() - &oracle).norm() < 1e-12);
        let v = DVector::from_fn(lat.dim(), |_, _| gaussian(&mut rng));
        prop_assert!((a.apply(&v) - &oracle * &v).norm() < 1e-10);
        prop_assert!(linalg::hermiticity_defect(&oracle) < 1e-14);
    }
}

#[test]
fn embedding_examples() {
    let two = LatticeConfig::qubits(2).unwrap();
    let sx1 = embed_local(&mqs_core::lattice::pauli_x(), 1, &two).unwrap();
    let out = &sx1 * PureState::basis(two, &[0, 0]).unwrap().amplitudes();
    let expected = PureState::basis(two, &[1, 0]).unwrap();
    assert!((out - expected.amplitudes()).norm() < 1e-15);

    let three = LatticeConfig::qubits(3).unwrap();
    let sz2 = embed_local(&mqs_core::lattice::pauli_z(), 2, &three).unwrap();
    let psi = PureState::basis(three, &[0, 1, 0]).unwrap();
    assert!((&sz2 * psi.amplitudes() + psi.amplitudes()).norm() < 1e-15);

    let mz = AdditiveOperator::magnetization_z(three);
    assert!((mz.apply(psi.amplitudes()) - psi.amplitudes()).norm() < 1e-15);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(LatticeConfig::qubits(0).is_err());
    assert!(LatticeConfig::new(3, 1).is_err());
    let lat = LatticeConfig::qubits(3).unwrap();
    assert!(SubsystemSupport::new(vec![4], &lat).is_err());
    assert!(SubsystemSupport::new(vec![], &lat).is_err());
    assert!(schatten_norm(&CMatrix::identity(2, 2), 0.5).is_err());
    assert!(AdditiveOperator::new(lat, vec![vec![2.0, 0.0, 0.0]; 3]).is_err());
    let full = SubsystemSupport::new(vec![1, 2, 3], &lat).unwrap();
    assert!(schmidt(&PureState::cat(lat).unwrap(), &full).is_err());
}
