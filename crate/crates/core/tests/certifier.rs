use mqs_core::certifier::{
    adversarial_search, check_contraction_lemma, check_mixed_tradeoff, check_pure_tradeoff, check_support_bound,
    compute_xi_terms, run_suite, AdversarialConfig, AdversarialTarget, Assessment, ChannelFamily, Suite, SuiteConfig,
    TradeoffInstance,
};
use mqs_core::channels::{make_cat_creator, make_spin_flip_even, random_channel, CatMode, KrausChannel};
use mqs_core::indices::double_commutator_trace_norm;
use mqs_core::lattice::{embed_local, pauli_x, C64};
use mqs_core::norms::trace_norm;
use mqs_core::{AdditiveOperator, CMatrix, DensityState, LatticeConfig, PureState, SubsystemSupport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn qubits(n: usize) -> LatticeConfig {
    LatticeConfig::qubits(n).unwrap()
}

fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

#[test]
fn support_bound_matches_dense_commutator() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..100 {
        let n = 1 + trial % 6;
        let lat = qubits(n);
        let sites: Vec<usize> = (1..=n).filter(|s| (s + trial) % 2 == 0).collect();
        let sites = if sites.is_empty() { vec![1] } else { sites };
        let support = SubsystemSupport::new(sites, &lat).unwrap();
        let ch = random_channel(lat, support.clone(), 2, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let r = check_support_bound(&a, &ch).unwrap();
        assert!(r.holds);
        for k in 0..ch.len() {
            let dense = mqs_core::norms::operator_norm(&comm(&a.realize(), &ch.embedded(k)));
            assert!((dense - r.norms[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn pure_tradeoff_matches_dense_sides() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..50 {
        let n = 1 + trial % 5;
        let lat = qubits(n);
        let support = SubsystemSupport::new(vec![1 + trial % n], &lat).unwrap();
        let ch = random_channel(lat, support.clone(), 1, &mut rng).unwrap();
        let psi = PureState::random(lat, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let report = check_pure_tradeoff(&psi, &ch, &a).unwrap();
        let report = report.applicable().unwrap();
        // Oracle: dense projectors and operator norms.
        let am = a.realize();
        let e = ch.embedded(0);
        let rho1 = psi.projector();
        let out = &e * &rho1 * e.adjoint();
        let g = out.trace().re;
        let rho2 = out * C64::new(1.0 / g, 0.0);
        let lhs = mqs_core::norms::operator_norm(&comm(&am, &rho2));
        let rhs = (4.0 + mqs_core::norms::operator_norm(&comm(&am, &rho1))) / g;
        assert!((report.lhs - lhs).abs() < 1e-9);
        assert!((report.rhs - rhs).abs() < 1e-9 * rhs.max(1.0));
        let sum: f64 = report.components.values().sum();
        assert!((report.rhs - sum / report.success_probability).abs() < 1e-10 * report.rhs);
        assert!(report.holds && report.chain_holds);
    }
}

#[test]
fn contraction_lemma_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lat = qubits(2);
    let s1 = SubsystemSupport::new(vec![1], &lat).unwrap();
    let u = mqs_core::channels::random_unitary_channel(lat, s1.clone(), &mut rng).unwrap();
    let x = embed_local(&pauli_x(), 1, &lat).unwrap();
    let r = check_contraction_lemma(&x, &u).unwrap();
    let r = r.applicable().unwrap();
    assert!((r.input_norm - r.output_norm).abs() < 1e-10);

    let p = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    let proj = KrausChannel::single(lat, s1, p).unwrap();
    let r = check_contraction_lemma(&x, &proj).unwrap();
    let r = r.applicable().unwrap();
    assert!((r.input_norm - 4.0).abs() < 1e-12);
    assert!(r.output_norm <= 2.0 + 1e-12);
    let not_hermitian = CMatrix::from_fn(4, 4, |i, j| C64::new(i as f64, j as f64));
    assert!(check_contraction_lemma(&not_hermitian, &proj).is_err());
}

#[test]
fn xi_terms_sum_to_the_direct_double_commutator() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..30 {
        let n = 1 + trial % 4;
        let lat = qubits(n);
        let sites: Vec<usize> = (1..=n).take(1 + trial % 2).collect();
        let support = SubsystemSupport::new(sites, &lat).unwrap();
        let ch = random_channel(lat, support.clone(), 1 + trial % 3, &mut rng).unwrap();
        let rho = DensityState::random(lat, 2, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let r = compute_xi_terms(&rho, &ch, &a).unwrap();
        let r = r.applicable().unwrap();
        assert!(r.identity_residual < 1e-10);
        assert!(r.all_hold());
        // Oracle: G ||[A,[A,rho_2]]||_1 from the channel output.
        let out = ch.apply_mixed(&rho).unwrap();
        let q2 = double_commutator_trace_norm(&out.output, &a).unwrap();
        assert!((out.success_probability * q2 - r.assembly_lhs).abs() < 1e-9);
        // Oracle: Xi_1 = sum_k E [A,[A,rho]] E^dagger directly.
        let am = a.realize();
        let x = comm(&am, &comm(&am, rho.matrix()));
        let mut xi1 = CMatrix::zeros(lat.dim(), lat.dim());
        for k in 0..ch.len() {
            let e = ch.embedded(k);
            xi1 += &e * &x * e.adjoint();
        }
        assert!((trace_norm(&xi1) - r.xi1).abs() < 1e-9);
    }
}

#[test]
fn mixed_tradeoff_examples() {
    for n in [4usize, 6] {
        let lat = qubits(n);
        let mz = AdditiveOperator::magnetization_z(lat);
        let mix = DensityState::classical_mixture(lat).unwrap();
        let flip = make_spin_flip_even(lat).unwrap();
        let r = check_mixed_tradeoff(&mix, &flip, &mz).unwrap();
        let r = r.applicable().unwrap();
        assert!(r.lhs < 1e-12);
        assert!((r.slack - r.rhs).abs() < 1e-12);

        let cat = PureState::cat(lat).unwrap().to_density().unwrap();
        let support = SubsystemSupport::leading(2, &lat).unwrap();
        let id = KrausChannel::identity(lat, support).unwrap();
        let r = check_mixed_tradeoff(&cat, &id, &mz).unwrap();
        let r = r.applicable().unwrap();
        let nn = (n * n) as f64;
        assert!((r.lhs - 4.0 * nn).abs() < 1e-9 * nn);
        let expected = 4.0 * nn + 16.0 * 2.0 * n as f64 + 16.0 + 48.0;
        assert!((r.rhs - expected).abs() < 1e-9 * expected);
    }
}

#[test]
fn pure_and_mixed_pipelines_agree_on_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..40 {
        let n = 1 + trial % 5;
        let lat = qubits(n);
        let support = SubsystemSupport::new(vec![1], &lat).unwrap();
        let ch = random_channel(lat, support, 1, &mut rng).unwrap();
        let psi = PureState::random(lat, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let pure = check_pure_tradeoff(&psi, &ch, &a).unwrap();
        let mixed = check_mixed_tradeoff(&psi.to_density().unwrap(), &ch, &a).unwrap();
        assert!(pure.applicable().unwrap().slack >= -1e-9);
        assert!(mixed.applicable().unwrap().slack >= -1e-9);
    }
}

#[test]
fn cat_creation_needs_a_macroscopic_support() {
    // With G = 1 the created double-commutator norm 4|S|^2 grows as N^2 only
    // because |S| = N/2 grows with N.
    for n in [4usize, 6, 8] {
        let lat = qubits(n);
        let half = SubsystemSupport::leading(n / 2, &lat).unwrap();
        let psi = PureState::all_zero(lat).unwrap();
        let ch = make_cat_creator(&psi, &half, CatMode::Completed).unwrap();
        let rho = psi.to_density().unwrap();
        let uniform_on_s = AdditiveOperator::new(
            lat,
            (1..=n).map(|s| if s <= n / 2 { vec![0.0, 0.0, 1.0] } else { vec![0.0; 3] }).collect(),
        )
        .unwrap();
        let r = check_mixed_tradeoff(&rho, &ch, &uniform_on_s).unwrap();
        let r = r.applicable().unwrap();
        let s = (n / 2) as f64;
        assert!((r.success_probability - 1.0).abs() < 1e-10);
        assert!((r.lhs - 4.0 * s * s).abs() < 1e-9);
        assert!(r.holds);
        assert!((r.components["16|S|N"] - 16.0 * s * n as f64).abs() < 1e-12);
    }
}

#[test]
fn suites_are_thread_count_independent() {
    let cfg = SuiteConfig::new(64, 77, 5);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    for suite in [Suite::Pure, Suite::Mixed, Suite::Lemma] {
        let a = one.install(|| run_suite(suite, &cfg).unwrap());
        let b = three.install(|| run_suite(suite, &cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.passed());
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }
}

#[test]
fn adversarial_search_results() {
    let pure = adversarial_search(&AdversarialConfig {
        target: AdversarialTarget::Pure,
        family: ChannelFamily::SiteProjector,
        max_sites: 4,
        trials: 100,
        climb_steps: 50,
        seed: 1,
    })
    .unwrap();
    assert!(pure.max_ratio <= 1.0 + 1e-9);
    assert!(pure.max_ratio >= pure.max_random_ratio);
    let instance = pure.instance.unwrap();
    let text = serde_json::to_string(&instance).unwrap();
    let back: TradeoffInstance = serde_json::from_str(&text).unwrap();
    assert_eq!(instance, back);
    let ch = KrausChannel::from_document(&instance.channel).unwrap();
    assert_eq!(ch.lattice().n_sites(), instance.n_sites);

    let mixed = adversarial_search(&AdversarialConfig {
        target: AdversarialTarget::Mixed,
        family: ChannelFamily::Random,
        max_sites: 3,
        trials: 20,
        climb_steps: 10,
        seed: 2,
    })
    .unwrap();
    assert!(mixed.max_ratio < 1.0);
    assert!(!mixed.violation);
}

#[test]
fn null_and_invalid_channels_are_not_violations() {
    let lat = qubits(2);
    let s1 = SubsystemSupport::new(vec![1], &lat).unwrap();
    let big = KrausChannel::single(lat, s1, CMatrix::identity(2, 2) * C64::new(1.5, 0.0)).unwrap();
    let rho = DensityState::maximally_mixed(lat).unwrap();
    let mz = AdditiveOperator::magnetization_z(lat);
    assert!(matches!(check_mixed_tradeoff(&rho, &big, &mz).unwrap(), Assessment::Rejected { .. }));
    assert!(matches!(compute_xi_terms(&rho, &big, &mz).unwrap(), Assessment::Rejected { .. }));
}
