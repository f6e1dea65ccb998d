//! Property tests for the linear-algebra, state and separability invariants.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snns_core::ansatz::{Ansatz, AnsatzKind, Basis, Params, QuditEncoding, Shape};
use snns_core::qmath::{
    bures_fidelity, hermitian_eig, min_pt_eigenvalue, partial_transpose, qre, trace_distance, ComplexMatrix,
    DensityMatrix,
};
use snns_core::separability::{build_mask, HiddenPartition, PartitionMode, PartitionSet};
use snns_core::states::{depolarise, werner};
use snns_core::C64;

fn random_hermitian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&g + &g.adjoint()).scale_real(0.5 * scale)
}

/// `G G^dagger / Tr` with `rank` columns in `G`.
fn random_density(dims: Vec<usize>, rank: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let cols: Vec<Vec<C64>> = (0..rank)
        .map(|_| (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();
    let m = ComplexMatrix::from_fn(n, |i, j| cols.iter().map(|c| c[i] * c[j].conj()).sum());
    DensityMatrix::normalised(m, dims).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..12, scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(n, scale / n as f64, &mut rng);
        let spec = hermitian_eig(&h).unwrap();
        let err = (&spec.reconstruct() - &h).frobenius_norm();
        prop_assert!(err <= 1e-9 * (1.0 + h.frobenius_norm()), "error {err:e}");
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fuchs_van_de_graaf_sandwich(seed in any::<u64>(), n in 2usize..7, r1 in 1usize..7, r2 in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(vec![n], r1.min(n), &mut rng);
        let b = random_density(vec![n], r2.min(n), &mut rng);
        let f = bures_fidelity(&a, &b).unwrap();
        let t = trace_distance(&a, &b).unwrap();
        prop_assert!(1.0 - f <= t + 1e-8, "1 - F = {} > T = {t}", 1.0 - f);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-8, "T = {t} > sqrt(1 - F^2)");
    }

    #[test]
    fn relative_entropy_is_non_negative(seed in any::<u64>(), n in 2usize..7, r in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(vec![n], r.min(n), &mut rng);
        let sigma = random_density(vec![n], n, &mut rng);
        let s = qre(&rho, &sigma).unwrap();
        prop_assert!(s >= -1e-10, "S = {s}");
        prop_assert!(qre(&sigma, &sigma).unwrap().abs() < 1e-9);
    }

    #[test]
    fn partial_transpose_keeps_trace_and_hermiticity(seed in any::<u64>(), d1 in 2usize..4, d2 in 2usize..4, sub in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(vec![d1, d2], d1 * d2, &mut rng);
        let pt = partial_transpose(&rho, sub).unwrap();
        prop_assert!((pt.trace() - rho.matrix().trace()).norm() < 1e-15);
        prop_assert_eq!(pt.hermitian_deviation(), 0.0);
    }

    #[test]
    fn depolarise_is_affine(seed in any::<u64>(), a in 0.0f64..1.0, p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = random_density(vec![2, 2], 2, &mut rng);
        let r2 = random_density(vec![2, 2], 3, &mut rng);
        let lhs = depolarise(&r1.mix(&r2, a).unwrap(), p).unwrap();
        let rhs = depolarise(&r1, p).unwrap().mix(&depolarise(&r2, p).unwrap(), a).unwrap();
        prop_assert!(lhs.matrix().max_abs_diff(rhs.matrix()) < 1e-12);
    }

    #[test]
    fn partition_text_round_trips(n in 1usize..7, cut in proptest::collection::vec(any::<bool>(), 6)) {
        // split 1..=n into consecutive blocks wherever `cut` says so
        let mut blocks: Vec<Vec<usize>> = vec![vec![0]];
        for q in 1..n {
            if cut[q - 1] {
                blocks.push(vec![q]);
            } else {
                blocks.last_mut().unwrap().push(q);
            }
        }
        let k = PartitionSet::new(blocks, n, PartitionMode::Disjoint).unwrap();
        let back = PartitionSet::parse(&k.to_string(), n, PartitionMode::Disjoint).unwrap();
        prop_assert_eq!(back, k);
    }

    #[test]
    fn masks_are_idempotent(seed in any::<u64>(), n_hidden in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = Basis::new(QuditEncoding::natural(2).unwrap(), 3);
        let k = match rng.random_range(0..3) {
            0 => PartitionSet::fully_separable(3),
            1 => PartitionSet::parse("1,2|3", 3, PartitionMode::Disjoint).unwrap(),
            _ => PartitionSet::parse("1,2|2,3", 3, PartitionMode::NonDisjoint).unwrap(),
        };
        let n_hidden = n_hidden.max(k.len() * 2);
        let h = HiddenPartition::proportional(&k, n_hidden).unwrap();
        let once = build_mask(&k, &h, &basis).unwrap();
        let shape = Shape { kind: AnsatzKind::PureComplex, n_hidden, n_mixing: 0 };
        let ansatz = Ansatz::new(basis.clone(), Params::random(shape, basis.n_visible(), 0.3, &mut rng)).unwrap();
        let masked = ansatz.with_mask(&once).unwrap();
        let twice = masked.clone().with_mask(&once).unwrap();
        prop_assert_eq!(build_mask(&k, &h, &basis).unwrap(), once);
        prop_assert_eq!(masked.flat(), twice.flat());
    }

    #[test]
    fn masked_product_state_has_vanishing_determinant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = Basis::new(QuditEncoding::natural(2).unwrap(), 2);
        let k = PartitionSet::fully_separable(2);
        let mask = snns_core::separability::default_mask(&k, &basis, 4).unwrap();
        let shape = Shape { kind: AnsatzKind::PureComplex, n_hidden: 4, n_mixing: 0 };
        let ansatz = Ansatz::new(basis.clone(), Params::random(shape, basis.n_visible(), 0.8, &mut rng))
            .unwrap()
            .with_mask(&mask)
            .unwrap();
        let psi = ansatz.state_vector().unwrap();
        prop_assert!((psi[0] * psi[3] - psi[1] * psi[2]).norm() <= 1e-12);
    }

    #[test]
    fn masked_ndm_is_ppt_across_refining_cuts(seed in any::<u64>(), three in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = if three { 3 } else { 2 };
        let basis = Basis::new(QuditEncoding::natural(2).unwrap(), n);
        let (k, cuts): (PartitionSet, Vec<usize>) = if three {
            (PartitionSet::parse("1,2|3", 3, PartitionMode::Disjoint).unwrap(), vec![2])
        } else {
            (PartitionSet::fully_separable(2), vec![0, 1])
        };
        let mask = snns_core::separability::default_mask(&k, &basis, 4).unwrap();
        let shape = Shape { kind: AnsatzKind::MixedNdm, n_hidden: 4, n_mixing: 3 };
        let ansatz = Ansatz::new(basis.clone(), Params::random(shape, basis.n_visible(), 0.7, &mut rng))
            .unwrap()
            .with_mask(&mask)
            .unwrap();
        let rho = ansatz.density_matrix().unwrap();
        for sub in cuts {
            let m = min_pt_eigenvalue(&rho, sub).unwrap();
            prop_assert!(m >= -1e-9, "subsystem {sub}: {m:e}");
        }
    }
}

#[test]
fn werner_is_ppt_exactly_for_non_negative_eta() {
    for d in [2, 3, 5] {
        for eta in [-1.0, -0.5, -0.05, 0.0, 0.5] {
            let m = min_pt_eigenvalue(&werner(eta, d).unwrap(), 1).unwrap();
            if eta >= 0.0 {
                assert!(m >= -1e-12, "d = {d}, eta = {eta}: {m:e}");
            } else {
                assert!(m < -1e-6, "d = {d}, eta = {eta}: {m:e}");
            }
        }
    }
}
