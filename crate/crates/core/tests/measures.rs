//! Entanglement measures against brute-force oracles and closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snns_core::learning::{LearnConfig, Optimizer, Target};
use snns_core::measures::{capacity_bound, distance_measure, gme, ree_upper, ree_variants, ree_variants_sweep, Measure, MeasureConfig, Metric};
use snns_core::qmath::{trace_distance, ComplexMatrix, DensityMatrix};
use snns_core::separability::PartitionSet;
use snns_core::states::{bell_state, depolarise, ghz, ghz_vector, w_state, w_vector, werner, werner_ree, ChannelKind, ChannelSpec};
use snns_core::C64;

fn config(restarts: usize) -> MeasureConfig {
    MeasureConfig {
        learn: LearnConfig {
            optimizer: Optimizer::Adam { beta1: 0.9, beta2: 0.999 },
            learning_rate: 0.01,
            restarts,
            stop_at_threshold: false,
            ..Default::default()
        },
        learner: None,
    }
}

fn qubit(theta: f64, phi: f64) -> [C64; 2] {
    [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
}

fn product(qubits: &[[C64; 2]]) -> Vec<C64> {
    qubits.iter().fold(vec![C64::new(1.0, 0.0)], |acc, q| acc.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect())
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

/// Largest `|<psi|a b c>|` over three-qubit product states: a Bloch-sphere
/// grid followed by alternating single-qubit optimisation.
fn product_overlap_oracle(psi: &[C64]) -> f64 {
    let grid: Vec<[C64; 2]> = (0..=6)
        .flat_map(|i| (0..8).map(move |j| qubit(std::f64::consts::PI * i as f64 / 6.0, std::f64::consts::PI * j as f64 / 4.0)))
        .collect();
    let mut best = (0.0, [grid[0]; 3]);
    for a in &grid {
        for b in &grid {
            for c in &grid {
                let v = overlap(psi, &product(&[*a, *b, *c]));
                if v > best.0 {
                    best = (v, [*a, *b, *c]);
                }
            }
        }
    }
    let mut qs = best.1;
    for _ in 0..200 {
        for k in 0..3 {
            // contract psi with the other two qubits; the optimum for qubit k is the normalised result
            let mut m = [C64::new(0.0, 0.0); 2];
            for (idx, amp) in psi.iter().enumerate() {
                let bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
                let mut w = *amp;
                for (q, &bit) in bits.iter().enumerate() {
                    if q != k {
                        w *= qs[q][bit].conj();
                    }
                }
                m[bits[k]] += w;
            }
            let n = (m[0].norm_sqr() + m[1].norm_sqr()).sqrt();
            qs[k] = [m[0] / n, m[1] / n];
        }
    }
    overlap(psi, &product(&qs))
}

fn product_projector(angles: &[f64; 4]) -> ComplexMatrix {
    ComplexMatrix::outer(&product(&[qubit(angles[0], angles[1]), qubit(angles[2], angles[3])]))
}

fn mixture(angles: &[[f64; 4]], weights: &[f64]) -> DensityMatrix {
    let total: f64 = weights.iter().sum();
    let m = angles
        .iter()
        .zip(weights)
        .fold(ComplexMatrix::zeros(4), |acc, (a, w)| &acc + &product_projector(a).scale_real(w / total));
    DensityMatrix::normalised(m, vec![2, 2]).unwrap()
}

/// Smallest trace distance from `rho` to two-qubit separable mixtures found by
/// 500 random four-term product ensembles plus hill-climbing on the best one.
fn separable_distance_oracle(rho: &DensityMatrix) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random_angles = |rng: &mut ChaCha8Rng| -> [f64; 4] { std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU)) };
    let mut best: Option<(f64, Vec<[f64; 4]>, Vec<f64>)> = None;
    for _ in 0..500 {
        let angles: Vec<[f64; 4]> = (0..4).map(|_| random_angles(&mut rng)).collect();
        let weights: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let d = trace_distance(rho, &mixture(&angles, &weights)).unwrap();
        if best.as_ref().is_none_or(|b| d < b.0) {
            best = Some((d, angles, weights));
        }
    }
    let (mut d, mut angles, mut weights) = best.unwrap();
    for step in 0..4000 {
        let scale = 0.3 * (1.0 - step as f64 / 4000.0) + 1e-3;
        let (mut a2, mut w2) = (angles.clone(), weights.clone());
        let k = rng.random_range(0..4);
        if rng.random_bool(0.5) {
            a2[k].iter_mut().for_each(|x| *x += rng.random_range(-scale..scale));
        } else {
            w2[k] = (w2[k] + rng.random_range(-scale..scale)).max(0.0);
        }
        if w2.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let d2 = trace_distance(rho, &mixture(&a2, &w2)).unwrap();
        if d2 < d {
            (d, angles, weights) = (d2, a2, w2);
        }
    }
    d
}

#[test]
fn gme_of_ghz_matches_product_oracle() {
    let oracle = product_overlap_oracle(&ghz_vector(2, 3));
    assert!((oracle - 1.0 / 2f64.sqrt()).abs() < 1e-3, "oracle {oracle}");
    let target = Target::pure(&ghz_vector(2, 3), vec![2, 2, 2]).unwrap();
    let e = gme(&target, &PartitionSet::fully_separable(3), &config(3)).unwrap();
    assert_eq!(e.measure, Measure::Gme);
    assert!((e.value - oracle).abs() < 1e-3, "GME {} vs oracle {oracle}", e.value);
}

#[test]
fn gme_of_w_matches_product_oracle() {
    let oracle = product_overlap_oracle(&w_vector());
    assert!((oracle - 2.0 / 3.0).abs() < 1e-3, "oracle {oracle}");
    let target = Target::pure(&w_vector(), vec![2, 2, 2]).unwrap();
    let e = gme(&target, &PartitionSet::fully_separable(3), &config(3)).unwrap();
    assert!((e.value - oracle).abs() < 1e-3, "GME {} vs oracle {oracle}", e.value);
}

#[test]
fn gme_extremes() {
    let psi = product(&[qubit(0.4, 1.0), qubit(2.0, -0.3), qubit(1.1, 2.5)]);
    let target = Target::pure(&psi, vec![2, 2, 2]).unwrap();
    let e = gme(&target, &PartitionSet::fully_separable(3), &config(2)).unwrap();
    assert!(e.value >= 1.0 - 1e-6, "{}", e.value);
    let w = Target::pure(&w_vector(), vec![2, 2, 2]).unwrap();
    let free = gme(&w, &PartitionSet::single_block(3), &config(2)).unwrap();
    assert!(free.value >= 1.0 - 1e-4, "{}", free.value);
    assert!(gme(&Target::from_density(werner(-0.5, 2).unwrap()).unwrap(), &PartitionSet::fully_separable(2), &config(1)).is_err());
}

#[test]
fn bell_trace_distance_to_separable_set() {
    let bell = bell_state(2);
    let oracle = separable_distance_oracle(&bell);
    assert!((oracle - 0.5).abs() < 2e-2, "oracle {oracle}");
    let e = distance_measure(&Target::from_density(bell).unwrap(), &PartitionSet::fully_separable(2), Metric::Trace, &config(3)).unwrap();
    assert!((e.value - 0.5).abs() < 2e-2, "{}", e.value);
    assert!(e.value >= oracle - 2e-2);
}

#[test]
fn separable_targets_have_vanishing_measures() {
    let target = Target::from_density(werner(0.3, 2).unwrap()).unwrap();
    let k = PartitionSet::fully_separable(2);
    let td = distance_measure(&target, &k, Metric::Trace, &config(2)).unwrap();
    assert!(td.value <= 1e-4, "trace distance {}", td.value);
    let bures = distance_measure(&target, &k, Metric::Bures, &config(2)).unwrap();
    assert!(bures.value <= 1e-4, "Bures {}", bures.value);
    let ree = ree_upper(&target, &k, &config(2)).unwrap();
    assert!(ree.value <= 1e-4, "REE {}", ree.value);
}

#[test]
fn werner_ree_is_an_upper_bound_that_converges() {
    for eta in [-1.0, -0.5] {
        let target = Target::from_density(werner(eta, 2).unwrap()).unwrap();
        let e = ree_upper(&target, &PartitionSet::fully_separable(2), &config(3)).unwrap();
        let exact = werner_ree(eta).unwrap();
        assert!(e.value >= exact - 1e-9, "eta {eta}: {} below {exact}", e.value);
        assert!(e.value - exact <= 1e-3, "eta {eta}: {} vs {exact}", e.value);
    }
}

#[test]
fn depolarising_capacity_endpoints() {
    let cfg = config(3);
    let noiseless = capacity_bound(&ChannelSpec::new(ChannelKind::Depolarising, 2, 0.0).unwrap(), &cfg).unwrap();
    assert!((noiseless.value - 1.0).abs() <= 1e-3, "{}", noiseless.value);
    let useless = capacity_bound(&ChannelSpec::new(ChannelKind::Depolarising, 2, 1.0).unwrap(), &cfg).unwrap();
    assert!(useless.value <= 1e-4, "{}", useless.value);
}

#[test]
fn ree_variant_examples() {
    let cfg = config(2);
    let mixed = Target::from_density(depolarise(&w_state(), 1.0).unwrap()).unwrap();
    let v = ree_variants(&mixed, &cfg).unwrap();
    for e in [&v.full, &v.gen, &v.w] {
        assert!(e.value <= 1e-4, "{} {}", e.partition, e.value);
    }

    let g = ree_variants(&Target::from_density(ghz(2, 3)).unwrap(), &cfg).unwrap();
    assert!(g.w.value <= 1e-3, "GHZ-type REE of GHZ: {}", g.w.value);

    let w = ree_variants(&Target::from_density(w_state()).unwrap(), &cfg).unwrap();
    assert!(w.w.value > 0.05, "GHZ-type REE of W: {}", w.w.value);
    assert!(w.full.value >= w.gen.value && w.gen.value >= w.w.value);
}

#[test]
fn ree_variant_sweep_is_ordered_and_non_increasing() {
    let mut cfg = config(1);
    cfg.learn.max_iters = 400;
    cfg.learn.plateau_window = 400;
    let ps = [0.0, 0.3, 0.6, 0.9];
    let rows = ree_variants_sweep(&ghz(2, 3), &ps, &cfg, None).unwrap();
    assert_eq!(rows.len(), ps.len());
    for (i, v) in rows.iter().enumerate() {
        assert!(v.full.value >= v.gen.value && v.gen.value >= v.w.value, "p = {}", ps[i]);
        for e in [&v.full, &v.gen, &v.w] {
            assert!(e.value.is_finite() && e.value >= 0.0);
            if let Some(from) = e.carried_from {
                assert!(from < ps[i] && ps.contains(&from));
            }
        }
    }
    for w in rows.windows(2) {
        assert!(w[1].full.value <= w[0].full.value + 1e-12);
        assert!(w[1].gen.value <= w[0].gen.value + 1e-12);
        assert!(w[1].w.value <= w[0].w.value + 1e-12);
    }
    assert!(ree_variants_sweep(&ghz(2, 3), &[0.5, 0.1], &cfg, None).is_err());
}
