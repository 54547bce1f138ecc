mod common;

use common::gradcheck::{instance, kink_free_instance, worst_gradient_error};
use ddos_gcn::gcn::{weighted_bce_loss, ClassWeights, GcnModel, LossConfig};
use ddos_gcn::topology::{normalize_adjacency, EdgeSet, NormalizedAdjacency};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in [1, 100, 200] {
        let inst = kink_free_instance(seed, 5, 3, 8);
        let err = worst_gradient_error(&inst, 1e-5);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn dropout_preserves_expected_activation() {
    let inst = instance(7, 5, 3, 8);
    let eval = inst.model.forward_with_mask(&inst.adj, inst.x.view(), None).unwrap().hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sum = Array2::<f64>::zeros(eval.raw_dim());
    let mut kept = 0.0;
    let draws = 10_000;
    for _ in 0..draws {
        let mask = inst.model.sample_dropout_mask(5, &mut rng);
        kept += mask.iter().filter(|&&m| m > 0.0).count() as f64;
        sum += &inst.model.forward_with_mask(&inst.adj, inst.x.view(), Some(mask)).unwrap().hidden;
    }
    let keep_rate = kept / (draws as f64 * 40.0);
    assert!((keep_rate - 0.6).abs() < 0.006, "keep rate {keep_rate}");
    let mean_total = sum.sum() / draws as f64;
    let eval_total = eval.sum();
    assert!(((mean_total - eval_total) / eval_total).abs() < 0.01, "{mean_total} vs {eval_total}");
}

#[test]
fn identity_operator_keeps_nodes_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = GcnModel::<f64>::init(5, 16, 0.4, &mut rng).unwrap();
    let adj = NormalizedAdjacency::<f64>::identity(6);
    let x = Array2::from_shape_simple_fn((6, 5), || rng.random_range(-1.0..1.0));
    let before = model.predict(&adj, x.view()).unwrap();
    let mut changed = x.clone();
    changed.row_mut(2).mapv_inplace(|v| v + 0.7);
    let after = model.predict(&adj, changed.view()).unwrap();
    for i in 0..6 {
        if i == 2 {
            assert_ne!(before[i], after[i]);
        } else {
            assert_eq!(before[i], after[i]);
        }
    }
}

#[test]
fn relabelling_nodes_permutes_scores() {
    let inst = instance(21, 7, 5, 12);
    let perm = [3usize, 6, 0, 5, 1, 4, 2];
    let n = perm.len();
    // node i moves to position perm[i]
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    pairs.push((0, n - 1));
    pairs.push((1, n - 2));
    let moved = EdgeSet::undirected(pairs.iter().map(|&(s, t)| (perm[s], perm[t]))).unwrap();
    let adj = normalize_adjacency::<f64>(&moved, n).unwrap();
    let mut x = Array2::zeros(inst.x.raw_dim());
    let mut drop = Array2::zeros(inst.mask.raw_dim());
    let mut labels = vec![false; n];
    let mut node_mask = vec![false; n];
    for i in 0..n {
        x.row_mut(perm[i]).assign(&inst.x.row(i));
        drop.row_mut(perm[i]).assign(&inst.mask.row(i));
        labels[perm[i]] = inst.labels[i];
        node_mask[perm[i]] = inst.loss_cfg.mask[i];
    }
    let base = inst.model.forward_with_mask(&inst.adj, inst.x.view(), Some(inst.mask.clone())).unwrap();
    let permuted = inst.model.forward_with_mask(&adj, x.view(), Some(drop)).unwrap();
    for i in 0..n {
        assert!((base.scores[i] - permuted.scores[perm[i]]).abs() < 1e-12);
    }
    let cfg = LossConfig {
        class_weights: inst.loss_cfg.class_weights,
        mask: node_mask,
    };
    let l0 = weighted_bce_loss(&base.scores, &inst.labels, &inst.loss_cfg).unwrap().0;
    let l1 = weighted_bce_loss(&permuted.scores, &labels, &cfg).unwrap().0;
    assert!((l0 - l1).abs() < 1e-12);
}

#[test]
fn loss_of_an_uninformed_model_is_log_two() {
    let scores = Array1::from_elem(10, 0.5);
    let labels: Vec<bool> = (0..10).map(|i| i < 3).collect();
    let cfg = LossConfig {
        class_weights: ClassWeights::from_counts(7, 3).unwrap(),
        mask: vec![true; 10],
    };
    let (loss, _) = weighted_bce_loss(&scores, &labels, &cfg).unwrap();
    assert!((loss - 2f64.ln()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_stay_inside_the_unit_interval(seed in any::<u64>(), scale in 0.1..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = GcnModel::<f64>::init(5, 8, 0.4, &mut rng).unwrap();
        let adj = normalize_adjacency::<f64>(&EdgeSet::undirected([(0, 1), (1, 2), (2, 3)]).unwrap(), 4).unwrap();
        let x = Array2::from_shape_simple_fn((4, 5), || rng.random_range(-scale..scale));
        let s = model.predict(&adj, x.view()).unwrap();
        prop_assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn clamped_loss_is_finite(
        raw in prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], 1..20),
        flips in prop::collection::vec(any::<bool>(), 20),
    ) {
        let labels: Vec<bool> = flips[..raw.len()].to_vec();
        let cfg = LossConfig {
            class_weights: ClassWeights::<f64>::uniform(),
            mask: vec![true; raw.len()],
        };
        let (loss, grad) = weighted_bce_loss(&Array1::from(raw), &labels, &cfg).unwrap();
        prop_assert!(loss.is_finite());
        prop_assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gradients_hold_on_random_instances(seed in 0u64..10_000) {
        let inst = kink_free_instance(seed * 1000, 5, 3, 8);
        let err = worst_gradient_error(&inst, 1e-5);
        prop_assert!(err < 1e-4, "relative error {}", err);
    }
}
