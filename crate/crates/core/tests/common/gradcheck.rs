//! Central finite differences against the analytic backward pass on small
//! random instances.

use ddos_gcn::gcn::{weighted_bce_loss, ClassWeights, GcnModel, GcnParams, LossConfig};
use ddos_gcn::topology::{normalize_adjacency, EdgeSet, NormalizedAdjacency};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub model: GcnModel<f64>,
    pub adj: NormalizedAdjacency<f64>,
    pub x: Array2<f64>,
    pub mask: Array2<f64>,
    pub labels: Vec<bool>,
    pub loss_cfg: LossConfig<f64>,
}

pub fn instance(seed: u64, n: usize, f_in: usize, hidden: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = GcnModel::<f64>::init(f_in, hidden, 0.4, &mut rng).unwrap();
    model.params.b0.mapv_inplace(|_| rng.random_range(-0.3..0.3));
    model.params.b1 = rng.random_range(-0.3..0.3);
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    pairs.push((0, n - 1));
    pairs.push((1, n - 2));
    let adj = normalize_adjacency(&EdgeSet::undirected(pairs).unwrap(), n).unwrap();
    let x = Array2::from_shape_simple_fn((n, f_in), || rng.random_range(-1.5..1.5));
    let dropout = model.sample_dropout_mask(n, &mut rng);
    let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
    // last node plays a router: outside the loss
    let node_mask: Vec<bool> = (0..n).map(|i| i + 1 < n).collect();
    let pos = (0..n).filter(|&i| node_mask[i] && labels[i]).count();
    let loss_cfg = LossConfig {
        class_weights: ClassWeights::from_counts(n - 1 - pos, pos).unwrap(),
        mask: node_mask,
    };
    Instance {
        model,
        adj,
        x,
        mask: dropout,
        labels,
        loss_cfg,
    }
}

impl Instance {
    pub fn loss_with(&self, params: &GcnParams<f64>) -> f64 {
        let model = GcnModel {
            params: params.clone(),
            dropout_rate: self.model.dropout_rate,
        };
        let cache = model.forward_with_mask(&self.adj, self.x.view(), Some(self.mask.clone())).unwrap();
        weighted_bce_loss(&cache.scores, &self.labels, &self.loss_cfg).unwrap().0
    }

    pub fn min_preactivation(&self) -> f64 {
        let cache = self.model.forward_with_mask(&self.adj, self.x.view(), Some(self.mask.clone())).unwrap();
        cache.hidden_pre.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Largest relative deviation between analytic and central-difference
/// gradients over every parameter.
pub fn worst_gradient_error(inst: &Instance, step: f64) -> f64 {
    let cache = inst.model.forward_with_mask(&inst.adj, inst.x.view(), Some(inst.mask.clone())).unwrap();
    let (_, d_scores) = weighted_bce_loss(&cache.scores, &inst.labels, &inst.loss_cfg).unwrap();
    let analytic = inst.model.backward(&cache, &d_scores).unwrap();
    let mut worst = 0.0f64;
    let blocks = inst.model.params.blocks().map(|b| b.len());
    for (b, &len) in blocks.iter().enumerate() {
        for j in 0..len {
            let mut plus = inst.model.params.clone();
            plus.blocks_mut()[b][j] += step;
            let mut minus = inst.model.params.clone();
            minus.blocks_mut()[b][j] -= step;
            let numeric = (inst.loss_with(&plus) - inst.loss_with(&minus)) / (2.0 * step);
            let a = analytic.blocks()[b][j];
            // the floor keeps vanishing gradients from dividing by ~0
            let scale = a.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    worst
}

pub fn kink_free_instance(first_seed: u64, n: usize, f_in: usize, hidden: usize) -> Instance {
    (first_seed..)
        .map(|s| instance(s, n, f_in, hidden))
        .find(|inst| inst.min_preactivation() > 1e-3)
        .unwrap()
}
