//! Finite-difference validation of the analytic gradients: the pairwise
//! loss is differenced through the whole network and compared against
//! back-propagation, layer by layer.

use ddsh::featnet::{backward, loss_gradient_a, pairwise_loss, FeatureNet};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const FD_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct LayerReport {
    pub layer: usize,
    pub max_weight_err: f64,
    pub max_bias_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub layers: Vec<LayerReport>,
    pub max_err: f64,
    pub passed: bool,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

struct Problem {
    x: Array1<f64>,
    codes: Array2<f64>,
    sims: Array1<f64>,
    weights: Array1<f64>,
    target: f64,
}

impl Problem {
    fn loss(&self, net: &FeatureNet) -> f64 {
        let (_, a) = net.forward(self.x.view()).expect("finite network");
        pairwise_loss(
            a.view(),
            &self.codes,
            self.sims.view(),
            self.weights.view(),
            self.target,
        )
    }

    fn random(sizes: &[usize], anchors: usize, rng: &mut ChaCha20Rng) -> (FeatureNet, Self) {
        let d = sizes[0];
        let c = *sizes.last().unwrap();
        let mut net = FeatureNet::glorot(sizes, rng).expect("valid sizes");
        // Shift biases off zero so every bias gradient is exercised.
        for l in 0..net.num_layers() {
            let len = net.layers()[l].bias.len();
            let bias = Array1::from_shape_fn(len, |_| rng.random_range(-0.1..0.1));
            net.layers_mut()[l].bias = bias;
        }
        let problem = Problem {
            x: Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0)),
            codes: Array2::from_shape_fn((anchors, c), |_| {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }),
            sims: Array1::from_shape_fn(anchors, |_| if rng.random::<bool>() { 1.0 } else { -1.0 }),
            weights: Array1::from_shape_fn(anchors, |_| rng.random_range(0.3..1.0)),
            target: c as f64,
        };
        (net, problem)
    }
}

/// Check one network/input draw. `corrupt` perturbs a single analytic
/// gradient entry so tests can confirm the check actually bites.
pub fn check_once(sizes: &[usize], anchors: usize, seed: u64, corrupt: bool) -> GradcheckReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut net, problem) = Problem::random(sizes, anchors, &mut rng);

    let (_, a) = net.forward(problem.x.view()).expect("finite network");
    let upstream = loss_gradient_a(
        a.view(),
        &problem.codes,
        problem.sims.view(),
        problem.weights.view(),
        problem.target,
    )
    .expect("non-empty anchors");
    let mut grads = backward(&net, problem.x.view(), upstream.view()).expect("dims match");
    if corrupt {
        grads.layers[0].0[[0, 0]] += 1e-2;
    }

    let mut layers = Vec::new();
    let mut max_err = 0.0f64;
    for l in 0..net.num_layers() {
        let (rows, cols) = (net.layers()[l].out_dim(), net.layers()[l].in_dim());
        let mut max_w = 0.0f64;
        for r in 0..rows {
            for c in 0..cols {
                let orig = net.layers()[l].weights[[r, c]];
                net.layers_mut()[l].weights[[r, c]] = orig + FD_STEP;
                let plus = problem.loss(&net);
                net.layers_mut()[l].weights[[r, c]] = orig - FD_STEP;
                let minus = problem.loss(&net);
                net.layers_mut()[l].weights[[r, c]] = orig;
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                max_w = max_w.max(rel_err(grads.layers[l].0[[r, c]], numeric));
            }
        }
        let mut max_b = 0.0f64;
        for r in 0..rows {
            let orig = net.layers()[l].bias[r];
            net.layers_mut()[l].bias[r] = orig + FD_STEP;
            let plus = problem.loss(&net);
            net.layers_mut()[l].bias[r] = orig - FD_STEP;
            let minus = problem.loss(&net);
            net.layers_mut()[l].bias[r] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            max_b = max_b.max(rel_err(grads.layers[l].1[r], numeric));
        }
        max_err = max_err.max(max_w).max(max_b);
        layers.push(LayerReport {
            layer: l,
            max_weight_err: max_w,
            max_bias_err: max_b,
        });
    }

    GradcheckReport {
        layers,
        max_err,
        passed: max_err < TOLERANCE,
    }
}

/// The full suite: several independent draws of the reference network plus
/// a small deep net, all of which must pass.
pub fn run_suite(seed: u64, trials: usize, corrupt: bool) -> Vec<GradcheckReport> {
    let mut reports = Vec::new();
    for t in 0..trials {
        reports.push(check_once(&[16, 64, 64, 8], 6, seed ^ (t as u64), corrupt));
    }
    reports.push(check_once(&[4, 5, 5, 3], 4, seed.wrapping_add(99), corrupt));
    reports
}
