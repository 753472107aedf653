//! Discrete coding: per-bit binary quadratic programs over the sampled
//! pairwise supervision.
//!
//! Bits of the sampled codes are re-solved sequentially. For bit k the
//! residual of bits 1..k-1 enters the quadratic form, so each solve
//! minimizes the loss truncated to the bit prefix; sweeping k = 1..c
//! rebuilds the whole sampled block against the current complement codes.

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::supervision::{SampleSplit, SimilarityOracle};

/// Largest instance the exhaustive solver accepts.
pub const EXACT_ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum CoderError {
    #[error("bit index {bit} out of range 1..={c}")]
    BitOutOfRange { bit: usize, c: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("instance size {size} above enumeration bound {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("code entries must be -1 or +1")]
    InvalidCode,
}

/// n x c matrix over {-1,+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    entries: Array2<i8>,
}

impl CodeMatrix {
    pub fn new(entries: Array2<i8>) -> Result<Self, CoderError> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(CoderError::DimensionMismatch(
                "code matrix must be non-empty".into(),
            ));
        }
        if entries.iter().any(|&v| v != 1 && v != -1) {
            return Err(CoderError::InvalidCode);
        }
        Ok(Self { entries })
    }

    /// Uniform random codes, one draw per entry.
    pub fn random<R: Rng>(n: usize, c: usize, rng: &mut R) -> Self {
        let entries =
            Array2::from_shape_fn((n, c), |_| if rng.random::<bool>() { 1i8 } else { -1i8 });
        Self { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn c(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<i8> {
        &self.entries
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, i8> {
        self.entries.row(i)
    }

    pub fn get(&self, i: usize, k: usize) -> i8 {
        self.entries[[i, k]]
    }

    pub fn set(&mut self, i: usize, k: usize, v: i8) {
        assert!(v == 1 || v == -1, "code entries must be -1 or +1");
        self.entries[[i, k]] = v;
    }

    /// Replace a whole row; values must be in {-1,+1}.
    pub fn set_row(&mut self, i: usize, values: &[i8]) {
        assert_eq!(values.len(), self.c());
        assert!(values.iter().all(|&v| v == 1 || v == -1));
        for (k, &v) in values.iter().enumerate() {
            self.entries[[i, k]] = v;
        }
    }

    /// Inner product of rows i and j over the first `prefix` bits.
    pub fn dot_prefix(&self, i: usize, j: usize, prefix: usize) -> i64 {
        let a = self.entries.slice(s![i, ..prefix]);
        let b = self.entries.slice(s![j, ..prefix]);
        a.iter()
            .zip(b.iter())
            .map(|(&x, &y)| x as i64 * y as i64)
            .sum()
    }

    pub fn dot(&self, i: usize, j: usize) -> i64 {
        self.dot_prefix(i, j, self.c())
    }
}

/// Quadratic form for one bit of the sampled codes: minimize
/// x' Q x + x' p over x in {-1,+1}^m. Q is symmetric with zero diagonal.
#[derive(Debug, Clone)]
pub struct BqpInstance {
    /// 1-based bit index this instance solves.
    pub bit: usize,
    pub q: Array2<f64>,
    pub p: Array1<f64>,
}

impl BqpInstance {
    pub fn size(&self) -> usize {
        self.p.len()
    }
}

/// Quadratic form for the kth bit (`bit` is 1-based). `target` is the
/// inner-product scale multiplying the similarity sign.
pub fn build_bqp(
    bit: usize,
    codes: &CodeMatrix,
    sim: &SimilarityOracle,
    split: &SampleSplit,
    target: f64,
) -> Result<BqpInstance, CoderError> {
    let c = codes.c();
    if bit == 0 || bit > c {
        return Err(CoderError::BitOutOfRange { bit, c });
    }
    check_dims(codes, sim, split)?;
    let k = bit - 1;
    let omega = split.omega();
    let m = omega.len();

    let mut q = Array2::<f64>::zeros((m, m));
    for a in 0..m {
        for b in (a + 1)..m {
            let (i, j) = (omega[a], omega[b]);
            let residual = codes.dot_prefix(i, j, k);
            let (s, w) = sim.pair(i, j);
            let val = -2.0 * w * (target * s - residual as f64);
            q[[a, b]] = val;
            q[[b, a]] = val;
        }
    }

    let mut p = Array1::<f64>::zeros(m);
    for a in 0..m {
        let i = omega[a];
        let mut acc = 0.0;
        for &l in split.gamma() {
            let residual = codes.dot_prefix(l, i, k);
            let (s, w) = sim.pair(l, i);
            acc += -2.0 * w * codes.get(l, k) as f64 * (target * s - residual as f64);
        }
        p[a] = acc;
    }

    Ok(BqpInstance { bit, q, p })
}

/// x' Q x + x' p.
pub fn bqp_objective(inst: &BqpInstance, x: &[i8]) -> f64 {
    let m = inst.size();
    assert_eq!(x.len(), m);
    let mut total = 0.0;
    for i in 0..m {
        let xi = x[i] as f64;
        let row: f64 = x
            .iter()
            .enumerate()
            .map(|(j, &xj)| inst.q[[i, j]] * xj as f64)
            .sum();
        total += xi * (row + inst.p[i]);
    }
    total
}

fn fields(inst: &BqpInstance, x: &[i8]) -> Vec<f64> {
    let m = inst.size();
    (0..m)
        .map(|i| (0..m).map(|l| inst.q[[i, l]] * x[l] as f64).sum())
        .collect()
}

/// +1 sorts before -1, positions compared left to right.
fn lex_less(a: &[i8], b: &[i8]) -> bool {
    for (u, v) in a.iter().zip(b.iter()) {
        if u != v {
            return u > v;
        }
    }
    false
}

/// Global minimizer by Gray-code enumeration; ties resolved toward the
/// lexicographically smallest vector with +1 ordered before -1.
pub fn solve_bqp_exact(inst: &BqpInstance) -> Result<Vec<i8>, CoderError> {
    let m = inst.size();
    if m > EXACT_ENUMERATION_LIMIT {
        return Err(CoderError::TooLarge {
            size: m,
            limit: EXACT_ENUMERATION_LIMIT,
        });
    }
    let mut x = vec![1i8; m];
    let mut h = fields(inst, &x);
    let mut f: f64 = x
        .iter()
        .zip(h.iter().zip(inst.p.iter()))
        .map(|(&xi, (&hi, &pi))| xi as f64 * (hi + pi))
        .sum();
    let mut best = x.clone();
    let mut best_f = f;

    for t in 1u64..(1u64 << m) {
        let i = t.trailing_zeros() as usize;
        let xi = x[i] as f64;
        f += -4.0 * xi * h[i] - 2.0 * inst.p[i] * xi;
        for (j, hj) in h.iter_mut().enumerate() {
            if j != i {
                *hj -= 2.0 * inst.q[[j, i]] * xi;
            }
        }
        x[i] = -x[i];
        if f < best_f || (f == best_f && lex_less(&x, &best)) {
            best_f = f;
            best.copy_from_slice(&x);
        }
    }
    Ok(best)
}

/// Greedy best-improvement single-flip descent. Flips strictly improving
/// moves only, so the objective sequence is strictly decreasing. Returns
/// the final objective; `trace` (when given) collects the sequence.
fn descend(inst: &BqpInstance, x: &mut [i8], mut trace: Option<&mut Vec<f64>>) -> f64 {
    let m = inst.size();
    let mut h = fields(inst, x);
    let mut f: f64 = x
        .iter()
        .zip(h.iter().zip(inst.p.iter()))
        .map(|(&xi, (&hi, &pi))| xi as f64 * (hi + pi))
        .sum();
    if let Some(t) = trace.as_deref_mut() {
        t.push(f);
    }
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            let xi = x[i] as f64;
            let delta = -4.0 * xi * h[i] - 2.0 * inst.p[i] * xi;
            if delta < 0.0 && best.is_none_or(|(_, d)| delta < d) {
                best = Some((i, delta));
            }
        }
        let Some((i, delta)) = best else { break };
        let xi = x[i] as f64;
        for (j, hj) in h.iter_mut().enumerate() {
            if j != i {
                *hj -= 2.0 * inst.q[[j, i]] * xi;
            }
        }
        x[i] = -x[i];
        f += delta;
        if let Some(t) = trace.as_deref_mut() {
            t.push(f);
        }
    }
    f
}

/// Local search: descend from `init` first, then from `restarts - 1`
/// random starts; the best result (earliest restart on ties) is returned,
/// so the output never scores worse than `init`.
pub fn solve_bqp_local(
    inst: &BqpInstance,
    init: &[i8],
    restarts: usize,
    seed: u64,
) -> Result<Vec<i8>, CoderError> {
    let m = inst.size();
    if init.len() != m {
        return Err(CoderError::DimensionMismatch(format!(
            "init length {} != instance size {m}",
            init.len()
        )));
    }
    if init.iter().any(|&v| v != 1 && v != -1) {
        return Err(CoderError::InvalidCode);
    }
    let mut best = init.to_vec();
    let mut best_f = descend(inst, &mut best, None);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 1..restarts.max(1) {
        let mut x: Vec<i8> = (0..m)
            .map(|_| if rng.random::<bool>() { 1i8 } else { -1i8 })
            .collect();
        let f = descend(inst, &mut x, None);
        if f < best_f {
            best_f = f;
            best = x;
        }
    }
    Ok(best)
}

/// Knobs for the per-bit sweep.
#[derive(Debug, Clone)]
pub struct CoderOptions {
    /// Inner-product target scale multiplying the similarity sign.
    pub target: f64,
    /// Use exhaustive enumeration when the sampled set is at most this big.
    pub exact_limit: usize,
    /// Descents per bit in local-search mode (first one is warm-started).
    pub restarts: usize,
    pub seed: u64,
}

impl CoderOptions {
    pub fn new(target: f64) -> Self {
        Self {
            target,
            exact_limit: 16,
            restarts: 20,
            seed: 0,
        }
    }
}

/// One full discrete-coding sweep: bits are rebuilt sequentially, each by
/// its quadratic form against the current complement codes. In exact mode
/// each bit solve cannot increase the prefix-truncated sampled loss; in
/// local mode the warm start guarantees the same.
pub fn optimize_codes(
    codes: &mut CodeMatrix,
    sim: &SimilarityOracle,
    split: &SampleSplit,
    opts: &CoderOptions,
) -> Result<(), CoderError> {
    check_dims(codes, sim, split)?;
    let c = codes.c();
    let m = split.omega().len();
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    for bit in 1..=c {
        let inst = build_bqp(bit, codes, sim, split, opts.target)?;
        let solution = if m <= opts.exact_limit {
            solve_bqp_exact(&inst)?
        } else {
            let init: Vec<i8> = split
                .omega()
                .iter()
                .map(|&i| codes.get(i, bit - 1))
                .collect();
            solve_bqp_local(&inst, &init, opts.restarts, rng.random())?
        };
        for (a, &i) in split.omega().iter().enumerate() {
            codes.set(i, bit - 1, solution[a]);
        }
    }
    Ok(())
}

/// Column-sampled loss: cross pairs (omega x gamma) counted once, sampled
/// pairs (omega x omega, i != j) counted in both orders. `bit_prefix`
/// truncates inner products to the first k bits.
pub fn sampled_loss(
    codes: &CodeMatrix,
    sim: &SimilarityOracle,
    split: &SampleSplit,
    target: f64,
    bit_prefix: Option<usize>,
) -> Result<f64, CoderError> {
    check_dims(codes, sim, split)?;
    let c = codes.c();
    let prefix = bit_prefix.unwrap_or(c);
    if prefix == 0 || prefix > c {
        return Err(CoderError::BitOutOfRange { bit: prefix, c });
    }
    let omega = split.omega();
    let mut total = 0.0;
    for &i in omega {
        for &j in split.gamma() {
            let (s, w) = sim.pair(i, j);
            let e = codes.dot_prefix(i, j, prefix) as f64 - target * s;
            total += w * e * e;
        }
    }
    for (a, &i) in omega.iter().enumerate() {
        for &j in omega.iter().skip(a + 1) {
            let (s, w) = sim.pair(i, j);
            let e = codes.dot_prefix(i, j, prefix) as f64 - target * s;
            total += 2.0 * w * e * e;
        }
    }
    Ok(total)
}

fn check_dims(
    codes: &CodeMatrix,
    sim: &SimilarityOracle,
    split: &SampleSplit,
) -> Result<(), CoderError> {
    if codes.n() != split.n() || sim.n() != split.n() {
        return Err(CoderError::DimensionMismatch(format!(
            "codes n={}, similarity n={}, split n={}",
            codes.n(),
            sim.n(),
            split.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabelSet;
    use crate::supervision::WeightPolicy;
    use ndarray::array;

    fn split_from_parts(omega: Vec<usize>, gamma: Vec<usize>) -> SampleSplit {
        SampleSplit::from_parts(omega, gamma).unwrap()
    }

    fn uniform_oracle(labels: Vec<Vec<u32>>) -> SimilarityOracle {
        SimilarityOracle::new(LabelSet::new(labels).unwrap(), WeightPolicy::Uniform)
    }

    /// Direct evaluation of the prefix-truncated sampled loss, written
    /// independently of build_bqp / sampled_loss internals.
    fn truncated_loss_ref(
        codes: &CodeMatrix,
        sim: &SimilarityOracle,
        split: &SampleSplit,
        target: f64,
        prefix: usize,
    ) -> f64 {
        let mut total = 0.0;
        for &i in split.omega() {
            for &j in split.gamma() {
                let mut dot = 0.0;
                for m0 in 0..prefix {
                    dot += codes.get(i, m0) as f64 * codes.get(j, m0) as f64;
                }
                let s = sim.similarity(i, j).unwrap();
                let w = sim.weight(i, j).unwrap();
                total += w * (dot - target * s).powi(2);
            }
        }
        for &i in split.omega() {
            for &j in split.omega() {
                if i == j {
                    continue;
                }
                let mut dot = 0.0;
                for m0 in 0..prefix {
                    dot += codes.get(i, m0) as f64 * codes.get(j, m0) as f64;
                }
                let s = sim.similarity(i, j).unwrap();
                let w = sim.weight(i, j).unwrap();
                total += w * (dot - target * s).powi(2);
            }
        }
        total
    }

    fn random_instance(m: usize, magnitude: i32, seed: u64) -> BqpInstance {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut q = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            for j in (i + 1)..m {
                let v = rng.random_range(-magnitude..=magnitude) as f64;
                q[[i, j]] = v;
                q[[j, i]] = v;
            }
        }
        let p = Array1::from_shape_fn(m, |_| rng.random_range(-magnitude..=magnitude) as f64);
        BqpInstance { bit: 1, q, p }
    }

    /// Independent exhaustive minimum, counting up through plain bitmasks.
    fn enumerate_min(inst: &BqpInstance) -> f64 {
        let m = inst.size();
        let mut best = f64::INFINITY;
        for mask in 0u64..(1 << m) {
            let x: Vec<i8> = (0..m)
                .map(|i| if mask >> i & 1 == 0 { 1 } else { -1 })
                .collect();
            best = best.min(bqp_objective(inst, &x));
        }
        best
    }

    #[test]
    fn code_matrix_validation() {
        assert!(CodeMatrix::new(array![[1i8, -1], [-1, 1]]).is_ok());
        assert!(matches!(
            CodeMatrix::new(array![[1i8, 0], [-1, 1]]),
            Err(CoderError::InvalidCode)
        ));
        let m = CodeMatrix::new(array![[1i8, -1, 1]]).unwrap();
        assert_eq!(m.dot(0, 0), 3);
    }

    #[test]
    fn first_bit_instance_matches_hand_calculation() {
        // Two sampled points, both labeled alike, no complement points:
        // residual and linear terms vanish, Q_12 = -2 * (c * 1 - 0) = -4.
        let codes = CodeMatrix::new(array![[1i8, 1], [1, -1]]).unwrap();
        let sim = uniform_oracle(vec![vec![0], vec![0]]);
        let split = split_from_parts(vec![0, 1], vec![]);
        let inst = build_bqp(1, &codes, &sim, &split, 2.0).unwrap();
        assert_eq!(inst.q[[0, 1]], -4.0);
        assert_eq!(inst.q[[1, 0]], -4.0);
        assert_eq!(inst.q[[0, 0]], 0.0);
        assert_eq!(inst.q[[1, 1]], 0.0);
        assert_eq!(inst.p[0], 0.0);
        assert_eq!(inst.p[1], 0.0);
    }

    #[test]
    fn bqp_diagonal_is_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let codes = CodeMatrix::random(7, 3, &mut rng);
        let sim = uniform_oracle(vec![
            vec![0],
            vec![1],
            vec![0],
            vec![1],
            vec![0],
            vec![1],
            vec![0],
        ]);
        let split = split_from_parts(vec![0, 2, 4, 6], vec![1, 3, 5]);
        for bit in 1..=3 {
            let inst = build_bqp(bit, &codes, &sim, &split, 3.0).unwrap();
            for i in 0..4 {
                assert_eq!(inst.q[[i, i]], 0.0);
            }
        }
    }

    #[test]
    fn quadratic_form_matches_truncated_loss_up_to_constant() {
        // |omega| = 4, |gamma| = 3, c = 3, k = 2: the BQP objective and the
        // prefix-truncated loss must differ by an assignment-independent
        // constant across all 16 bit vectors.
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut codes = CodeMatrix::random(7, 3, &mut rng);
        let sim = uniform_oracle(vec![
            vec![0],
            vec![1],
            vec![1],
            vec![0],
            vec![1],
            vec![0],
            vec![1],
        ]);
        let split = split_from_parts(vec![0, 1, 2, 3], vec![4, 5, 6]);
        let bit = 2;
        let target = 3.0;
        let inst = build_bqp(bit, &codes, &sim, &split, target).unwrap();

        let mut residuals = Vec::new();
        for mask in 0u64..16 {
            let x: Vec<i8> = (0..4)
                .map(|i| if mask >> i & 1 == 0 { 1 } else { -1 })
                .collect();
            for (a, &i) in split.omega().iter().enumerate() {
                codes.set(i, bit - 1, x[a]);
            }
            let quad = bqp_objective(&inst, &x);
            let loss = truncated_loss_ref(&codes, &sim, &split, target, bit);
            residuals.push(quad - loss);
        }
        let max = residuals.iter().cloned().fold(f64::MIN, f64::max);
        let min = residuals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            max - min < 1e-9,
            "constancy residual spread {} too large",
            max - min
        );
    }

    #[test]
    fn exact_solver_independent_signs() {
        let inst = BqpInstance {
            bit: 1,
            q: Array2::zeros((2, 2)),
            p: array![4.0, -2.0],
        };
        assert_eq!(solve_bqp_exact(&inst).unwrap(), vec![-1, 1]);
    }

    #[test]
    fn exact_solver_tie_break_prefers_plus_one() {
        let inst = BqpInstance {
            bit: 1,
            q: Array2::zeros((1, 1)),
            p: array![0.0],
        };
        assert_eq!(solve_bqp_exact(&inst).unwrap(), vec![1]);
    }

    #[test]
    fn exact_solver_matches_enumeration() {
        for seed in 0..25 {
            let inst = random_instance(10, 10, seed);
            let x = solve_bqp_exact(&inst).unwrap();
            let f = bqp_objective(&inst, &x);
            let oracle = enumerate_min(&inst);
            assert_eq!(f, oracle, "seed {seed}");
        }
    }

    #[test]
    fn exact_solver_rejects_oversized_instance() {
        let m = EXACT_ENUMERATION_LIMIT + 1;
        let inst = BqpInstance {
            bit: 1,
            q: Array2::zeros((m, m)),
            p: Array1::zeros(m),
        };
        assert!(matches!(
            solve_bqp_exact(&inst),
            Err(CoderError::TooLarge { .. })
        ));
    }

    #[test]
    fn local_search_keeps_optimal_init() {
        let inst = random_instance(8, 6, 3);
        let optimal = solve_bqp_exact(&inst).unwrap();
        let out = solve_bqp_local(&inst, &optimal, 5, 99).unwrap();
        assert_eq!(
            bqp_objective(&inst, &out),
            bqp_objective(&inst, &optimal)
        );
    }

    #[test]
    fn local_search_never_worse_than_init_and_mostly_optimal() {
        let mut hits = 0;
        let total = 40;
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        for seed in 0..total {
            let inst = random_instance(10, 8, seed);
            let init: Vec<i8> = (0..10)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let init_f = bqp_objective(&inst, &init);
            let out = solve_bqp_local(&inst, &init, 20, seed ^ 0xABCD).unwrap();
            let out_f = bqp_objective(&inst, &out);
            assert!(out_f <= init_f, "seed {seed}: worse than init");
            if out_f == enumerate_min(&inst) {
                hits += 1;
            }
        }
        assert!(
            hits * 100 >= total * 95,
            "only {hits}/{total} reached the optimum"
        );
    }

    #[test]
    fn descent_objective_strictly_decreasing() {
        let inst = random_instance(12, 9, 21);
        let mut x = vec![1i8; 12];
        let mut trace = Vec::new();
        descend(&inst, &mut x, Some(&mut trace));
        assert!(trace.len() > 1, "expected at least one improving flip");
        for pair in trace.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn sweep_does_not_increase_sampled_loss() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let labels: Vec<Vec<u32>> = (0..20).map(|i| vec![(i % 2) as u32]).collect();
        let sim = uniform_oracle(labels);
        let split = split_from_parts((0..8).collect(), (8..20).collect());
        let mut codes = CodeMatrix::random(20, 4, &mut rng);
        let target = 4.0;
        let before = sampled_loss(&codes, &sim, &split, target, None).unwrap();
        let opts = CoderOptions::new(target);
        optimize_codes(&mut codes, &sim, &split, &opts).unwrap();
        let after = sampled_loss(&codes, &sim, &split, target, None).unwrap();
        assert!(after <= before, "loss went {before} -> {after}");
    }

    #[test]
    fn per_bit_prefix_loss_never_increases() {
        // Each bit solve minimizes the prefix-truncated loss with earlier
        // bits already rebuilt, so recording the prefix loss right before
        // and after each solve must show a non-increase.
        let mut rng = ChaCha20Rng::seed_from_u64(4242);
        let labels: Vec<Vec<u32>> = (0..15).map(|i| vec![(i % 3) as u32]).collect();
        let sim = uniform_oracle(labels);
        let split = split_from_parts((0..6).collect(), (6..15).collect());
        let mut codes = CodeMatrix::random(15, 5, &mut rng);
        let target = 5.0;
        for bit in 1..=5 {
            let before = sampled_loss(&codes, &sim, &split, target, Some(bit)).unwrap();
            let inst = build_bqp(bit, &codes, &sim, &split, target).unwrap();
            let solution = solve_bqp_exact(&inst).unwrap();
            for (a, &i) in split.omega().iter().enumerate() {
                codes.set(i, bit - 1, solution[a]);
            }
            let after = sampled_loss(&codes, &sim, &split, target, Some(bit)).unwrap();
            assert!(after <= before, "bit {bit}: {before} -> {after}");
        }
    }

    #[test]
    fn all_similar_pairs_align_codes() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let sim = uniform_oracle(vec![vec![0], vec![0], vec![0]]);
        let split = split_from_parts(vec![0, 1, 2], vec![]);
        let mut codes = CodeMatrix::random(3, 2, &mut rng);
        let opts = CoderOptions::new(2.0);
        optimize_codes(&mut codes, &sim, &split, &opts).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(codes.dot(i, j), 2, "rows {i},{j} not aligned");
            }
        }
    }

    #[test]
    fn exact_sweep_is_idempotent() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let labels: Vec<Vec<u32>> = (0..12).map(|i| vec![(i % 2) as u32]).collect();
        let sim = uniform_oracle(labels);
        let split = split_from_parts((0..5).collect(), (5..12).collect());
        let mut codes = CodeMatrix::random(12, 3, &mut rng);
        let opts = CoderOptions::new(3.0);
        optimize_codes(&mut codes, &sim, &split, &opts).unwrap();
        let first = codes.clone();
        optimize_codes(&mut codes, &sim, &split, &opts).unwrap();
        assert_eq!(first, codes);
    }

    #[test]
    fn sampled_loss_trivial_cases() {
        // All codes identical, every pair similar: both terms vanish.
        let codes = CodeMatrix::new(Array2::from_elem((4, 3), 1i8)).unwrap();
        let sim = uniform_oracle(vec![vec![0]; 4]);
        let split = split_from_parts(vec![0, 1], vec![2, 3]);
        assert_eq!(
            sampled_loss(&codes, &sim, &split, 3.0, None).unwrap(),
            0.0
        );

        // Single cross pair with opposite codes and positive similarity.
        let codes = CodeMatrix::new(array![[1i8, 1, 1, 1], [-1i8, -1, -1, -1]]).unwrap();
        let sim = uniform_oracle(vec![vec![0], vec![0]]);
        let split = split_from_parts(vec![0], vec![1]);
        assert_eq!(
            sampled_loss(&codes, &sim, &split, 4.0, None).unwrap(),
            64.0
        );
    }

    #[test]
    fn sampled_loss_matches_reference() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let labels: Vec<Vec<u32>> = (0..10)
            .map(|_| vec![rng.random_range(0u32..3)])
            .collect();
        let sim = uniform_oracle(labels);
        let split = split_from_parts(vec![0, 2, 4, 6], vec![1, 3, 5, 7, 8, 9]);
        let codes = CodeMatrix::random(10, 4, &mut rng);
        for prefix in 1..=4 {
            let got = sampled_loss(&codes, &sim, &split, 4.0, Some(prefix)).unwrap();
            let want = truncated_loss_ref(&codes, &sim, &split, 4.0, prefix);
            assert!((got - want).abs() < 1e-9, "prefix {prefix}");
        }
    }

    #[test]
    fn bit_index_validation() {
        let codes = CodeMatrix::new(array![[1i8, 1], [1, 1]]).unwrap();
        let sim = uniform_oracle(vec![vec![0], vec![0]]);
        let split = split_from_parts(vec![0], vec![1]);
        assert!(matches!(
            build_bqp(0, &codes, &sim, &split, 2.0),
            Err(CoderError::BitOutOfRange { .. })
        ));
        assert!(matches!(
            build_bqp(3, &codes, &sim, &split, 2.0),
            Err(CoderError::BitOutOfRange { .. })
        ));
        assert!(matches!(
            sampled_loss(&codes, &sim, &split, 2.0, Some(0)),
            Err(CoderError::BitOutOfRange { .. })
        ));
    }
}
