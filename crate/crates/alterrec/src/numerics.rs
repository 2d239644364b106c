//! Dense matrix kernels, row softmax, dropout, the optimizer, and a
//! finite-difference gradient checker.
//!
//! Everything computes in f64. Model parameters are kept on the f32 grid
//! (every stored value is exactly representable as an f32) so that the
//! float32 checkpoint format round-trips bitwise; [`snap_f32`] enforces
//! this after initialization and after every optimizer step.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Row-major dense matrix of f64 values. Vectors are 1×n or n×1 as convenient.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match shape");
        DenseMatrix { rows, cols, data }
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Uniform init in [-scale, scale], values snapped to the f32 grid.
    pub fn uniform_init(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| snap_f32(rng.gen_range(-scale..scale)))
            .collect();
        DenseMatrix { rows, cols, data }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn same_shape(&self, other: &DenseMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// self · other.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimensions must agree");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// selfᵀ · other. Used by backward passes to avoid materializing transposes.
    pub fn matmul_tn(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "matmul_tn outer dimensions must agree");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self · otherᵀ.
    pub fn matmul_nt(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_nt inner dimensions must agree");
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            for j in 0..other.rows {
                let brow = other.row(j);
                out.data[i * other.rows + j] = dot(arow, brow);
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert!(self.same_shape(other), "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Round to the nearest f32-representable value (the storage grid of the
/// binary file formats).
#[inline]
pub fn snap_f32(v: f64) -> f64 {
    v as f32 as f64
}

/// Numerically stable softmax over one row: e^{x−max}/Σ.
pub fn softmax_row(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Invalid("softmax over empty vector".into()));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("softmax input {bad}")));
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// log(Σ e^{x_i}) with max-subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

/// Deterministic dropout-mask source. Each mask site is keyed explicitly so
/// that the mask depends only on (seed, site), never on evaluation order —
/// finite-difference checks re-evaluate the loss with identical masks.
#[derive(Debug, Clone, Copy)]
pub struct DropoutCtx {
    pub rate: f64,
    pub seed: u64,
}

impl DropoutCtx {
    pub fn new(rate: f64, seed: u64) -> Self {
        DropoutCtx { rate, seed }
    }

    /// Disabled dropout (inference semantics).
    pub fn off() -> Self {
        DropoutCtx { rate: 0.0, seed: 0 }
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }

    /// Inverted-scaling mask for the site keyed by `tag`: entries are 0 with
    /// probability `rate`, else 1/(1−rate).
    pub fn mask(&self, tag: u64, len: usize) -> Vec<f64> {
        if !self.is_active() {
            return vec![1.0; len];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, tag));
        let keep = 1.0 / (1.0 - self.rate);
        (0..len)
            .map(|_| {
                if rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect()
    }
}

/// SplitMix64-style seed mixer for deriving independent streams.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// Named gradient accumulator. BTreeMap keeps iteration order deterministic.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub tensors: BTreeMap<String, DenseMatrix>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    /// Gradient tensor for `name`, created zeroed on first touch.
    pub fn entry(&mut self, name: &str, rows: usize, cols: usize) -> &mut DenseMatrix {
        self.tensors
            .entry(name.to_string())
            .or_insert_with(|| DenseMatrix::zeros(rows, cols))
    }

    pub fn get(&self, name: &str) -> Option<&DenseMatrix> {
        self.tensors.get(name)
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.tensors.values_mut() {
            g.scale(factor);
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (name, g) in &other.tensors {
            self.entry(name, g.rows, g.cols).add_assign(g);
        }
    }

    /// Flatten in the order given by `names` (missing tensors flatten as zeros).
    pub fn flatten(&self, shapes: &[(String, usize, usize)]) -> Vec<f64> {
        let mut out = Vec::new();
        for (name, rows, cols) in shapes {
            match self.tensors.get(name) {
                Some(g) => {
                    assert_eq!((g.rows, g.cols), (*rows, *cols), "gradient shape for {name}");
                    out.extend_from_slice(&g.data);
                }
                None => out.extend(std::iter::repeat(0.0).take(rows * cols)),
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Adaptive-moment optimizer state (bias-corrected first/second moments).
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    moments: BTreeMap<String, (DenseMatrix, DenseMatrix)>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    /// One update over the named parameter list. Updated parameters are
    /// snapped back to the f32 grid so checkpoints round-trip bitwise.
    pub fn step(
        &mut self,
        params: &mut [(String, &mut DenseMatrix)],
        grads: &Gradients,
    ) -> Result<()> {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (name, param) in params.iter_mut() {
            let grad = match grads.get(name) {
                Some(g) => g,
                None => continue,
            };
            if !param.same_shape(grad) {
                return Err(Error::Shape(format!(
                    "parameter {name} is {}x{} but gradient is {}x{}",
                    param.rows, param.cols, grad.rows, grad.cols
                )));
            }
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (DenseMatrix::zeros(param.rows, param.cols), DenseMatrix::zeros(param.rows, param.cols)));
            for i in 0..param.data.len() {
                let g = grad.data[i];
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * g;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m.data[i] / bc1;
                let v_hat = v.data[i] / bc2;
                let updated = param.data[i] - self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
                param.data[i] = snap_f32(updated);
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central-difference check of an analytic gradient.
///
/// For each coordinate compares `analytic[i]` with
/// `(L(θ+eps·e_i) − L(θ−eps·e_i)) / (2·eps)`; the relative error uses the
/// denominator `max(|analytic|, |numeric|, 1e-8)`. Returns the maximum
/// relative error over all coordinates.
pub fn finite_diff_check<F>(
    theta: &[f64],
    analytic: &[f64],
    eps: f64,
    mut loss: F,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(theta.len(), analytic.len());
    let mut work = theta.to_vec();
    let mut max_rel = 0.0f64;
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let plus = loss(&work);
        work[i] = orig - eps;
        let minus = loss(&work);
        work[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        let rel = (analytic[i] - numeric).abs() / denom;
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_symmetry() {
        let p = softmax_row(&[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_large_values_stable() {
        let p = softmax_row(&[1000.0, 0.0]).unwrap();
        assert!(p[0] > 1.0 - 1e-12);
        assert!(p[1] < 1e-12);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn softmax_matches_direct_reference() {
        let v = [1.0f64, 2.0, 3.0];
        let p = softmax_row(&v).unwrap();
        let max = 3.0;
        let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (a, e) in p.iter().zip(&exps) {
            assert!((a - e / sum).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax_row(&[f64::NAN, 1.0]).is_err());
        assert!(softmax_row(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn matmul_identity_is_exact() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let i = DenseMatrix::identity(3);
        assert_eq!(a.matmul(&i).data, a.data);
    }

    #[test]
    fn matmul_transposed_variants_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DenseMatrix::uniform_init(4, 3, 1.0, &mut rng);
        let b = DenseMatrix::uniform_init(4, 5, 1.0, &mut rng);
        // aᵀ·b two ways
        let direct = a.matmul_tn(&b);
        let mut at = DenseMatrix::zeros(3, 4);
        for i in 0..4 {
            for j in 0..3 {
                at.set(j, i, a.get(i, j));
            }
        }
        let via_transpose = at.matmul(&b);
        for (x, y) in direct.data.iter().zip(&via_transpose.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut p = DenseMatrix::from_vec(1, 2, vec![1.5, -2.25]);
        let mut grads = Gradients::new();
        grads.entry("p", 1, 2); // stays zero
        let mut state = AdamState::new(0.1);
        let mut params = vec![("p".to_string(), &mut p)];
        state.step(&mut params, &grads).unwrap();
        assert_eq!(state.step, 1);
        assert_eq!(p.data, vec![1.5, -2.25]);
    }

    #[test]
    fn adam_matches_ten_step_hand_computation() {
        // Scalar parameter, constant gradient g. Reference recurrence computed
        // here directly, including the f32 snap applied after each update.
        let g = 0.37f64;
        let lr = 0.01f64;
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        let mut reference = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for t in 1..=10 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            reference = snap_f32(reference - lr * m_hat / (v_hat.sqrt() + eps));
            expected.push(reference);
        }

        let mut p = DenseMatrix::from_vec(1, 1, vec![1.0]);
        let mut grads = Gradients::new();
        grads.entry("p", 1, 1).data[0] = g;
        let mut state = AdamState::new(lr);
        for step in 0..10 {
            let mut params = vec![("p".to_string(), &mut p)];
            state.step(&mut params, &grads).unwrap();
            assert_eq!(p.data[0], expected[step], "step {step}");
        }
    }

    #[test]
    fn adam_updates_tensors_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a0 = DenseMatrix::uniform_init(2, 3, 1.0, &mut rng);
        let b0 = DenseMatrix::uniform_init(3, 1, 1.0, &mut rng);
        let ga = DenseMatrix::uniform_init(2, 3, 1.0, &mut rng);
        let gb = DenseMatrix::uniform_init(3, 1, 1.0, &mut rng);

        // joint update
        let (mut a, mut b) = (a0.clone(), b0.clone());
        let mut grads = Gradients::new();
        *grads.entry("a", 2, 3) = ga.clone();
        *grads.entry("b", 3, 1) = gb.clone();
        let mut state = AdamState::new(0.05);
        let mut params = vec![("a".to_string(), &mut a), ("b".to_string(), &mut b)];
        state.step(&mut params, &grads).unwrap();

        // separate updates
        let mut a_alone = a0.clone();
        let mut ga_only = Gradients::new();
        *ga_only.entry("a", 2, 3) = ga;
        let mut state_a = AdamState::new(0.05);
        let mut pa = vec![("a".to_string(), &mut a_alone)];
        state_a.step(&mut pa, &ga_only).unwrap();

        let mut b_alone = b0.clone();
        let mut gb_only = Gradients::new();
        *gb_only.entry("b", 3, 1) = gb;
        let mut state_b = AdamState::new(0.05);
        let mut pb = vec![("b".to_string(), &mut b_alone)];
        state_b.step(&mut pb, &gb_only).unwrap();

        assert_eq!(a.data, a_alone.data);
        assert_eq!(b.data, b_alone.data);
    }

    #[test]
    fn finite_diff_quadratic_is_exact() {
        let theta = vec![3.0];
        let analytic = vec![6.0];
        let err = finite_diff_check(&theta, &analytic, 1e-5, |t| t[0] * t[0]).unwrap();
        assert!(err < 1e-9, "rel err {err}");
    }

    #[test]
    fn finite_diff_flags_wrong_gradient() {
        let theta = vec![3.0];
        let analytic = vec![12.0]; // deliberately 2x the true gradient
        let err = finite_diff_check(&theta, &analytic, 1e-5, |t| t[0] * t[0]).unwrap();
        assert!((err - 0.5).abs() < 1e-6, "rel err {err}");
    }

    #[test]
    fn dropout_mask_deterministic_per_site() {
        let ctx = DropoutCtx::new(0.5, 42);
        let m1 = ctx.mask(7, 100);
        let m2 = ctx.mask(7, 100);
        assert_eq!(m1, m2);
        let m3 = ctx.mask(8, 100);
        assert_ne!(m1, m3);
        // inverted scaling: nonzero entries are 1/(1-rate)
        for v in &m1 {
            assert!(*v == 0.0 || (*v - 2.0).abs() < 1e-12);
        }
    }
}
