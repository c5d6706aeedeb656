//! Adam optimizer with bias correction, plus a global-norm gradient clip.

use crate::Real;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second-moment accumulators, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<R: Real> {
    pub cfg: AdamConfig,
    m: Vec<Vec<R>>,
    v: Vec<Vec<R>>,
    step: u64,
}

impl<R: Real> AdamState<R> {
    pub fn new(cfg: AdamConfig, param_sizes: &[usize]) -> Self {
        AdamState {
            cfg,
            m: param_sizes.iter().map(|&n| vec![R::zero(); n]).collect(),
            v: param_sizes.iter().map(|&n| vec![R::zero(); n]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Moment buffers, for state checkpointing.
    pub fn moments(&self) -> (&[Vec<R>], &[Vec<R>]) {
        (&self.m, &self.v)
    }

    /// Rebuild from checkpointed moments.
    pub fn from_parts(cfg: AdamConfig, m: Vec<Vec<R>>, v: Vec<Vec<R>>, step: u64) -> Self {
        assert_eq!(m.len(), v.len());
        AdamState { cfg, m, v, step }
    }

    /// One update. `params[i]` and `grads[i]` must be shape-congruent with
    /// the sizes this state was built with.
    pub fn step(&mut self, params: &mut [&mut [R]], grads: &[&[R]]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let b1 = R::from_f64(self.cfg.beta1);
        let b2 = R::from_f64(self.cfg.beta2);
        let eps = R::from_f64(self.cfg.eps);
        let bc1 = R::one() - b1.powi(t);
        let bc2 = R::one() - b2.powi(t);
        let lr = R::from_f64(self.cfg.lr);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(p.len(), m.len(), "Adam state not shape-congruent");
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (R::one() - b1) * gi;
                v[i] = b2 * v[i] + (R::one() - b2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] = p[i] - lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

/// Scale all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm<R: Real>(grads: &mut [Vec<R>], max_norm: f64) -> f64 {
    let sq: f64 = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|&x| x.to_f64() * x.to_f64())
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = R::from_f64(max_norm / norm);
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x = *x * s;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut st = AdamState::<f64>::new(AdamConfig::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let orig = p.clone();
        st.step(&mut [&mut p], &[&[0.0, 0.0, 0.0]]);
        assert_eq!(p, orig);
    }

    #[test]
    fn first_step_matches_scalar_update() {
        // first step with g=1: mhat=1, vhat=1, delta = -lr/(1+eps) ~ -lr
        let mut st = AdamState::<f64>::new(AdamConfig::default(), &[1]);
        let mut p = vec![0.0];
        st.step(&mut [&mut p[..]], &[&[1.0]]);
        assert!((p[0] + 0.001).abs() < 1e-9, "{}", p[0]);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut st = AdamState::<f64>::new(AdamConfig::default(), &[1]);
        let mut p = vec![0.0];
        let mut last = 0.0;
        for _ in 0..2 {
            st.step(&mut [&mut p[..]], &[&[1.0]]);
            assert!(p[0] < last);
            last = p[0];
        }
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut grads = vec![vec![3.0f64], vec![4.0f64]];
        let norm = clip_global_norm(&mut grads, 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        let new_sq: f64 = grads.iter().flatten().map(|x| x * x).sum();
        assert!((new_sq.sqrt() - 1.0).abs() < 1e-12);
    }
}
