//! Central finite-difference oracle for gradient checks.
//!
//! Deliberately independent of the tape: it only needs a closure that maps
//! a flat parameter vector to a scalar.

/// Central finite differences of `f` at `x` with perturbation `eps`.
pub fn central_diff<F>(f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + eps;
        let fp = f(&xp);
        xp[i] = orig - eps;
        let fm = f(&xp);
        xp[i] = orig;
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    grad
}

/// Worst-case relative error between two gradient vectors. Entries where
/// both magnitudes are below `abs_floor` are compared absolutely.
pub fn max_rel_err(a: &[f64], b: &[f64], abs_floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst: f64 = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let denom = x.abs().max(y.abs());
        let err = if denom < abs_floor {
            (x - y).abs()
        } else {
            (x - y).abs() / denom
        };
        worst = worst.max(err);
    }
    worst
}
