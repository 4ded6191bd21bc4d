//! Preconditioned conjugate gradients over matrix-free operators.
//!
//! All reductions run sequentially in index order so results are
//! reproducible bit for bit.

pub trait SpdOperator {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn precondition(&self, r: &[f64], z: &mut [f64]);
    /// Removes null-space components; a no-op for nonsingular operators.
    fn project(&self, _v: &mut [f64]) {}
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    IterationCap,
}

/// Runs PCG from the initial guess in `x` until `‖r‖ ≤ tol · b_norm`.
///
/// The residual after every iteration, relative to `b_norm`, is appended to
/// `history`; `iterations` is incremented in place so callers can resume.
pub fn pcg<O: SpdOperator>(
    op: &O,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    b_norm: f64,
    max_iter: usize,
    iterations: &mut usize,
    history: &mut Vec<f64>,
) -> CgStatus {
    let n = op.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];

    op.apply(x, &mut q);
    for k in 0..n {
        r[k] = b[k] - q[k];
    }
    op.project(&mut r);
    let target = tol * b_norm;
    let mut rn = norm2(&r);
    if rn <= target {
        return CgStatus::Converged;
    }
    op.precondition(&r, &mut z);
    op.project(&mut z);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);

    while *iterations < max_iter {
        op.apply(&d, &mut q);
        let dq = dot(&d, &q);
        if dq <= 0.0 || !dq.is_finite() {
            // lost positive definiteness to roundoff; nothing more to gain
            return CgStatus::Converged;
        }
        let alpha = rz / dq;
        for k in 0..n {
            x[k] += alpha * d[k];
            r[k] -= alpha * q[k];
        }
        *iterations += 1;
        rn = norm2(&r);
        history.push(rn / b_norm);
        if rn <= target {
            return CgStatus::Converged;
        }
        op.precondition(&r, &mut z);
        op.project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            d[k] = z[k] + beta * d[k];
        }
    }
    CgStatus::IterationCap
}
