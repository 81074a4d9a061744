//! Euclidean projections onto the class bodies.
//!
//! All iterative schemes stop at absolute tolerance [`TOL`] and give up after
//! [`MAX_ITER`] iterations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::ClassError;

/// Absolute tolerance for iterative projections.
pub const TOL: f64 = 1e-10;
/// Iteration cap for iterative projections.
pub const MAX_ITER: usize = 10_000;

/// Projection onto `{x : ||x||_1 <= radius}` by sorted soft-thresholding.
pub fn l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return v.to_vec();
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - radius) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    let mut w: Vec<f64> = v
        .iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect();
    let n1: f64 = w.iter().map(|x| x.abs()).sum();
    if n1 > radius {
        let s = radius / n1;
        w.iter_mut().for_each(|x| *x *= s);
    }
    w
}

/// Projection onto `{x : sum x_i^2 / a_i <= 1}`.
///
/// The multiplier solves `sum a_i v_i^2 / (a_i + lambda)^2 = 1`; the left side
/// is convex and decreasing, so Newton from zero increases monotonically.
pub fn ellipsoid(v: &[f64], a: &[f64]) -> Result<Vec<f64>, ClassError> {
    let q: f64 = v.iter().zip(a).map(|(x, ai)| x * x / ai).sum();
    if q <= 1.0 {
        return Ok(v.to_vec());
    }
    let phi = |lam: f64| -> (f64, f64) {
        let mut f = -1.0;
        let mut df = 0.0;
        for (x, ai) in v.iter().zip(a) {
            let d = ai + lam;
            let t = ai * x * x / (d * d);
            f += t;
            df -= 2.0 * t / d;
        }
        (f, df)
    };
    let mut lam = 0.0;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (f, df) = phi(lam);
        if f.abs() <= 1e-14 || df == 0.0 {
            converged = true;
            break;
        }
        let step = f / df;
        let next = lam - step;
        if (next - lam).abs() <= 1e-15 * next.abs().max(1.0) {
            lam = next;
            converged = true;
            break;
        }
        lam = next;
    }
    if !converged {
        let (f, _) = phi(lam);
        return Err(ClassError::NoConvergence {
            iterations: MAX_ITER,
            residual: f.abs(),
        });
    }
    let mut x: Vec<f64> = v
        .iter()
        .zip(a)
        .map(|(vi, ai)| ai * vi / (ai + lam))
        .collect();
    let q: f64 = x.iter().zip(a).map(|(xi, ai)| xi * xi / ai).sum();
    if q > 1.0 {
        let s = 1.0 / q.sqrt();
        x.iter_mut().for_each(|xi| *xi *= s);
    }
    Ok(x)
}

/// Pool-adjacent-violators: least-squares non-decreasing fit with unit weights.
pub fn pava(v: &[f64]) -> Vec<f64> {
    // Blocks of (sum, count).
    let mut sums: Vec<f64> = Vec::with_capacity(v.len());
    let mut counts: Vec<usize> = Vec::with_capacity(v.len());
    for &x in v {
        sums.push(x);
        counts.push(1);
        while sums.len() > 1 {
            let k = sums.len();
            let prev = sums[k - 2] / counts[k - 2] as f64;
            let last = sums[k - 1] / counts[k - 1] as f64;
            if prev <= last {
                break;
            }
            sums[k - 2] += sums[k - 1];
            counts[k - 2] += counts[k - 1];
            sums.pop();
            counts.pop();
        }
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        out.extend(std::iter::repeat_n(mean, *c));
    }
    out
}

/// Strides of a row-major `m^p` grid, axis 0 slowest.
pub fn grid_strides(p: usize, m: usize) -> Vec<usize> {
    let mut strides = vec![1; p];
    for a in (0..p.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * m;
    }
    strides
}

/// Applies `f` to every axis-`axis` line of an `m^p` grid.
fn for_each_line(
    x: &mut [f64],
    p: usize,
    m: usize,
    axis: usize,
    mut f: impl FnMut(&mut [f64]),
) {
    let strides = grid_strides(p, m);
    let stride = strides[axis];
    let n = x.len();
    let mut line = vec![0.0; m];
    for start in 0..n {
        if !(start / stride).is_multiple_of(m) {
            continue;
        }
        for (j, slot) in line.iter_mut().enumerate() {
            *slot = x[start + j * stride];
        }
        f(&mut line);
        for (j, &val) in line.iter().enumerate() {
            x[start + j * stride] = val;
        }
    }
}

/// Running maximum along every axis, which makes a near-monotone grid exactly
/// monotone; each pass preserves monotonicity along the earlier axes.
fn enforce_monotone(x: &mut [f64], p: usize, m: usize) {
    for axis in 0..p {
        for_each_line(x, p, m, axis, |line| {
            for j in 1..line.len() {
                if line[j] < line[j - 1] {
                    line[j] = line[j - 1];
                }
            }
        });
    }
}

/// Projection onto grids that are non-decreasing along every axis with values
/// in `[0, 1]`.
///
/// Dykstra alternation over the per-axis monotone cones (each solved exactly
/// by PAVA on its disjoint lines), then a box clamp, which is exact for
/// isotonic problems with constant bounds.
pub fn monotone_grid(v: &[f64], p: usize, m: usize) -> Result<Vec<f64>, ClassError> {
    let mut x = v.to_vec();
    if p == 1 {
        x = pava(&x);
    } else {
        let n = x.len();
        let mut incr = vec![vec![0.0; n]; p];
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITER {
            let before = x.clone();
            for (axis, y) in incr.iter_mut().enumerate() {
                let mut z: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a + b).collect();
                let zc = z.clone();
                for_each_line(&mut z, p, m, axis, |line| {
                    let fit = pava(line);
                    line.copy_from_slice(&fit);
                });
                for i in 0..n {
                    y[i] = zc[i] - z[i];
                }
                x = z;
            }
            residual = x
                .iter()
                .zip(&before)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual <= TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ClassError::NoConvergence {
                iterations: MAX_ITER,
                residual,
            });
        }
    }
    enforce_monotone(&mut x, p, m);
    x.iter_mut().for_each(|xi| *xi = xi.clamp(0.0, 1.0));
    Ok(x)
}

/// Box clamp.
pub fn clamp_box(v: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    v.iter().map(|x| x.clamp(lo, hi)).collect()
}

/// One ball-like constraint `||D x||_2 <= rho`, stored through the
/// eigendecomposition of `D^T D`.
#[derive(Clone, Debug)]
pub struct QuadConstraint {
    q: DMatrix<f64>,
    lambda: DVector<f64>,
    rho: f64,
}

impl QuadConstraint {
    /// Builds the constraint from the rows of `D`.
    pub fn new(d: &DMatrix<f64>, rho: f64) -> Self {
        let gram = d.transpose() * d;
        let eig = SymmetricEigen::new(gram);
        let lambda = eig.eigenvalues.map(|l| l.max(0.0));
        Self {
            q: eig.eigenvectors,
            lambda,
            rho,
        }
    }

    /// Squared constraint value `||D x||^2`.
    pub fn value_sq(&self, x: &DVector<f64>) -> f64 {
        let w = self.q.transpose() * x;
        w.iter().zip(self.lambda.iter()).map(|(wi, l)| l * wi * wi).sum()
    }

    /// Exact projection: `x = (I + mu D^T D)^{-1} v` with `mu` found by
    /// bisection on the decreasing map `mu -> ||D x(mu)||`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = self.q.transpose() * v;
        let g = |mu: f64| -> f64 {
            w.iter()
                .zip(self.lambda.iter())
                .map(|(wi, l)| {
                    let s = 1.0 + mu * l;
                    l * wi * wi / (s * s)
                })
                .sum()
        };
        let target = self.rho * self.rho;
        if g(0.0) <= target {
            return v.clone();
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while g(hi) > target {
            hi *= 2.0;
            if hi > 1e300 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let mu = hi;
        let scaled = DVector::from_iterator(
            w.len(),
            w.iter()
                .zip(self.lambda.iter())
                .map(|(wi, l)| wi / (1.0 + mu * l)),
        );
        &self.q * scaled
    }
}

/// Constraint family of the discretized Hölder body on `m` bins:
/// `||f||_rms <= gamma` and, for every shift `k = 1..m-1`,
/// `||f(. + k/m) - f||_rms <= gamma (k/m)^alpha` with `f(x) = f(1)` past the
/// right end.
#[derive(Clone, Debug)]
pub struct HolderOps {
    pub m: usize,
    pub alpha: f64,
    pub gamma: f64,
    constraints: Vec<QuadConstraint>,
}

impl HolderOps {
    pub fn new(alpha: f64, gamma: f64, m: usize) -> Self {
        let scale = (m as f64).sqrt();
        let mut constraints = Vec::with_capacity(m);
        constraints.push(QuadConstraint::new(&DMatrix::identity(m, m), gamma * scale));
        for k in 1..m {
            let mut d = DMatrix::zeros(m, m);
            for i in 0..m {
                let j = (i + k).min(m - 1);
                if j != i {
                    d[(i, j)] += 1.0;
                    d[(i, i)] -= 1.0;
                }
            }
            let rho = gamma * (k as f64 / m as f64).powf(alpha) * scale;
            constraints.push(QuadConstraint::new(&d, rho));
        }
        Self {
            m,
            alpha,
            gamma,
            constraints,
        }
    }

    /// Shift-`k` increment vector.
    pub fn increment(x: &[f64], k: usize) -> Vec<f64> {
        let m = x.len();
        (0..m).map(|i| x[(i + k).min(m - 1)] - x[i]).collect()
    }

    /// Membership with relative tolerance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let m = self.m as f64;
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / m).sqrt();
        if rms > self.gamma * (1.0 + tol) + tol {
            return false;
        }
        for k in 1..self.m {
            let inc = Self::increment(x, k);
            let r = (inc.iter().map(|v| v * v).sum::<f64>() / m).sqrt();
            let bound = self.gamma * (k as f64 / m).powf(self.alpha);
            if r > bound * (1.0 + tol) + tol {
                return false;
            }
        }
        true
    }

    /// Dykstra alternation over all constraints, followed by a uniform shrink
    /// toward zero that removes the last round-off violation.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, ClassError> {
        let mut x = DVector::from_column_slice(v);
        if self.contains(v, 0.0) {
            return Ok(v.to_vec());
        }
        let mut incr: Vec<DVector<f64>> = vec![DVector::zeros(self.m); self.constraints.len()];
        let mut residual = f64::INFINITY;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let before = x.clone();
            for (c, y) in self.constraints.iter().zip(incr.iter_mut()) {
                let z = &x + &*y;
                let pz = c.project(&z);
                *y = z - &pz;
                x = pz;
            }
            residual = (&x - &before).amax();
            if residual <= TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ClassError::NoConvergence {
                iterations: MAX_ITER,
                residual,
            });
        }
        // Every constraint is a symmetric convex set around zero, so a shrink
        // by the worst violation ratio lands exactly inside.
        let mut worst: f64 = 1.0;
        for c in &self.constraints {
            let val = c.value_sq(&x).sqrt();
            if val > c.rho {
                worst = worst.max(val / c.rho);
            }
        }
        if worst > 1.0 {
            x /= worst * (1.0 + 1e-15);
        }
        Ok(x.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        assert_eq!(l1_ball(&[2.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        let w = l1_ball(&[1.0, 1.0], 1.0);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pava_examples() {
        assert_eq!(pava(&[2.0, 1.0]), vec![1.5, 1.5]);
        assert_eq!(pava(&[0.8, 0.2]), vec![0.5, 0.5]);
        assert_eq!(pava(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn monotone_examples() {
        assert_eq!(monotone_grid(&[2.0, 1.0], 1, 2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(monotone_grid(&[0.8, 0.2], 1, 2).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn monotone_two_axes_is_monotone() {
        let v = [0.9, 0.1, 0.5, 0.4, 0.2, 0.8, 0.3, 0.0, 0.7];
        let x = monotone_grid(&v, 2, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i + 1 < 3 {
                    assert!(x[(i + 1) * 3 + j] >= x[i * 3 + j]);
                }
                if j + 1 < 3 {
                    assert!(x[i * 3 + j + 1] >= x[i * 3 + j]);
                }
            }
        }
    }

    #[test]
    fn ellipsoid_on_axis() {
        // Point (0, 3) onto a = (0.25, 1): nearest point is (0, 1).
        let x = ellipsoid(&[0.0, 3.0], &[0.25, 1.0]).unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn holder_projection_is_member() {
        let ops = HolderOps::new(1.0, 1.0, 8);
        let v = [3.0, -2.0, 1.0, 0.0, 4.0, -1.0, 2.0, 0.5];
        let x = ops.project(&v).unwrap();
        assert!(ops.contains(&x, 1e-9));
        let again = ops.project(&x).unwrap();
        assert_eq!(x, again);
    }
}
