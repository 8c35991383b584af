//! Sequential minimal optimisation for the C-SVC dual
//!
//!   min  ½ aᵀQa − eᵀa   s.t.  0 ≤ a ≤ C,  yᵀa = 0,   Q_ij = y_i y_j K_ij
//!
//! using second-order working-set selection (the LIBSVM "WSS2" rule).

use super::SvmError;

const TAU: f64 = 1e-12;

/// Kernel values between the training points of one sub-problem.
pub(crate) struct KernelView<'a> {
    /// Full `n x n` row-major kernel matrix.
    pub full: &'a [f64],
    pub n: usize,
    /// Rows of `full` that make up this sub-problem.
    pub index: &'a [usize],
}

impl KernelView<'_> {
    fn len(&self) -> usize {
        self.index.len()
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.full[self.index[i] * self.n + self.index[j]]
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let base = self.index[i] * self.n;
        for (o, &j) in out.iter_mut().zip(self.index) {
            *o = self.full[base + j];
        }
    }
}

pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

pub(crate) fn solve(
    kernel: &KernelView<'_>,
    y: &[f64],
    c: f64,
    eps: f64,
    max_iterations: usize,
) -> Result<DualSolution, SvmError> {
    let l = kernel.len();
    let mut alpha = vec![0.0; l];
    let mut grad = vec![-1.0; l];
    let qd: Vec<f64> = (0..l).map(|i| kernel.k(i, i)).collect();
    let mut ki = vec![0.0; l];
    let mut kj = vec![0.0; l];

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    loop {
        // i: maximal violating index in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = None;
        for t in 0..l {
            let candidate = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if candidate && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                gmax_idx = Some(t);
            }
        }
        let Some(i) = gmax_idx else { break };
        kernel.row(i, &mut ki);

        // j: largest second-order decrease among I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut gmin_idx = None;
        for t in 0..l {
            let candidate = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !candidate {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let quad = qd[i] + qd[t] - 2.0 * ki[t];
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    gmin_idx = Some(t);
                }
            }
        }
        let Some(j) = gmin_idx else { break };
        if gmax + gmax2 < eps {
            break;
        }
        if iterations >= max_iterations {
            return Err(SvmError::NoConvergence(max_iterations));
        }
        iterations += 1;
        kernel.row(j, &mut kj);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        // Q_ij = y_i y_j K_ij
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    // Offset: mean of y_i G_i over free vectors, else midpoint of the
    // feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };

    Ok(DualSolution {
        alpha,
        rho,
        iterations,
    })
}
