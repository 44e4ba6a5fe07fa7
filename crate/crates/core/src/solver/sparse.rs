/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|k| self.cols[*k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    /// `‖b - A x‖_∞`
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, b)| (b - a).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive-definite
/// `A`, stopping on the true residual `‖b - A x‖_∞ < tol`.
pub(crate) fn pcg(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> CgOutcome {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut ap = vec![0.0; n];
    // restarts guard against drift between recursive and true residuals;
    // repeated restarts without progress mean the roundoff floor is above tol
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    while iterations < max_iter && stalled < 20 {
        a.mul(&x, &mut ap);
        let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, ax)| b - ax).collect();
        let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res < tol {
            return CgOutcome {
                x,
                residual: res,
                iterations,
                converged: true,
            };
        }
        if res < 0.5 * best {
            best = res;
            stalled = 0;
        } else {
            stalled += 1;
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            a.mul(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if r.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 0.25 * tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    let residual = a.residual_inf(&x, b);
    CgOutcome {
        converged: residual < tol,
        x,
        residual,
        iterations,
    }
}
