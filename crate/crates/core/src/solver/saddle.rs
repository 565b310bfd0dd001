use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::Mat;
use faer::Side;

use crate::error::{Error, Result};
use crate::spaces::sparse::norm;
use crate::spaces::{AssembledSystem, CsrMatrix};

enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl Factor {
    fn cholesky(a: &CsrMatrix, context: &str) -> Result<Self> {
        let f = a.to_faer()?.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization {
            context: context.into(),
            reason: format!("{e:?}"),
        })?;
        Ok(Factor::Llt(f))
    }

    fn lu(a: &CsrMatrix, context: &str) -> Result<Self> {
        let f = a.to_faer()?.sp_lu().map_err(|e| Error::Factorization {
            context: context.into(),
            reason: format!("{e:?}"),
        })?;
        Ok(Factor::Lu(f))
    }

    fn solve_in_place(&self, b: &mut Mat<f64>) {
        match self {
            Factor::Llt(f) => f.solve_in_place(b.as_mut()),
            Factor::Lu(f) => f.solve_in_place(b.as_mut()),
        }
    }
}

pub(crate) fn to_mat(cols: &[Vec<f64>], n: usize) -> Mat<f64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub(crate) fn from_mat(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)]).collect()).collect()
}

/// Solver for the shifted saddle point system
///
/// ```text
/// [ A   C^T ] [u]   [f]
/// [ C   0   ] [p] = [0],     A = K2 + (1 - sigma) M.
/// ```
///
/// With `G` a discrete gradient, `C = G^T M`, `C G = L` and `K2 G = 0`, so
/// `A G = (1 - sigma) C^T` and the Schur complement is `L / (1 - sigma)`. The
/// system is solved exactly by `p = L^{-1} G^T f` and
/// `u = A^{-1} f - G p / (1 - sigma)`.
pub struct SaddleSolver {
    a: Factor,
    a_mat: CsrMatrix,
    l: Option<Factor>,
    alpha: f64,
    pub sigma: f64,
    g: CsrMatrix,
    nu: usize,
}

impl SaddleSolver {
    /// Constraint against the gradients of `S_h^0`.
    pub fn new(sys: &AssembledSystem, sigma: f64) -> Result<Self> {
        Self::with_gradient(sys, &sys.g, &sys.l, sigma)
    }

    /// Constraint against all discrete gradients in `V_h^0`, i.e. the kernel
    /// of `(curl)^2` on simply connected domains.
    pub fn kernel_free(sys: &AssembledSystem, sigma: f64) -> Result<Self> {
        Self::with_gradient(sys, &sys.kernel_g, &sys.kernel_l, sigma)
    }

    /// `g` interpolates the gradients of a scalar space into `V_h^0` and `l`
    /// is that space's stiffness matrix, so that `g^T M` is the constraint.
    pub fn with_gradient(sys: &AssembledSystem, g: &CsrMatrix, l: &CsrMatrix, sigma: f64) -> Result<Self> {
        let alpha = 1.0 - sigma;
        if !sigma.is_finite() || alpha.abs() < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "shift {sigma} makes the gradient block singular"
            )));
        }
        let a_mat = sys.k2.add(1.0, &sys.m, alpha);
        let a = if alpha > 0.0 {
            Factor::cholesky(&a_mat, "K2 + (1 - sigma) M")?
        } else {
            Factor::lu(&a_mat, "K2 + (1 - sigma) M")?
        };
        let l = if l.nrows > 0 {
            Some(Factor::cholesky(l, "scalar stiffness")?)
        } else {
            None
        };
        Ok(Self {
            a,
            a_mat,
            l,
            alpha,
            sigma,
            g: g.clone(),
            nu: sys.m.nrows,
        })
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut u = to_mat(rhs, self.nu);
        self.a.solve_in_place(&mut u);
        let mut u = from_mat(&u);
        self.refine(rhs, &mut u);
        let p = match &self.l {
            Some(l) => {
                let gtf: Vec<Vec<f64>> = rhs.iter().map(|f| self.g.matvec_t(f)).collect();
                let mut p = to_mat(&gtf, self.g.ncols);
                l.solve_in_place(&mut p);
                let p = from_mat(&p);
                for (uj, pj) in u.iter_mut().zip(&p) {
                    let gp = self.g.matvec(pj);
                    for (a, b) in uj.iter_mut().zip(&gp) {
                        *a -= b / self.alpha;
                    }
                }
                p
            }
            None => vec![Vec::new(); rhs.len()],
        };
        (u, p)
    }

    /// The discrete gradient `G p` of a multiplier.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.g.matvec(p)
    }

    /// M-orthogonal projection of `u` onto `G^T M u = 0`.
    pub fn project(&self, m: &CsrMatrix, u: &[f64]) -> Vec<f64> {
        let Some(l) = &self.l else {
            return u.to_vec();
        };
        let mut q = to_mat(&[self.g.matvec_t(&m.matvec(u))], self.g.ncols);
        l.solve_in_place(&mut q);
        let q: Vec<f64> = (0..q.nrows()).map(|i| q[(i, 0)]).collect();
        let gq = self.g.matvec(&q);
        u.iter().zip(&gq).map(|(a, b)| a - b).collect()
    }

    /// Removes from a dual vector `r` its multiplier part `C^T q`, with
    /// `q = L^{-1} G^T r`, leaving `r - M G L^{-1} G^T r`.
    pub fn remove_multiplier(&self, m: &CsrMatrix, r: &[f64]) -> Vec<f64> {
        let Some(l) = &self.l else {
            return r.to_vec();
        };
        let mut q = to_mat(&[self.g.matvec_t(r)], self.g.ncols);
        l.solve_in_place(&mut q);
        let q: Vec<f64> = (0..q.nrows()).map(|i| q[(i, 0)]).collect();
        let mgq = m.matvec(&self.g.matvec(&q));
        r.iter().zip(&mgq).map(|(a, b)| a - b).collect()
    }

    /// One step of iterative refinement against the assembled `A`.
    fn refine(&self, rhs: &[Vec<f64>], u: &mut [Vec<f64>]) {
        let r: Vec<Vec<f64>> = rhs
            .iter()
            .zip(u.iter())
            .map(|(f, x)| {
                let ax = self.a_mat.matvec(x);
                f.iter().zip(&ax).map(|(a, b)| a - b).collect()
            })
            .collect();
        let mut d = to_mat(&r, self.nu);
        self.a.solve_in_place(&mut d);
        for (j, x) in u.iter_mut().enumerate() {
            for (i, a) in x.iter_mut().enumerate() {
                *a += d[(i, j)];
            }
        }
    }

    pub fn solve(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut u, mut p) = self.solve_many(&[f.to_vec()]);
        (u.pop().unwrap(), p.pop().unwrap())
    }
}

/// Solution of the source problem with its block residuals.
#[derive(Debug, Clone)]
pub struct SourceSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// `|A u + C^T p - f| / |f|`
    pub momentum_residual: f64,
    /// `|C u| / |u|`
    pub constraint_residual: f64,
}

/// Solves `a(u, v) + b(v, p) = (f, v)`, `b(u, q) = 0` with
/// `a = ((curl)^2 ., (curl)^2 .) + (., .)` for a load over free DOFs.
pub fn solve_source(sys: &AssembledSystem, load: &[f64]) -> Result<SourceSolution> {
    let solver = SaddleSolver::new(sys, 0.0)?;
    let (u, p) = solver.solve(load);
    let au = sys.k2.matvec(&u);
    let mu = sys.m.matvec(&u);
    let ctp = sys.c.matvec_t(&p);
    let r: Vec<f64> = (0..u.len()).map(|i| au[i] + mu[i] + ctp[i] - load[i]).collect();
    let fnorm = norm(load);
    let unorm = norm(&u);
    Ok(SourceSolution {
        momentum_residual: if fnorm > 0.0 { norm(&r) / fnorm } else { norm(&r) },
        constraint_residual: if unorm > 0.0 { norm(&sys.c.matvec(&u)) / unorm } else { 0.0 },
        u,
        p,
    })
}
