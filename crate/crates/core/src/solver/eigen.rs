use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::saddle::SaddleSolver;
use crate::error::{Error, Result};
use crate::spaces::sparse::{dot, norm};
use crate::spaces::{AssembledSystem, CsrMatrix};

/// Pairs whose residual is within this multiple of [`EigenPair::rounding`]
/// are accepted even above `residual_tol`.
pub const ROUNDING_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct EigenOptions {
    pub nev: usize,
    /// Relative eigenvalue change between iterations.
    pub tol: f64,
    /// Bound on the relative residual of every returned pair, relaxed to
    /// [`ROUNDING_FACTOR`] times the pair's rounding level where that is
    /// larger.
    pub residual_tol: f64,
    /// Shift of the `a`-form: the iteration inverts `K2 + (1 - shift) M`.
    pub shift: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Number of discrete harmonic fields (`lambda = 0`), one per hole of the
    /// domain; these are computed and discarded.
    pub kernel_dim: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            nev: 5,
            tol: 1e-10,
            residual_tol: 1e-10,
            shift: 0.0,
            max_iterations: 500,
            seed: 20,
            kernel_dim: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda: f64,
    /// Free-DOF coefficients, M-normalized.
    #[serde(skip)]
    pub vector: Vec<f64>,
    /// `|K2 u - lambda M u - C^T q| / (lambda |M u|)` with the multiplier term
    /// `C^T q` of the gradient constraint removed.
    pub residual: f64,
    /// Unit roundoff times `| |K2| |u| + lambda |M| |u| | / (lambda |M u|)`:
    /// the residual level that rounding `u` to floating point already causes.
    pub rounding: f64,
    /// `|C u| / |u|`
    pub constraint: f64,
    /// `|G p|_M / (lambda + 1)` for the multiplier `p` of the source solve with
    /// load `(lambda + 1) M u`; zero up to rounding.
    pub pressure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub pairs: Vec<EigenPair>,
    pub shift: f64,
    pub iterations: usize,
    /// Eigenvalues of the discarded harmonic fields.
    pub discarded: Vec<f64>,
}

impl EigenResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

/// M-orthonormalizes `v` in place (two Gram-Schmidt passes); drops vectors
/// that become numerically dependent.
fn m_orthonormalize(m: &CsrMatrix, v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(v.len());
    let mut mq: Vec<Vec<f64>> = Vec::with_capacity(v.len());
    for mut x in v {
        let n0 = dot(&x, &m.matvec(&x)).sqrt();
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(&mq) {
                let c = dot(mqi, &x);
                for (a, b) in x.iter_mut().zip(qi) {
                    *a -= c * b;
                }
            }
        }
        let mx = m.matvec(&x);
        let nx = dot(&x, &mx).sqrt();
        if nx > 1e-10 * n0 && nx > 0.0 {
            x.iter_mut().for_each(|a| *a /= nx);
            q.push(x);
            mq.push(mx.into_iter().map(|a| a / nx).collect());
        }
    }
    q
}

/// Smallest positive eigenpairs of `K2 u = lambda M u` on the discretely
/// divergence-free subspace `C u = 0`, by shift-invert subspace iteration
/// with Rayleigh-Ritz projection.
///
/// For full `P_k` fields the curl-free part of `V_h^0` is the gradient of the
/// continuous `P_{k+1}` space, which is larger than the gradient of `S_h^0`;
/// on `C u = 0` it leaves eigenvalues `lambda = 0`. The iteration therefore
/// constrains against the `P_{k+1}` gradients. This removes exactly those
/// zero modes, and every iterate still satisfies `C u = 0`.
pub fn solve_eigs(sys: &AssembledSystem, opts: &EigenOptions) -> Result<EigenResult> {
    if opts.nev == 0 {
        return Err(Error::InvalidArgument("nev must be at least 1".into()));
    }
    let n = sys.m.nrows;
    let want = opts.nev + opts.kernel_dim;
    let block = (2 * want).max(want + 5).min(n);
    if want > block {
        return Err(Error::InvalidArgument(format!(
            "requested {want} eigenpairs but the constrained space has at most {n} free DOFs"
        )));
    }
    let solver = SaddleSolver::kernel_free(sys, opts.shift)?;
    let source = SaddleSolver::new(sys, opts.shift)?;
    let apply = |x: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let rhs: Vec<Vec<f64>> = x.iter().map(|v| sys.m.matvec(v)).collect();
        solver.solve_many(&rhs).0
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut x = m_orthonormalize(&sys.m, apply(&start));
    let mut previous: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let y = m_orthonormalize(&sys.m, apply(&x));
        let ky: Vec<Vec<f64>> = y.iter().map(|v| sys.k2.matvec(v)).collect();
        let b = y.len();
        let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let s = eig.eigenvectors[(r, c)];
                    for (a, b) in v.iter_mut().zip(yr) {
                        *a += s * b;
                    }
                }
                v
            })
            .collect();

        let target = &theta[opts.kernel_dim..want];
        if let Some(prev) = &previous {
            change = target
                .iter()
                .zip(&prev[opts.kernel_dim..want])
                .map(|(a, b)| ((a - b) / a.abs().max(f64::MIN_POSITIVE)).abs())
                .fold(0.0, f64::max);
        }
        previous = Some(theta.clone());
        if change <= opts.tol {
            let pairs: Vec<EigenPair> = (opts.kernel_dim..want)
                .map(|i| pair(sys, &solver, &source, &x[i], theta[i]))
                .collect();
            if pairs.iter().all(|p| p.residual <= opts.residual_tol.max(ROUNDING_FACTOR * p.rounding)) {
                return Ok(EigenResult {
                    pairs,
                    shift: opts.shift,
                    iterations: it,
                    discarded: theta[..opts.kernel_dim].to_vec(),
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        change,
    })
}

/// Flips `u` so that its entry of largest magnitude (first on ties) is
/// positive.
fn normalize_sign(u: &mut [f64]) {
    let mut best = 0;
    for (i, a) in u.iter().enumerate() {
        if a.abs() > u[best].abs() {
            best = i;
        }
    }
    if u.get(best).is_some_and(|&a| a < 0.0) {
        u.iter_mut().for_each(|a| *a = -*a);
    }
}

fn pair(sys: &AssembledSystem, iteration: &SaddleSolver, solver: &SaddleSolver, u: &[f64], lambda: f64) -> EigenPair {
    let mut u = iteration.project(&sys.m, u);
    let nu = dot(&u, &sys.m.matvec(&u)).sqrt();
    u.iter_mut().for_each(|a| *a /= nu);
    normalize_sign(&mut u);
    let u = &u[..];
    let ku = sys.k2.matvec(u);
    let mu = sys.m.matvec(u);
    let r: Vec<f64> = ku.iter().zip(&mu).map(|(k, m)| k - lambda * m).collect();
    let r = iteration.remove_multiplier(&sys.m, &r);
    let residual = norm(&r) / (lambda.abs() * norm(&mu));
    let au = sys.k2.abs_matvec(u);
    let am = sys.m.abs_matvec(u);
    let bound: Vec<f64> = au.iter().zip(&am).map(|(k, m)| k + lambda.abs() * m).collect();
    let rounding = f64::EPSILON * norm(&bound) / (lambda.abs() * norm(&mu));
    let constraint = norm(&sys.c.matvec(u)) / norm(u);
    let scale = lambda + 1.0 - solver.sigma;
    let load: Vec<f64> = mu.iter().map(|m| scale * m).collect();
    let (_, p) = solver.solve(&load);
    let gp = solver.gradient(&p);
    let pressure = dot(&gp, &sys.m.matvec(&gp)).sqrt() / scale.abs();
    EigenPair {
        lambda,
        vector: u.to_vec(),
        residual,
        rounding,
        constraint,
        pressure,
    }
}
