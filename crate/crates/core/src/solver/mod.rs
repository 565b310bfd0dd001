//! Source and eigenvalue solvers for the mixed discretization, and
//! convergence tables.

mod eigen;
mod rates;
mod saddle;

pub use eigen::{solve_eigs, EigenOptions, EigenPair, EigenResult, ROUNDING_FACTOR};
pub use rates::{rate_rows, write_rate_csv, RateRow};
pub use saddle::{solve_source, SaddleSolver, SourceSolution};

use crate::error::Result;
use crate::mesh::{make_domain_with, Diagonal, Domain, Mesh};
use crate::spaces::{assemble, Discretization};

/// Builds, assembles and solves the eigenproblem on a structured mesh of
/// `domain` with cell width `1/n`. The harmonic fields of holed domains are
/// discarded automatically.
pub fn eigs_on_domain(
    domain: Domain,
    n: usize,
    k: usize,
    diagonal: Diagonal,
    opts: &EigenOptions,
) -> Result<(Discretization, EigenResult)> {
    eigs_on_mesh(make_domain_with(domain, n, diagonal)?, k, opts)
}

/// As [`eigs_on_domain`] for an arbitrary mesh.
pub fn eigs_on_mesh(mesh: Mesh, k: usize, opts: &EigenOptions) -> Result<(Discretization, EigenResult)> {
    let mut opts = opts.clone();
    opts.kernel_dim = mesh.holes();
    let disc = Discretization::new(mesh, k)?;
    let sys = assemble(&disc)?;
    let res = solve_eigs(&sys, &opts)?;
    Ok((disc, res))
}

/// Eigenvalues on successively halved meshes with the error and order
/// columns of [`rate_rows`].
pub fn rate_table(
    domain: Domain,
    k: usize,
    levels: &[usize],
    diagonal: Diagonal,
    opts: &EigenOptions,
) -> Result<Vec<RateRow>> {
    if levels.len() < 3 {
        return Err(crate::Error::InvalidArgument("a rate table needs at least 3 levels".into()));
    }
    let lambdas = levels
        .iter()
        .map(|&n| Ok(eigs_on_domain(domain, n, k, diagonal, opts)?.1.lambdas()))
        .collect::<Result<Vec<_>>>()?;
    rate_rows(levels, &lambdas)
}
