//! Global spaces `V_h`, `V_h^0`, `S_h`, `S_h^0` and sparse assembly.
//!
//! Assembled operators are restricted to free DOFs: vector rows and columns
//! of `V_h^0`, scalar rows and columns of `S_h^0`.

mod dofmap;
mod scalar;
pub mod sparse;

use rayon::prelude::*;

pub use dofmap::DofMap;
pub use scalar::{LagrangeElement, ScalarSpace};
pub use sparse::{Combine, CsrMatrix};

use crate::element::{build_local, DofFunctional, ElementGeometry, LocalElement, VectorField};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::polyquad::poly::VecPoly;
use crate::polyquad::triangle_rule;

/// A mesh together with its degree-`k` element data and DOF numberings.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub k: usize,
    pub dofmap: DofMap,
    /// `S_h`: continuous `P_k`.
    pub scalar: ScalarSpace,
    /// Continuous `P_{k+1}`, whose gradients span the kernel of `(curl)^2`
    /// in `V_h^0` on simply connected domains.
    pub kernel_scalar: ScalarSpace,
    /// Shape functions of every triangle in local DOF order.
    pub shapes: Vec<Vec<VecPoly>>,
    /// Largest DOF-matrix condition number over all triangles.
    pub max_condition: f64,
}

impl Discretization {
    pub fn new(mesh: Mesh, k: usize) -> Result<Self> {
        crate::element::check_degree(k)?;
        let locals: Vec<(Vec<VecPoly>, f64)> = (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let el = build_local(&geometry(&mesh, t), k, t)?;
                Ok((el.shapes, el.condition))
            })
            .collect::<Result<_>>()?;
        let max_condition = locals.iter().fold(0.0f64, |m, l| m.max(l.1));
        let shapes = locals.into_iter().map(|l| l.0).collect();
        let dofmap = DofMap::new(&mesh, k);
        let scalar = ScalarSpace::new(&mesh, k);
        let kernel_scalar = ScalarSpace::new(&mesh, k + 1);
        Ok(Self {
            mesh,
            k,
            dofmap,
            scalar,
            kernel_scalar,
            shapes,
            max_condition,
        })
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        geometry(&self.mesh, t)
    }

    pub fn local_element(&self, t: usize) -> Result<LocalElement> {
        build_local(&self.geometry(t), self.k, t)
    }

    pub fn num_free(&self) -> usize {
        self.dofmap.num_free()
    }

    /// Global interpolant of `u` as a full coefficient vector (constrained
    /// DOFs included).
    pub fn interpolate(&self, u: &dyn VectorField) -> Result<Vec<f64>> {
        let local: Vec<Vec<f64>> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| Ok(self.local_element(t)?.interpolate(u)))
            .collect::<Result<_>>()?;
        let mut full = vec![0.0; self.dofmap.total];
        for (t, vals) in local.iter().enumerate() {
            for (g, v) in self.dofmap.cell_dofs[t].iter().zip(vals) {
                full[*g] = *v;
            }
        }
        Ok(full)
    }

    /// The discrete field on triangle `t` for a full coefficient vector.
    pub fn local_field(&self, t: usize, full: &[f64]) -> VecPoly {
        let mut u = VecPoly::zero(crate::polyquad::triangle_frame(&self.mesh.triangle_points(t)), self.k);
        for (g, s) in self.dofmap.cell_dofs[t].iter().zip(&self.shapes[t]) {
            if full[*g] != 0.0 {
                u.axpy(full[*g], s);
            }
        }
        u
    }
}

fn geometry(mesh: &Mesh, t: usize) -> ElementGeometry {
    ElementGeometry::new(mesh.triangle_points(t), mesh.edge_reversed(t))
}

/// Free-DOF operators of the mixed discretization.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    /// `((curl)^2 u, (curl)^2 v)`
    pub k2: CsrMatrix,
    /// `(u, v)`
    pub m: CsrMatrix,
    /// `C[j, i] = (phi_i, grad q_j)`, scalar rows in `S_h^0`.
    pub c: CsrMatrix,
    /// Discrete gradient `S_h^0 -> V_h^0`: column `j` interpolates `grad q_j`.
    pub g: CsrMatrix,
    /// Scalar stiffness `(grad q_i, grad q_j)` on `S_h^0`.
    pub l: CsrMatrix,
    /// Discrete gradient from the interior `P_{k+1}` space.
    pub kernel_g: CsrMatrix,
    /// Scalar stiffness of the interior `P_{k+1}` space.
    pub kernel_l: CsrMatrix,
}

struct ScalarLocal {
    /// scalar x vector
    c: Vec<f64>,
    l: Vec<f64>,
    /// vector x scalar, `None` where the entry is identically zero
    g: Vec<Option<f64>>,
}

struct LocalMatrices {
    k2: Vec<f64>,
    m: Vec<f64>,
    scalar: ScalarLocal,
    kernel: ScalarLocal,
}

fn inner(w: &[f64], a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x[0] * y[0] + x[1] * y[1])).sum()
}

fn scalar_local(
    el: &LocalElement,
    degree: usize,
    pts: &[[f64; 2]],
    w: &[f64],
    vals: &[Vec<[f64; 2]>],
    with_c: bool,
) -> ScalarLocal {
    let lag = LagrangeElement::new(&el.geometry, degree);
    let n = el.ndofs();
    let ns = lag.shapes.len();
    let grads: Vec<VecPoly> = lag.shapes.iter().map(|q| VecPoly::new(q.dx(), q.dy())).collect();
    let gvals: Vec<Vec<[f64; 2]>> = grads.iter().map(|g| pts.iter().map(|p| g.eval(*p)).collect()).collect();
    let mut c = Vec::new();
    if with_c {
        c = vec![0.0; ns * n];
        for j in 0..ns {
            for i in 0..n {
                c[j * n + i] = inner(w, &vals[i], &gvals[j]);
            }
        }
    }
    let mut l = vec![0.0; ns * ns];
    for i in 0..ns {
        for j in 0..ns {
            l[i * ns + j] = inner(w, &gvals[i], &gvals[j]);
        }
    }
    let mut g = vec![None; n * ns];
    for (j, grad) in grads.iter().enumerate() {
        let coeffs = el.interpolate(grad);
        for (i, (v, dof)) in coeffs.iter().zip(&el.dofs).enumerate() {
            // gradients are curl-free
            if !matches!(dof, DofFunctional::CurlPoint { .. }) {
                g[i * ns + j] = Some(*v);
            }
        }
    }
    ScalarLocal { c, l, g }
}

fn local_matrices(disc: &Discretization, t: usize) -> Result<LocalMatrices> {
    let k = disc.k;
    let el = disc.local_element(t)?;
    // exact for (k+1)-degree gradients against P_k fields
    let rule = triangle_rule(2 * k)?;
    let (pts, w) = rule.map_to_triangle(&el.geometry.vertices);
    let n = el.ndofs();

    let vals: Vec<Vec<[f64; 2]>> = el.shapes.iter().map(|s| pts.iter().map(|p| s.eval(*p)).collect()).collect();
    let c2: Vec<Vec<[f64; 2]>> = el
        .shapes
        .iter()
        .map(|s| {
            let c2 = s.curl().rot();
            pts.iter().map(|p| c2.eval(*p)).collect()
        })
        .collect();
    let mut k2 = vec![0.0; n * n];
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let a = inner(&w, &c2[i], &c2[j]);
            let b = inner(&w, &vals[i], &vals[j]);
            k2[i * n + j] = a;
            k2[j * n + i] = a;
            m[i * n + j] = b;
            m[j * n + i] = b;
        }
    }
    let scalar = scalar_local(&el, k, &pts, &w, &vals, true);
    let kernel = scalar_local(&el, k + 1, &pts, &w, &vals, false);
    Ok(LocalMatrices { k2, m, scalar, kernel })
}

fn scalar_rows(space: &ScalarSpace) -> Vec<Vec<Option<usize>>> {
    space
        .cell_dofs
        .iter()
        .map(|d| d.iter().map(|g| space.interior_index[*g]).collect())
        .collect()
}

/// Scatters the discrete gradient and scalar stiffness of one scalar space.
fn scatter_scalar<'a>(
    vrows: &[Vec<Option<usize>>],
    srows: &[Vec<Option<usize>>],
    (nf, ni): (usize, usize),
    locals: impl Iterator<Item = &'a ScalarLocal>,
) -> (CsrMatrix, CsrMatrix) {
    let ns = srows.first().map_or(0, |r| r.len());
    let mut l = CsrMatrix::from_cell_pattern(ni, ni, srows.iter().map(|r| (&r[..], &r[..])));
    let mut g = CsrMatrix::from_cell_pattern(nf, ni, vrows.iter().zip(srows).map(|(v, s)| (&v[..], &s[..])));
    for (t, loc) in locals.enumerate() {
        let (vr, sr) = (&vrows[t], &srows[t]);
        l.scatter_block(sr, sr, Combine::Sum, |i, j| loc.l[i * ns + j]);
        for (i, r) in vr.iter().enumerate() {
            for (j, s) in sr.iter().enumerate() {
                if let (Some(_), Some(_), Some(v)) = (r, s, loc.g[i * ns + j]) {
                    g.scatter_block(&[*r], &[*s], Combine::Overwrite, |_, _| v);
                }
            }
        }
    }
    // drop the curl-node slots of the pattern, which are never written
    g.prune(0.0);
    (g, l)
}

/// Assembles all free-DOF operators. Element computations run in parallel;
/// the scatter runs sequentially in element order, so the result is
/// independent of the thread count.
pub fn assemble(disc: &Discretization) -> Result<AssembledSystem> {
    let nt = disc.mesh.num_triangles();
    let locals: Vec<LocalMatrices> = (0..nt)
        .into_par_iter()
        .map(|t| local_matrices(disc, t))
        .collect::<Result<_>>()?;
    let vrows: Vec<Vec<Option<usize>>> = disc
        .dofmap
        .cell_dofs
        .iter()
        .map(|d| d.iter().map(|g| disc.dofmap.free_index[*g]).collect())
        .collect();
    let srows = scalar_rows(&disc.scalar);
    let nf = disc.dofmap.num_free();
    let ni = disc.scalar.num_interior();
    let n = vrows.first().map_or(0, |r| r.len());

    let mut k2 = CsrMatrix::from_cell_pattern(nf, nf, vrows.iter().map(|r| (&r[..], &r[..])));
    let mut m = k2.clone();
    let mut c = CsrMatrix::from_cell_pattern(ni, nf, srows.iter().zip(&vrows).map(|(s, v)| (&s[..], &v[..])));
    for (t, loc) in locals.iter().enumerate() {
        let (vr, sr) = (&vrows[t], &srows[t]);
        k2.scatter_block(vr, vr, Combine::Sum, |i, j| loc.k2[i * n + j]);
        m.scatter_block(vr, vr, Combine::Sum, |i, j| loc.m[i * n + j]);
        c.scatter_block(sr, vr, Combine::Sum, |i, j| loc.scalar.c[i * n + j]);
    }
    let (g, l) = scatter_scalar(&vrows, &srows, (nf, ni), locals.iter().map(|l| &l.scalar));
    let (kernel_g, kernel_l) = scatter_scalar(
        &vrows,
        &scalar_rows(&disc.kernel_scalar),
        (nf, disc.kernel_scalar.num_interior()),
        locals.iter().map(|l| &l.kernel),
    );
    Ok(AssembledSystem {
        k2,
        m,
        c,
        g,
        l,
        kernel_g,
        kernel_l,
    })
}

/// `(f, phi_i)` over the free DOFs, integrated with a rule of degree `2k+4`.
pub fn assemble_load(disc: &Discretization, f: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)) -> Result<Vec<f64>> {
    let rule = triangle_rule(2 * disc.k + 4)?;
    let locals: Vec<Vec<f64>> = (0..disc.mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let (pts, w) = rule.map_to_triangle(&disc.mesh.triangle_points(t));
            let fv: Vec<[f64; 2]> = pts.iter().map(|p| f(*p)).collect();
            disc.shapes[t]
                .iter()
                .map(|s| {
                    pts.iter()
                        .zip(&w)
                        .zip(&fv)
                        .map(|((p, w), f)| {
                            let v = s.eval(*p);
                            w * (v[0] * f[0] + v[1] * f[1])
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; disc.num_free()];
    for (t, vals) in locals.iter().enumerate() {
        for (g, v) in disc.dofmap.cell_dofs[t].iter().zip(vals) {
            if let Some(i) = disc.dofmap.free_index[*g] {
                out[i] += v;
            }
        }
    }
    Ok(out)
}
