//! The `H(curl^2)`-conforming triangle of full degree `k`.
//!
//! Local space: `P_k(T)^2`, dimension `(k+1)(k+2)`. Degrees of freedom, in
//! canonical order:
//!
//! 1. `curl u` at the three vertices;
//! 2. `curl u` at the `k-2` interior Gauss-Lobatto nodes of each edge;
//! 3. `(1/|e|) int_e (u . tau_e) L_j ds`, `j = 0..=k`, per edge, with Legendre
//!    polynomials `L_j` in the edge parameter;
//! 4. `(1/|T|) int_T u . q dx` for `q` in an L2(T)-orthonormal basis of the
//!    interior space [`DSpace`].
//!
//! Edge functionals always use the global edge orientation (lower to higher
//! vertex id), so two neighbours evaluate identical functionals on a shared
//! edge. Per edge the curl nodes fix the degree `k-1` trace of `curl u` and the
//! moments fix the degree `k` tangential trace; this is what makes the
//! assembled space conforming in `H(curl^2)`.

use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::polyquad::basis::triangle_frame;
use crate::polyquad::poly::{dim_p, monomials_at, Frame, Poly2, VecPoly};
use crate::polyquad::quadrature::{edge_rule, gauss_lobatto_interior, legendre, triangle_rule};
use crate::polyquad::{DSpace, PolyBasis};

pub const MIN_DEGREE: usize = 4;
pub const MAX_DEGREE: usize = 8;
/// Condition number above which the DOF matrix is declared singular.
pub const SINGULAR_CONDITION: f64 = 1e13;

pub fn check_degree(k: usize) -> Result<()> {
    if (MIN_DEGREE..=MAX_DEGREE).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree(k))
    }
}

/// Local space dimension `(k+1)(k+2)`.
pub const fn local_dim(k: usize) -> usize {
    (k + 1) * (k + 2)
}

/// A vector field that can be sampled pointwise together with its curl.
pub trait VectorField: Sync {
    fn value(&self, p: [f64; 2]) -> [f64; 2];
    fn curl(&self, p: [f64; 2]) -> f64;
}

impl VectorField for VecPoly {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        self.eval(p)
    }
    fn curl(&self, p: [f64; 2]) -> f64 {
        // cheap enough for the sizes used here
        VecPoly::curl(self).eval(p)
    }
}

/// A field given by closures for its value and its curl.
pub struct FnField<F, G> {
    pub value: F,
    pub curl: G,
}

impl<F, G> VectorField for FnField<F, G>
where
    F: Fn([f64; 2]) -> [f64; 2] + Sync,
    G: Fn([f64; 2]) -> f64 + Sync,
{
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        (self.value)(p)
    }
    fn curl(&self, p: [f64; 2]) -> f64 {
        (self.curl)(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurlNode {
    /// Local vertex index.
    Vertex(usize),
    /// Local edge index and node index along the global edge direction.
    Edge(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DofFunctional {
    CurlPoint {
        point: [f64; 2],
        owner: CurlNode,
    },
    EdgeMoment {
        edge: usize,
        test: usize,
        start: [f64; 2],
        end: [f64; 2],
    },
    InteriorMoment {
        test: usize,
        q: VecPoly,
    },
}

/// Geometry of one triangle as seen by the element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    /// Counterclockwise vertices.
    pub vertices: [[f64; 2]; 3],
    /// Whether local edge `i` (opposite vertex `i`, counterclockwise) runs
    /// against the global edge tangent.
    pub reversed: [bool; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [[f64; 2]; 3], reversed: [bool; 3]) -> Self {
        Self { vertices, reversed }
    }

    /// Start and end of local edge `i` in global orientation.
    pub fn edge_endpoints(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        let a = self.vertices[(i + 1) % 3];
        let b = self.vertices[(i + 2) % 3];
        if self.reversed[i] {
            (b, a)
        } else {
            (a, b)
        }
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }
}

/// DOF functionals of the degree-`k` element on `geom`, in canonical order.
pub fn dof_functionals(geom: &ElementGeometry, k: usize) -> Result<Vec<DofFunctional>> {
    if k < MIN_DEGREE {
        return Err(Error::UnsupportedDegree(k));
    }
    let mut out = Vec::with_capacity(local_dim(k));
    for (i, &point) in geom.vertices.iter().enumerate() {
        out.push(DofFunctional::CurlPoint {
            point,
            owner: CurlNode::Vertex(i),
        });
    }
    let nodes = gauss_lobatto_interior(k);
    for e in 0..3 {
        let (a, b) = geom.edge_endpoints(e);
        for (j, z) in nodes.iter().enumerate() {
            let t = 0.5 * (1.0 + z);
            out.push(DofFunctional::CurlPoint {
                point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                owner: CurlNode::Edge(e, j),
            });
        }
    }
    for e in 0..3 {
        let (start, end) = geom.edge_endpoints(e);
        for test in 0..=k {
            out.push(DofFunctional::EdgeMoment {
                edge: e,
                test,
                start,
                end,
            });
        }
    }
    let d = DSpace::new(triangle_frame(&geom.vertices), k)?;
    for (test, q) in orthonormalize(&d.members, &geom.vertices, k)?.into_iter().enumerate() {
        out.push(DofFunctional::InteriorMoment { test, q });
    }
    debug_assert_eq!(out.len(), local_dim(k));
    Ok(out)
}

/// L2(T)-orthonormal combinations of `members` (lower triangular, so the
/// span of every leading subset is kept).
fn orthonormalize(members: &[VecPoly], verts: &[[f64; 2]; 3], k: usize) -> Result<Vec<VecPoly>> {
    let rule = triangle_rule(2 * k)?;
    let (pts, w) = rule.map_to_triangle(verts);
    let mut out: Vec<VecPoly> = members.to_vec();
    for _ in 0..2 {
        // QR of the weighted samples keeps the condition number unsquared
        let n = out.len();
        let nq = pts.len();
        let mut a = DMatrix::<f64>::zeros(2 * nq, n);
        for (j, m) in out.iter().enumerate() {
            for (q, p) in pts.iter().enumerate() {
                let v = m.eval(*p);
                let s = w[q].sqrt();
                a[(2 * q, j)] = s * v[0];
                a[(2 * q + 1, j)] = s * v[1];
            }
        }
        let r = a.qr().r();
        let rinv = r
            .try_inverse()
            .ok_or(Error::Unisolvence { triangle: usize::MAX, condition: f64::INFINITY })?;
        let frame = out[0].frame();
        out = (0..n)
            .map(|i| {
                let mut v = VecPoly::zero(frame, k);
                for j in 0..=i {
                    v.axpy(rinv[(j, i)], &out[j]);
                }
                v
            })
            .collect();
    }
    Ok(out)
}

/// The DOF functionals as weights over field samples: every functional is
/// `sum_c wc * curl u(curl_points[c]) + sum_v wv . u(value_points[v])`.
#[derive(Debug, Clone)]
pub struct DofSampler {
    pub curl_points: Vec<[f64; 2]>,
    pub value_points: Vec<[f64; 2]>,
    /// `ndof x ncurl`
    pub curl_weights: DMatrix<f64>,
    /// `ndof x 2 nvalue`, columns interleaved as (x, y) per value point.
    pub value_weights: DMatrix<f64>,
}

impl DofSampler {
    fn new(geom: &ElementGeometry, dofs: &[DofFunctional], k: usize) -> Result<Self> {
        // exact for the polynomial case with room for smooth data
        let deg = 2 * k + 6;
        let erule = edge_rule(deg)?;
        let trule = triangle_rule(deg)?;
        let area = geom.area();
        let (tri_pts, tri_w) = trule.map_to_triangle(&geom.vertices);

        let curl_points: Vec<[f64; 2]> = dofs
            .iter()
            .filter_map(|d| match d {
                DofFunctional::CurlPoint { point, .. } => Some(*point),
                _ => None,
            })
            .collect();
        let mut value_points = Vec::new();
        let mut edge_offset = [0usize; 3];
        let mut edge_data = Vec::new();
        for (e, off) in edge_offset.iter_mut().enumerate() {
            let (a, b) = geom.edge_endpoints(e);
            let (pts, w, ts) = erule.map_to_segment(a, b);
            *off = value_points.len();
            value_points.extend_from_slice(&pts);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let tau = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            edge_data.push((w, ts, tau, len));
        }
        let tri_offset = value_points.len();
        value_points.extend_from_slice(&tri_pts);

        let n = dofs.len();
        let mut curl_weights = DMatrix::zeros(n, curl_points.len());
        let mut value_weights = DMatrix::zeros(n, 2 * value_points.len());
        let mut ci = 0;
        for (i, d) in dofs.iter().enumerate() {
            match d {
                DofFunctional::CurlPoint { .. } => {
                    curl_weights[(i, ci)] = 1.0;
                    ci += 1;
                }
                DofFunctional::EdgeMoment { edge, test, .. } => {
                    let (w, ts, tau, len) = &edge_data[*edge];
                    for (q, (wq, t)) in w.iter().zip(ts).enumerate() {
                        let c = wq * legendre(*test, 2.0 * t - 1.0).0 / len;
                        let col = 2 * (edge_offset[*edge] + q);
                        value_weights[(i, col)] += c * tau[0];
                        value_weights[(i, col + 1)] += c * tau[1];
                    }
                }
                DofFunctional::InteriorMoment { q, .. } => {
                    for (j, (p, wq)) in tri_pts.iter().zip(&tri_w).enumerate() {
                        let v = q.eval(*p);
                        let col = 2 * (tri_offset + j);
                        value_weights[(i, col)] += wq * v[0] / area;
                        value_weights[(i, col + 1)] += wq * v[1] / area;
                    }
                }
            }
        }
        Ok(Self {
            curl_points,
            value_points,
            curl_weights,
            value_weights,
        })
    }

    /// Applies every functional to `u`.
    pub fn apply(&self, u: &dyn VectorField) -> Vec<f64> {
        let curls: Vec<f64> = self.curl_points.iter().map(|p| u.curl(*p)).collect();
        let mut vals = Vec::with_capacity(2 * self.value_points.len());
        for p in &self.value_points {
            let v = u.value(*p);
            vals.push(v[0]);
            vals.push(v[1]);
        }
        let c = &self.curl_weights * nalgebra::DVector::from_vec(curls);
        let v = &self.value_weights * nalgebra::DVector::from_vec(vals);
        (c + v).iter().copied().collect()
    }
}

/// Differential quantities of a local field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Value,
    Curl,
    Curl2,
    Curl3,
    Curl4,
    Div,
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "value" => Quantity::Value,
            "curl" => Quantity::Curl,
            "curl2" => Quantity::Curl2,
            "curl3" => Quantity::Curl3,
            "curl4" => Quantity::Curl4,
            "div" => Quantity::Div,
            other => return Err(Error::InvalidArgument(format!("unknown quantity '{other}'"))),
        })
    }
}

/// Either a scalar or a vector polynomial.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldPoly {
    Scalar(Poly2),
    Vector(VecPoly),
}

impl FieldPoly {
    pub fn of(u: &VecPoly, q: Quantity) -> Self {
        match q {
            Quantity::Value => FieldPoly::Vector(u.clone()),
            Quantity::Curl => FieldPoly::Scalar(u.curl()),
            Quantity::Curl2 => FieldPoly::Vector(u.curl().rot()),
            Quantity::Curl3 => FieldPoly::Scalar(u.curl().rot().curl()),
            Quantity::Curl4 => FieldPoly::Vector(u.curl().rot().curl().rot()),
            Quantity::Div => FieldPoly::Scalar(u.div()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
}

/// Per-element dual basis of the degree-`k` element.
#[derive(Debug, Clone)]
pub struct LocalElement {
    pub triangle: usize,
    pub k: usize,
    pub geometry: ElementGeometry,
    pub frame: Frame,
    pub dofs: Vec<DofFunctional>,
    pub sampler: DofSampler,
    /// Shape functions: `dof_i(shapes[j]) = delta_ij`.
    pub shapes: Vec<VecPoly>,
    /// 2-norm condition number of the DOF matrix over the orthonormal basis.
    pub condition: f64,
}

/// Builds the local element on `geom`. `triangle` is only used for error
/// reporting.
pub fn build_local(geom: &ElementGeometry, k: usize, triangle: usize) -> Result<LocalElement> {
    check_degree(k)?;
    if geom.area() <= 0.0 {
        return Err(Error::Mesh(format!("triangle {triangle} is degenerate or clockwise")));
    }
    let dofs = dof_functionals(geom, k)?;
    let sampler = DofSampler::new(geom, &dofs, k)?;
    let basis = PolyBasis::new(&geom.vertices, k);
    let frame = basis.frame;
    let ns = basis.len();
    let n = 2 * ns;
    let nm = dim_p(k);

    // tabulate the vector basis (m, 0), (0, m) at the sample points
    let derivs_x: Vec<Poly2> = basis.members().iter().map(|m| m.dx()).collect();
    let derivs_y: Vec<Poly2> = basis.members().iter().map(|m| m.dy()).collect();
    let mut vmat = DMatrix::zeros(n, n);
    let ncurl = sampler.curl_points.len();
    let mut curl_tab = DMatrix::zeros(ncurl, n);
    for (c, p) in sampler.curl_points.iter().enumerate() {
        for m in 0..ns {
            // curl (m, 0) = -dm/dy ; curl (0, m) = dm/dx
            curl_tab[(c, 2 * m)] = -derivs_y[m].eval(*p);
            curl_tab[(c, 2 * m + 1)] = derivs_x[m].eval(*p);
        }
    }
    let nv = sampler.value_points.len();
    let mut val_tab = DMatrix::zeros(2 * nv, n);
    let mut mono = Vec::new();
    for (v, p) in sampler.value_points.iter().enumerate() {
        monomials_at(k, frame.local(*p), &mut mono);
        for m in 0..ns {
            let s: f64 = basis.coeffs.row(m).iter().zip(&mono).map(|(a, b)| a * b).sum();
            val_tab[(2 * v, 2 * m)] = s;
            val_tab[(2 * v + 1, 2 * m + 1)] = s;
        }
    }
    vmat += &sampler.curl_weights * &curl_tab;
    vmat += &sampler.value_weights * &val_tab;

    let sv = vmat.clone().singular_values();
    let smin = sv.min();
    let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::Unisolvence { triangle, condition });
    }
    let inv = vmat.lu().try_inverse().ok_or(Error::Unisolvence {
        triangle,
        condition: f64::INFINITY,
    })?;

    // shape j = sum_m inv[m, j] * basis field m
    let mut shapes = Vec::with_capacity(n);
    for j in 0..n {
        let mut cx = vec![0.0; nm];
        let mut cy = vec![0.0; nm];
        for m in 0..ns {
            let ax = inv[(2 * m, j)];
            let ay = inv[(2 * m + 1, j)];
            for (t, b) in basis.coeffs.row(m).iter().enumerate() {
                cx[t] += ax * b;
                cy[t] += ay * b;
            }
        }
        shapes.push(VecPoly::new(
            Poly2::from_coeffs(frame, k, cx),
            Poly2::from_coeffs(frame, k, cy),
        ));
    }
    Ok(LocalElement {
        triangle,
        k,
        geometry: *geom,
        frame,
        dofs,
        sampler,
        shapes,
        condition,
    })
}

impl LocalElement {
    pub fn ndofs(&self) -> usize {
        self.shapes.len()
    }

    /// Local interpolation coefficients: the DOF values of `u`.
    pub fn interpolate(&self, u: &dyn VectorField) -> Vec<f64> {
        self.sampler.apply(u)
    }

    /// `sum_j coeffs[j] * shapes[j]` as a polynomial.
    pub fn field(&self, coeffs: &[f64]) -> VecPoly {
        assert_eq!(coeffs.len(), self.ndofs());
        let mut u = VecPoly::zero(self.frame, self.k);
        for (c, s) in coeffs.iter().zip(&self.shapes) {
            if *c != 0.0 {
                u.axpy(*c, s);
            }
        }
        u
    }

    pub fn eval_field(&self, coeffs: &[f64], points: &[[f64; 2]], quantity: Quantity) -> FieldValues {
        match FieldPoly::of(&self.field(coeffs), quantity) {
            FieldPoly::Scalar(p) => FieldValues::Scalar(points.iter().map(|x| p.eval(*x)).collect()),
            FieldPoly::Vector(p) => FieldValues::Vector(points.iter().map(|x| p.eval(*x)).collect()),
        }
    }

    /// Largest `|dof_i(shape_j) - delta_ij|`.
    pub fn duality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, s) in self.shapes.iter().enumerate() {
            for (i, v) in self.sampler.apply(s).iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

/// Derived polynomials of a local field used by assembly and estimators.
#[derive(Debug, Clone)]
pub struct DerivedField {
    pub value: VecPoly,
    pub curl: Poly2,
    pub curl2: VecPoly,
    pub curl3: Poly2,
    pub curl4: VecPoly,
    pub div: Poly2,
}

impl DerivedField {
    pub fn new(u: VecPoly) -> Self {
        let curl = u.curl();
        let curl2 = curl.rot();
        let curl3 = curl2.curl();
        let curl4 = curl3.rot();
        let div = u.div();
        Self {
            value: u,
            curl,
            curl2,
            curl3,
            curl4,
            div,
        }
    }
}
