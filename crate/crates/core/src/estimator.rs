//! Residual a posteriori estimators and Dörfler marking.
//!
//! Local terms, with `h_T` the triangle diameter and `h_E` the edge length:
//!
//! ```text
//! eta1_T   = h_T^2   |pi_h f - (curl)^4 u_h - u_h|_T
//! eta2_T   = h_T^2   |f - pi_h f|_T
//! eta3_T   = h_T     |div u_h|_T
//! eta0_T   = h_T     |div (f - u_h)|_T
//! eta11_E  = h_E^1/2 |[[n_E x (curl)^2 u_h]]|_E
//! eta12_E  = h_E^3/2 |[[(curl)^3 u_h]]|_E
//! eta3_E   = h_E^1/2 |[[n_E . u_h]]|_E
//! eta0_E   = h_E^1/2 |[[n_E . (f - u_h)]]|_E
//! ```
//!
//! Jumps are `(trace from t_plus) - (trace from t_minus)`; edge terms exist on
//! interior edges only. In the eigen case `f = (lambda_h + 1) u_h`.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::element::DerivedField;
use crate::error::{Error, Result};
use crate::mesh::Edge;
use crate::polyquad::{edge_rule, triangle_rule, PolyBasis};
use crate::spaces::Discretization;

/// Right-hand side of the source problem.
#[derive(Clone, Copy)]
pub enum Load<'a> {
    /// `f = (lambda + 1) u_h`.
    Eigen { lambda: f64 },
    /// A general load with its divergence.
    Field {
        value: &'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync),
        div: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    },
}

impl Load<'_> {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            Load::Eigen { lambda } => Some(*lambda),
            Load::Field { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ElementTerms {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EdgeTerms {
    pub eta11: f64,
    pub eta12: f64,
    pub eta3: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEstimators {
    pub triangles: Vec<ElementTerms>,
    /// `None` on boundary edges.
    pub edges: Vec<Option<EdgeTerms>>,
}

/// How local terms are combined into the global `eta_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// One root-sum-square per group of terms, then summed:
    /// `eta1 = rss(eta1_T) + rss(eta11_E) + rss(eta12_E)`.
    #[default]
    Grouped,
    /// A single root-sum-square over all terms of each `eta_i`.
    Single,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub lambda: Option<f64>,
    /// `eta1 + (lambda + 1) eta3` in the eigen case.
    pub estimator: Option<f64>,
    /// `(eta1 + (lambda + 1) eta3)^2` in the eigen case.
    pub bound: Option<f64>,
    pub aggregation: Aggregation,
    #[serde(skip)]
    pub local: LocalEstimators,
}

fn check_full(disc: &Discretization, full: &[f64]) -> Result<()> {
    if full.len() != disc.dofmap.total {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector has length {} but the space has {} DOFs",
            full.len(),
            disc.dofmap.total
        )));
    }
    Ok(())
}

fn element_terms(disc: &Discretization, d: &DerivedField, t: usize, load: Load) -> Result<ElementTerms> {
    let tri = &disc.mesh.triangles[t];
    let verts = disc.mesh.triangle_points(t);
    let k = disc.k;
    let h = tri.diameter;
    let degree = match load {
        Load::Eigen { .. } => 2 * k,
        Load::Field { .. } => 2 * k + 6,
    };
    let (pts, wts) = triangle_rule(degree)?.map_to_triangle(&verts);
    let (mut r1, mut r2, mut r3, mut r0) = (0.0, 0.0, 0.0, 0.0);
    match load {
        Load::Eigen { lambda } => {
            for (p, w) in pts.iter().zip(&wts) {
                let u = d.value.eval(*p);
                let c4 = d.curl4.eval(*p);
                let div = d.div.eval(*p);
                let a = lambda * u[0] - c4[0];
                let b = lambda * u[1] - c4[1];
                r1 += w * (a * a + b * b);
                r3 += w * div * div;
                r0 += w * (lambda * div).powi(2);
            }
        }
        Load::Field { value, div } => {
            let basis = PolyBasis::new(&verts, k);
            let table = basis.eval(&pts, 0)?;
            let phi = table.get(0, 0);
            let f: Vec<[f64; 2]> = pts.iter().map(|p| value(*p)).collect();
            let coeffs: Vec<[f64; 2]> = phi
                .iter()
                .map(|row| {
                    let mut c = [0.0; 2];
                    for q in 0..pts.len() {
                        c[0] += wts[q] * f[q][0] * row[q];
                        c[1] += wts[q] * f[q][1] * row[q];
                    }
                    c
                })
                .collect();
            for (q, p) in pts.iter().enumerate() {
                let mut pf = [0.0; 2];
                for (c, row) in coeffs.iter().zip(phi) {
                    pf[0] += c[0] * row[q];
                    pf[1] += c[1] * row[q];
                }
                let u = d.value.eval(*p);
                let c4 = d.curl4.eval(*p);
                let du = d.div.eval(*p);
                let a = pf[0] - c4[0] - u[0];
                let b = pf[1] - c4[1] - u[1];
                r1 += wts[q] * (a * a + b * b);
                r2 += wts[q] * ((f[q][0] - pf[0]).powi(2) + (f[q][1] - pf[1]).powi(2));
                r3 += wts[q] * du * du;
                r0 += wts[q] * (div(*p) - du).powi(2);
            }
        }
    }
    Ok(ElementTerms {
        eta1: h * h * r1.max(0.0).sqrt(),
        eta2: h * h * r2.max(0.0).sqrt(),
        eta3: h * r3.max(0.0).sqrt(),
        eta0: h * r0.max(0.0).sqrt(),
    })
}

fn edge_terms(disc: &Discretization, dp: &DerivedField, dm: &DerivedField, e: &Edge, load: Load) -> Result<EdgeTerms> {
    let n = e.normal;
    let cross = |v: [f64; 2]| n[0] * v[1] - n[1] * v[0];
    let normal = |v: [f64; 2]| n[0] * v[0] + n[1] * v[1];
    let (pts, wts, _) = edge_rule(2 * disc.k)?.map_to_segment(disc.mesh.point(e.v0), disc.mesh.point(e.v1));
    let scale = match load {
        Load::Eigen { lambda } => lambda,
        Load::Field { .. } => 1.0,
    };
    let (mut s11, mut s12, mut s3, mut s0) = (0.0, 0.0, 0.0, 0.0);
    for (p, w) in pts.iter().zip(&wts) {
        let j11 = cross(dp.curl2.eval(*p)) - cross(dm.curl2.eval(*p));
        let j12 = dp.curl3.eval(*p) - dm.curl3.eval(*p);
        let j3 = normal(dp.value.eval(*p)) - normal(dm.value.eval(*p));
        // f is single valued in the field case, so [[n.(f - u)]] = -[[n.u]]
        let j0 = scale * j3;
        s11 += w * j11 * j11;
        s12 += w * j12 * j12;
        s3 += w * j3 * j3;
        s0 += w * j0 * j0;
    }
    let h = e.length;
    Ok(EdgeTerms {
        eta11: h.sqrt() * s11.max(0.0).sqrt(),
        eta12: h.powf(1.5) * s12.max(0.0).sqrt(),
        eta3: h.sqrt() * s3.max(0.0).sqrt(),
        eta0: h.sqrt() * s0.max(0.0).sqrt(),
    })
}

/// Element terms of triangle `t` for a full coefficient vector.
pub fn local_element_terms(disc: &Discretization, t: usize, full: &[f64], load: Load) -> Result<ElementTerms> {
    check_full(disc, full)?;
    if t >= disc.mesh.num_triangles() {
        return Err(Error::InvalidId {
            kind: "triangle",
            id: t,
            count: disc.mesh.num_triangles(),
        });
    }
    let d = DerivedField::new(disc.local_field(t, full));
    element_terms(disc, &d, t, load)
}

/// Edge terms of interior edge `e` for a full coefficient vector.
pub fn local_edge_terms(disc: &Discretization, e: usize, full: &[f64], load: Load) -> Result<EdgeTerms> {
    check_full(disc, full)?;
    let edge = disc.mesh.edges.get(e).ok_or(Error::InvalidId {
        kind: "edge",
        id: e,
        count: disc.mesh.num_edges(),
    })?;
    let Some(minus) = edge.t_minus else {
        return Err(Error::BoundaryEdge(e));
    };
    let dp = DerivedField::new(disc.local_field(edge.t_plus, full));
    let dm = DerivedField::new(disc.local_field(minus, full));
    edge_terms(disc, &dp, &dm, edge, load)
}

/// All local terms.
pub fn local_estimators(disc: &Discretization, full: &[f64], load: Load) -> Result<LocalEstimators> {
    check_full(disc, full)?;
    let fields: Vec<DerivedField> = (0..disc.mesh.num_triangles())
        .into_par_iter()
        .map(|t| DerivedField::new(disc.local_field(t, full)))
        .collect();
    let triangles = (0..disc.mesh.num_triangles())
        .into_par_iter()
        .map(|t| element_terms(disc, &fields[t], t, load))
        .collect::<Result<Vec<_>>>()?;
    let edges = disc
        .mesh
        .edges
        .par_iter()
        .map(|e| {
            match e.t_minus {
                Some(m) if !e.on_boundary => edge_terms(disc, &fields[e.t_plus], &fields[m], e, load).map(Some),
                _ => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalEstimators { triangles, edges })
}

fn rss(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

fn combine(groups: &[f64], sums_of_squares: &[f64], aggregation: Aggregation) -> f64 {
    match aggregation {
        Aggregation::Grouped => groups.iter().sum(),
        Aggregation::Single => sums_of_squares.iter().sum::<f64>().sqrt(),
    }
}

impl LocalEstimators {
    fn group(&self, f: impl Fn(&ElementTerms) -> f64) -> f64 {
        rss(self.triangles.iter().map(f))
    }

    fn edge_group(&self, f: impl Fn(&EdgeTerms) -> f64) -> f64 {
        rss(self.edges.iter().flatten().map(f))
    }

    pub fn aggregate(&self, aggregation: Aggregation) -> [f64; 4] {
        let t1 = self.group(|t| t.eta1);
        let t2 = self.group(|t| t.eta2);
        let t3 = self.group(|t| t.eta3);
        let t0 = self.group(|t| t.eta0);
        let e11 = self.edge_group(|e| e.eta11);
        let e12 = self.edge_group(|e| e.eta12);
        let e3 = self.edge_group(|e| e.eta3);
        let e0 = self.edge_group(|e| e.eta0);
        let eta0 = combine(&[t0, e0], &[t0 * t0, e0 * e0], aggregation);
        let eta1 = combine(&[t1, e11, e12], &[t1 * t1, e11 * e11, e12 * e12], aggregation);
        let eta2 = t2;
        let eta3 = combine(&[t3, e3], &[t3 * t3, e3 * e3], aggregation);
        [eta0, eta1, eta2, eta3]
    }
}

/// Global estimators of a discrete field given by its full coefficient
/// vector.
pub fn global_report(
    disc: &Discretization,
    full: &[f64],
    load: Load,
    aggregation: Aggregation,
) -> Result<EstimatorReport> {
    let local = local_estimators(disc, full, load)?;
    let [eta0, eta1, eta2, eta3] = local.aggregate(aggregation);
    let lambda = load.lambda();
    let estimator = lambda.map(|l| eta1 + (l + 1.0) * eta3);
    Ok(EstimatorReport {
        eta0,
        eta1,
        eta2,
        eta3,
        lambda,
        estimator,
        bound: estimator.map(|e| e * e),
        aggregation,
        local,
    })
}

/// Estimators of an eigenpair given by its free-DOF coefficients.
pub fn eigen_report(disc: &Discretization, free: &[f64], lambda: f64, aggregation: Aggregation) -> Result<EstimatorReport> {
    if free.len() != disc.num_free() {
        return Err(Error::InvalidArgument(format!(
            "eigenvector has length {} but the space has {} free DOFs",
            free.len(),
            disc.num_free()
        )));
    }
    global_report(disc, &disc.dofmap.expand(free), Load::Eigen { lambda }, aggregation)
}

impl EstimatorReport {
    /// Squared element indicators: element terms plus half of each adjacent
    /// edge term. In the eigen case the `eta3` terms carry the weight
    /// `lambda + 1` of the global estimator and `eta0`, `eta2` are left out.
    pub fn indicators(&self, disc: &Discretization) -> Vec<f64> {
        let w3 = self.lambda.map_or(1.0, |l| l + 1.0);
        let source = self.lambda.is_none();
        let mut ind: Vec<f64> = self
            .local
            .triangles
            .iter()
            .map(|t| {
                let mut s = t.eta1.powi(2) + (w3 * t.eta3).powi(2);
                if source {
                    s += t.eta2.powi(2) + t.eta0.powi(2);
                }
                s
            })
            .collect();
        for (e, terms) in disc.mesh.edges.iter().zip(&self.local.edges) {
            let Some(terms) = terms else { continue };
            let mut s = terms.eta11.powi(2) + terms.eta12.powi(2) + (w3 * terms.eta3).powi(2);
            if source {
                s += terms.eta0.powi(2);
            }
            ind[e.t_plus] += 0.5 * s;
            if let Some(m) = e.t_minus {
                ind[m] += 0.5 * s;
            }
        }
        ind
    }

    /// CSV with one row per triangle and one per interior edge: kind, id,
    /// midpoint, size (`h_T` or `h_E`), the entity's terms and, on triangles,
    /// the element indicator (square root of [`Self::indicators`]). Terms that
    /// do not exist for an entity are left empty.
    pub fn write_csv<W: Write>(&self, disc: &Discretization, mut w: W) -> Result<()> {
        let ind = self.indicators(disc);
        writeln!(w, "kind,id,x,y,size,eta1,eta2,eta3,eta0,eta11,eta12,indicator")?;
        for (t, terms) in self.local.triangles.iter().enumerate() {
            let c = disc.mesh.centroid(t);
            writeln!(
                w,
                "triangle,{t},{:.6},{:.6},{:.6e},{:.8e},{:.8e},{:.8e},{:.8e},,,{:.8e}",
                c[0],
                c[1],
                disc.mesh.triangles[t].diameter,
                terms.eta1,
                terms.eta2,
                terms.eta3,
                terms.eta0,
                ind[t].sqrt()
            )?;
        }
        for (e, terms) in disc.mesh.edges.iter().zip(&self.local.edges) {
            let Some(terms) = terms else { continue };
            let (a, b) = (disc.mesh.point(e.v0), disc.mesh.point(e.v1));
            writeln!(
                w,
                "edge,{},{:.6},{:.6},{:.6e},,,{:.8e},{:.8e},{:.8e},{:.8e},",
                e.id,
                0.5 * (a[0] + b[0]),
                0.5 * (a[1] + b[1]),
                e.length,
                terms.eta3,
                terms.eta0,
                terms.eta11,
                terms.eta12
            )?;
        }
        Ok(())
    }
}

/// Smallest set of triangles whose squared indicators sum to at least
/// `theta^2` of the total, taking larger indicators first and lower ids
/// first among equal ones.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<BTreeSet<usize>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("marking fraction {theta} must lie in (0, 1)")));
    }
    let total: f64 = indicators.iter().sum();
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let target = theta * theta * total;
    let mut marked = BTreeSet::new();
    let mut sum = 0.0;
    for t in order {
        if sum >= target || indicators[t] <= 0.0 {
            break;
        }
        sum += indicators[t];
        marked.insert(t);
    }
    Ok(marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::FnField;
    use crate::mesh::{make_domain, Domain};

    fn disc(n: usize) -> Discretization {
        Discretization::new(make_domain(Domain::Square, n).unwrap(), 4).unwrap()
    }

    fn full_of(d: &Discretization, value: fn([f64; 2]) -> [f64; 2], curl: fn([f64; 2]) -> f64) -> Vec<f64> {
        d.interpolate(&FnField { value, curl }).unwrap()
    }

    #[test]
    fn rotation_is_divergence_free() {
        let d = disc(2);
        let u = full_of(&d, |p| [-p[1], p[0]], |_| 2.0);
        for t in 0..d.mesh.num_triangles() {
            let e = local_element_terms(&d, t, &u, Load::Eigen { lambda: 3.0 }).unwrap();
            assert!(e.eta3 <= 1e-10);
        }
    }

    #[test]
    fn global_polynomial_has_no_jumps() {
        let d = disc(2);
        let u = full_of(
            &d,
            |p| [p[0].powi(3) * p[1] - p[1].powi(4), p[0] * p[0] * p[1] * p[1] + p[0].powi(4)],
            |p| 2.0 * p[0] * p[1] * p[1] + 4.0 * p[0].powi(3) - p[0].powi(3) + 4.0 * p[1].powi(3),
        );
        for e in d.mesh.interior_edges() {
            let t = local_edge_terms(&d, e.id, &u, Load::Eigen { lambda: 1.0 }).unwrap();
            assert!(t.eta11 < 1e-9 && t.eta12 < 1e-9 && t.eta3 < 1e-9, "{t:?}");
        }
        let b = d.mesh.edges.iter().find(|e| e.on_boundary).unwrap();
        assert!(matches!(
            local_edge_terms(&d, b.id, &u, Load::Eigen { lambda: 1.0 }),
            Err(Error::BoundaryEdge(_))
        ));
    }

    #[test]
    fn polynomial_load_is_its_own_projection() {
        let d = disc(2);
        let u = full_of(&d, |p| [p[1] * p[1], p[0]], |p| 1.0 - 2.0 * p[1]);
        let value = |p: [f64; 2]| [p[0] * p[1].powi(3), p[0].powi(4)];
        let div = |p: [f64; 2]| p[1].powi(3);
        let load = Load::Field { value: &value, div: &div };
        for t in 0..d.mesh.num_triangles() {
            assert!(local_element_terms(&d, t, &u, load).unwrap().eta2 <= 1e-12);
        }
    }

    #[test]
    fn marking() {
        let eq = vec![1.0; 10];
        assert_eq!(dorfler_mark(&eq, 0.5).unwrap().len(), 3);
        assert_eq!(dorfler_mark(&eq, 0.9).unwrap().len(), 9);
        let ind = [0.0, 4.0, 1.0, 4.0, 0.5];
        assert_eq!(dorfler_mark(&ind, 0.999999).unwrap(), BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(dorfler_mark(&ind, 0.1).unwrap(), BTreeSet::from([1]));
        assert!(dorfler_mark(&ind, 1.0).is_err());
        assert!(dorfler_mark(&ind, 0.0).is_err());
    }

    #[test]
    fn aggregation_variants() {
        let local = LocalEstimators {
            triangles: vec![
                ElementTerms { eta1: 3.0, eta2: 0.0, eta3: 1.0, eta0: 2.0 },
                ElementTerms { eta1: 4.0, eta2: 0.0, eta3: 0.0, eta0: 0.0 },
            ],
            edges: vec![None, Some(EdgeTerms { eta11: 12.0, eta12: 0.0, eta3: 1.0, eta0: 2.0 })],
        };
        let [e0, e1, e2, e3] = local.aggregate(Aggregation::Grouped);
        assert_eq!((e0, e1, e2, e3), (4.0, 17.0, 0.0, 2.0));
        let [_, s1, _, s3] = local.aggregate(Aggregation::Single);
        assert_eq!(s1, 13.0);
        assert!((s3 - 2f64.sqrt()).abs() < 1e-15);
    }
}
