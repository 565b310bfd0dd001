//! Polynomial bases on a triangle: the L2-orthonormal basis of P_k, the
//! homogeneous spaces and the interior moment space used by the element.

use nalgebra::{DMatrix, DVector};

use super::poly::{dim_p, exponents, monomials_at, Frame, Poly2, VecPoly};
use super::quadrature::triangle_rule;
use crate::error::{Error, Result};

pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Local frame of a triangle: origin at the centroid, scale equal to the
/// longest edge.
pub fn triangle_frame(verts: &[[f64; 2]; 3]) -> Frame {
    let c = [
        (verts[0][0] + verts[1][0] + verts[2][0]) / 3.0,
        (verts[0][1] + verts[1][1] + verts[2][1]) / 3.0,
    ];
    let mut h: f64 = 0.0;
    for i in 0..3 {
        let j = (i + 1) % 3;
        h = h.max(((verts[i][0] - verts[j][0]).powi(2) + (verts[i][1] - verts[j][1]).powi(2)).sqrt());
    }
    Frame::new(c, h)
}

/// L2(T)-orthonormal basis of P_k(T) obtained by Gram-Schmidt (two Cholesky
/// passes) on the graded monomials of the triangle frame.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    pub degree: usize,
    pub frame: Frame,
    pub triangle: [[f64; 2]; 3],
    /// Row `i` holds the monomial coefficients of member `i`.
    pub coeffs: DMatrix<f64>,
}

/// Values and partial derivatives of every basis member at a set of points.
/// `values[mono_index(a, b)][member][point]` is d^a/dx^a d^b/dy^b.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub max_order: usize,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl BasisTable {
    pub fn get(&self, a: usize, b: usize) -> &Vec<Vec<f64>> {
        &self.values[super::poly::mono_index(a, b)]
    }
}

fn gram(frame: Frame, degree: usize, verts: &[[f64; 2]; 3], rows: &DMatrix<f64>) -> DMatrix<f64> {
    let rule = triangle_rule((2 * degree).max(1)).expect("degree within quadrature table");
    let (pts, wts) = rule.map_to_triangle(verts);
    let n = rows.nrows();
    let mut vals = DMatrix::zeros(n, pts.len());
    let mut mono = Vec::new();
    for (q, p) in pts.iter().enumerate() {
        monomials_at(degree, frame.local(*p), &mut mono);
        let m = DVector::from_column_slice(&mono);
        let v = rows * m;
        for i in 0..n {
            vals[(i, q)] = v[i];
        }
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..pts.len()).map(|q| wts[q] * vals[(i, q)] * vals[(j, q)]).sum();
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

impl PolyBasis {
    pub fn new(verts: &[[f64; 2]; 3], degree: usize) -> Self {
        let frame = triangle_frame(verts);
        let n = dim_p(degree);
        let rule = triangle_rule((2 * degree).max(1)).expect("degree within quadrature table");
        let (pts, wts) = rule.map_to_triangle(verts);
        let mut mono_tab = DMatrix::zeros(pts.len(), n);
        let mut mono = Vec::new();
        for (q, p) in pts.iter().enumerate() {
            monomials_at(degree, frame.local(*p), &mut mono);
            for (j, m) in mono.iter().enumerate() {
                mono_tab[(q, j)] = wts[q].sqrt() * m;
            }
        }
        // QR of the weighted value table, repeated once: the rows of R^{-T}
        // are orthonormal without squaring the monomial condition number
        let mut rows = DMatrix::<f64>::identity(n, n);
        for _ in 0..2 {
            let a = &mono_tab * rows.transpose();
            let r = a.qr().r();
            let rinv = r.try_inverse().expect("monomials are linearly independent on a triangle");
            rows = rinv.transpose() * rows;
        }
        for i in 0..n {
            if rows[(i, i)] < 0.0 {
                rows.row_mut(i).neg_mut();
            }
        }
        Self {
            degree,
            frame,
            triangle: *verts,
            coeffs: rows,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn member(&self, i: usize) -> Poly2 {
        Poly2::from_coeffs(self.frame, self.degree, self.coeffs.row(i).iter().copied().collect())
    }

    pub fn members(&self) -> Vec<Poly2> {
        (0..self.len()).map(|i| self.member(i)).collect()
    }

    /// Exact values and derivatives of all members up to `max_order`.
    pub fn eval(&self, points: &[[f64; 2]], max_order: usize) -> Result<BasisTable> {
        if max_order > MAX_DERIVATIVE_ORDER {
            return Err(Error::DerivativeOrder(max_order));
        }
        let members = self.members();
        let mut values = Vec::with_capacity(dim_p(max_order));
        for (a, b) in exponents(max_order) {
            let derived: Vec<Poly2> = members.iter().map(|m| m.derivative(a, b)).collect();
            values.push(
                derived
                    .iter()
                    .map(|d| points.iter().map(|p| d.eval(*p)).collect())
                    .collect(),
            );
        }
        Ok(BasisTable { max_order, values })
    }

    /// Gram matrix of the members under the L2(T) inner product.
    pub fn gram(&self) -> DMatrix<f64> {
        gram(self.frame, self.degree, &self.triangle, &self.coeffs)
    }
}

/// Homogeneous polynomials of degree `d` in the frame coordinates.
#[derive(Debug, Clone)]
pub struct HomogeneousBasis {
    pub degree: usize,
    pub members: Vec<Poly2>,
}

impl HomogeneousBasis {
    pub fn new(frame: Frame, degree: usize) -> Self {
        let members = (0..=degree)
            .map(|b| Poly2::monomial(frame, degree - b, b))
            .collect();
        Self { degree, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Test space for the interior moments:
/// `P_{k-5}^2 + Pt_{k-5} x + Pt_{k-4} x + Pt_{k-3} x + Pt_{k-2} x` for k >= 5,
/// and `Pt_0 x + Pt_1 x + Pt_2 x` for k = 4, where `x` is the frame position.
#[derive(Debug, Clone)]
pub struct DSpace {
    pub k: usize,
    pub members: Vec<VecPoly>,
}

impl DSpace {
    pub fn new(frame: Frame, k: usize) -> Result<Self> {
        if k < 4 {
            return Err(Error::UnsupportedDegree(k));
        }
        let xi = Poly2::monomial(frame, 1, 0);
        let eta = Poly2::monomial(frame, 0, 1);
        let mut members = Vec::new();
        let homogeneous_degrees: Vec<usize> = if k == 4 {
            vec![0, 1, 2]
        } else {
            for (a, b) in exponents(k - 5) {
                let m = Poly2::monomial(frame, a, b);
                members.push(VecPoly::new(m.clone(), Poly2::zero(frame, 0)));
                members.push(VecPoly::new(Poly2::zero(frame, 0), m));
            }
            (k - 5..=k - 2).collect()
        };
        for d in homogeneous_degrees {
            for p in HomogeneousBasis::new(frame, d).members {
                members.push(VecPoly::new(&p * &xi, &p * &eta));
            }
        }
        Ok(Self { k, members })
    }

    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn expected_dim(k: usize) -> usize {
        if k == 4 {
            6
        } else {
            (k - 1) * (k - 2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyquad::poly::mono_index;

    const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn orthonormal_gram_is_identity() {
        let tri = [[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]];
        for k in 1..=8 {
            let b = PolyBasis::new(&tri, k);
            assert_eq!(b.len(), (k + 1) * (k + 2) / 2);
            let g = b.gram();
            let err = (g - DMatrix::identity(b.len(), b.len())).abs().max();
            assert!(err < 1e-10, "k={k}: {err}");
        }
    }

    #[test]
    fn spans_p_k() {
        // Vandermonde at generic points is nonsingular
        let b = PolyBasis::new(&REF, 4);
        let pts: Vec<[f64; 2]> = (0..15)
            .map(|i| {
                let t = i as f64 * 0.37;
                [0.5 * (1.0 + t.sin()) * 0.6, 0.3 * (1.0 + (1.7 * t).cos()) * 0.5]
            })
            .collect();
        let tab = b.eval(&pts, 0).unwrap();
        let v = DMatrix::from_fn(15, 15, |i, j| tab.get(0, 0)[j][i]);
        let sv = v.singular_values();
        assert!(sv.min() > 1e-8 * sv.max());
    }

    #[test]
    fn derivative_tables() {
        let b = PolyBasis::new(&REF, 4);
        let pts = [[0.2, 0.3], [0.5, 0.1]];
        let tab = b.eval(&pts, 4).unwrap();
        // member 0 is the constant
        for p in 0..2 {
            assert!(tab.get(1, 0)[0][p].abs() < 1e-12);
            assert!(tab.get(0, 1)[0][p].abs() < 1e-12);
        }
        // degree-one members have zero Laplacian
        for m in 1..3 {
            for p in 0..2 {
                let lap = tab.get(2, 0)[m][p] + tab.get(0, 2)[m][p];
                assert!(lap.abs() < 1e-10);
            }
        }
        assert!(b.eval(&pts, 5).is_err());
        assert_eq!(tab.values.len(), mono_index(0, 4) + 1);
    }

    #[test]
    fn homogeneous_scaling() {
        let f = Frame::UNIT;
        for d in 0..6 {
            let h = HomogeneousBasis::new(f, d);
            assert_eq!(h.len(), d + 1);
            for m in &h.members {
                let (x, y) = (0.31, -0.77);
                let a = m.eval([2.0 * x, 2.0 * y]);
                let b = 2f64.powi(d as i32) * m.eval([x, y]);
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn d_space_dimensions_and_independence() {
        let frame = triangle_frame(&REF);
        assert!(DSpace::new(frame, 3).is_err());
        for k in 4..=8 {
            let d = DSpace::new(frame, k).unwrap();
            assert_eq!(d.dim(), DSpace::expected_dim(k));
            // Gram rank check
            let rule = triangle_rule(2 * k).unwrap();
            let (pts, w) = rule.map_to_triangle(&REF);
            let n = d.dim();
            let g = DMatrix::<f64>::from_fn(n, n, |i, j| {
                pts.iter()
                    .zip(&w)
                    .map(|(p, w)| {
                        let a = d.members[i].eval(*p);
                        let b = d.members[j].eval(*p);
                        w * (a[0] * b[0] + a[1] * b[1])
                    })
                    .sum()
            });
            // scale to unit diagonal before the rank check
            let s = DMatrix::from_fn(n, n, |i, j| g[(i, j)] / (g[(i, i)] * g[(j, j)]).sqrt());
            let sv = s.singular_values();
            assert!(sv.min() > 1e-10 * sv.max(), "k={k}: {:e}", sv.min() / sv.max());
        }
        assert_eq!(DSpace::expected_dim(5), 12);
    }
}
