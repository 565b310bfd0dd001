//! Gauss rules on the unit interval and collapsed (conical product) rules on
//! triangles. All rules have positive weights and interior points.

use crate::error::{Error, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 25;
pub const MAX_EDGE_DEGREE: usize = 49;

/// Quadrature on the reference simplex of dimension 1 or 2.
///
/// Points are barycentric: `[1 - t, t]` on an interval, `[l0, l1, l2]` on a
/// triangle. Weights are normalized so that they sum to the measure of the
/// reference element (1 for the unit interval, 1/2 for the unit triangle).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights of a triangle rule mapped onto `verts`.
    pub fn map_to_triangle(&self, verts: &[[f64; 2]; 3]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let area2 = ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
            - (verts[2][0] - verts[0][0]) * (verts[1][1] - verts[0][1]))
            .abs();
        let pts = self
            .points
            .iter()
            .map(|b| {
                [
                    b[0] * verts[0][0] + b[1] * verts[1][0] + b[2] * verts[2][0],
                    b[0] * verts[0][1] + b[1] * verts[1][1] + b[2] * verts[2][1],
                ]
            })
            .collect();
        let w = self.weights.iter().map(|w| w * area2).collect();
        (pts, w)
    }

    /// Physical points, weights (in arclength) and parameters `t` of an edge
    /// rule mapped onto the segment `a -> b`.
    pub fn map_to_segment(&self, a: [f64; 2], b: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>, Vec<f64>) {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let mut pts = Vec::with_capacity(self.len());
        let mut ts = Vec::with_capacity(self.len());
        for p in &self.points {
            let t = p[1];
            pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            ts.push(t);
        }
        let w = self.weights.iter().map(|w| w * len).collect();
        (pts, w, ts)
    }
}

/// Legendre polynomial P_n and its derivative at x.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint value of P_n'
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// n-point Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Interior Gauss-Lobatto nodes of the `n`-point rule on [-1, 1] (the roots of
/// P'_{n-1}), ascending. Returns `n - 2` values.
pub fn gauss_lobatto_interior(n: usize) -> Vec<f64> {
    if n < 3 {
        return Vec::new();
    }
    let m = n - 1;
    let mf = m as f64;
    let mut out = Vec::with_capacity(n - 2);
    for j in 1..m {
        let mut z = -(std::f64::consts::PI * j as f64 / mf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, z);
            // (1 - z^2) P'' = 2 z P' - m(m+1) P
            let ddp = (2.0 * z * dp - mf * (mf + 1.0) * p) / (1.0 - z * z);
            let dz = dp / ddp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        out.push(z);
    }
    out
}

/// Gauss rule on [0, 1] exact for polynomials of degree `exact_degree`.
pub fn edge_rule(exact_degree: usize) -> Result<QuadratureRule> {
    if exact_degree > MAX_EDGE_DEGREE {
        return Err(Error::QuadratureDegree(exact_degree));
    }
    let n = exact_degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let points = x
        .iter()
        .map(|&xi| {
            let t = 0.5 * (xi + 1.0);
            vec![1.0 - t, t]
        })
        .collect();
    Ok(QuadratureRule {
        points,
        weights: w.iter().map(|wi| 0.5 * wi).collect(),
        exact_degree,
    })
}

/// Conical-product rule on the unit triangle exact to `exact_degree`.
pub fn triangle_rule(exact_degree: usize) -> Result<QuadratureRule> {
    if exact_degree == 0 || exact_degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::QuadratureDegree(exact_degree));
    }
    // x = u, y = v (1 - u); the Jacobian (1 - u) raises the degree in u by one
    let nu = (exact_degree + 2).div_ceil(2);
    let nv = (exact_degree + 1).div_ceil(2);
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (a, wa) in xu.iter().zip(&wu) {
        let u = 0.5 * (a + 1.0);
        for (b, wb) in xv.iter().zip(&wv) {
            let v = 0.5 * (b + 1.0);
            let x = u;
            let y = v * (1.0 - u);
            points.push(vec![1.0 - x - y, x, y]);
            weights.push(0.25 * wa * wb * (1.0 - u));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exact_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    // closed form of the monomial integral over the unit triangle
    fn monomial_exact(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn integrate(rule: &QuadratureRule, a: i32, b: i32) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1].powi(a) * p[2].powi(b))
            .sum()
    }

    #[test]
    fn reference_triangle_values() {
        let r = triangle_rule(1).unwrap();
        assert!((integrate(&r, 0, 0) - 0.5).abs() < 1e-15);
        assert!((integrate(&r, 1, 0) - 1.0 / 6.0).abs() < 1e-15);
        let r = triangle_rule(8).unwrap();
        assert!((integrate(&r, 4, 4) - 1.0 / 6300.0).abs() < 1e-16);
    }

    #[test]
    fn triangle_exactness_sweep() {
        for deg in 1..=MAX_TRIANGLE_DEGREE {
            let r = triangle_rule(deg).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for t in 0..=deg as u32 {
                for b in 0..=t {
                    let a = t - b;
                    let exact = monomial_exact(a, b);
                    let got = integrate(&r, a as i32, b as i32);
                    assert!(
                        ((got - exact) / exact).abs() < 1e-13,
                        "deg {deg} monomial x^{a} y^{b}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_rules() {
        let r = edge_rule(0).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        let r = edge_rule(2).unwrap();
        let x2: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[1] * p[1]).sum();
        assert!((x2 - 1.0 / 3.0).abs() < 1e-15);
        let r = edge_rule(9).unwrap();
        let x9: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[1].powi(9)).sum();
        assert!((x9 - 0.1).abs() < 1e-14);
        for deg in 0..=MAX_EDGE_DEGREE {
            let r = edge_rule(deg).unwrap();
            let got: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[1].powi(deg as i32)).sum();
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "degree {deg}");
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert!(triangle_rule(0).is_err());
        assert!(triangle_rule(26).is_err());
        assert!(edge_rule(50).is_err());
    }

    #[test]
    fn lobatto_nodes_are_symmetric_roots() {
        for n in 3..10 {
            let z = gauss_lobatto_interior(n);
            assert_eq!(z.len(), n - 2);
            for (a, b) in z.iter().zip(z.iter().rev()) {
                assert!((a + b).abs() < 1e-14);
            }
            for &x in &z {
                assert!(legendre(n - 1, x).1.abs() < 1e-11);
            }
        }
    }
}
