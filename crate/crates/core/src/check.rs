//! Self-checks of the element family: unisolvence, polynomial reproduction,
//! inter-element conformity and interpolation orders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::element::{build_local, check_degree, DerivedField, ElementGeometry, FnField, VectorField};
use crate::error::Result;
use crate::mesh::{make_domain_with, Diagonal, Domain};
use crate::polyquad::{triangle_frame, triangle_rule, Poly2, VecPoly};
use crate::spaces::Discretization;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const CONDITION_LIMIT: f64 = 1e12;
pub const REPRODUCTION_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-8;
pub const ORDER_TOL: f64 = 0.2;

fn random_triangle(rng: &mut ChaCha8Rng) -> ElementGeometry {
    loop {
        let v: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.random::<f64>(), rng.random::<f64>()]);
        let g = ElementGeometry::new(v, [rng.random(), rng.random(), rng.random()]);
        if g.area() > 0.05 {
            return g;
        }
        let flipped = ElementGeometry::new([v[0], v[2], v[1]], g.reversed);
        if flipped.area() > 0.05 {
            return flipped;
        }
    }
}

fn random_poly(rng: &mut ChaCha8Rng, frame: crate::polyquad::Frame, k: usize) -> VecPoly {
    let n = crate::polyquad::dim_p(k);
    let mut c = || (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    VecPoly::new(Poly2::from_coeffs(frame, k, c()), Poly2::from_coeffs(frame, k, c()))
}

/// DOF matrix condition on the reference triangle and `samples` random ones.
pub fn check_unisolvence(k: usize, samples: usize, seed: u64) -> Result<CheckOutcome> {
    check_degree(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [false; 3]);
    let mut worst = build_local(&reference, k, 0)?.condition;
    for i in 0..samples {
        let el = build_local(&random_triangle(&mut rng), k, i + 1)?;
        worst = worst.max(el.condition);
    }
    Ok(CheckOutcome {
        name: "unisolvence",
        passed: worst <= CONDITION_LIMIT,
        detail: format!("max condition {worst:.3e} over {} triangles", samples + 1),
    })
}

/// Interpolation of random members of `P_k^2` on random triangles.
pub fn check_reproduction(k: usize, samples: usize, seed: u64) -> Result<CheckOutcome> {
    check_degree(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let g = random_triangle(&mut rng);
        let el = build_local(&g, k, i)?;
        let u = random_poly(&mut rng, triangle_frame(&g.vertices), k);
        let back = el.field(&el.interpolate(&u));
        let (pts, _) = triangle_rule(2 * k)?.map_to_triangle(&g.vertices);
        let mut scale: f64 = 0.0;
        let mut defect: f64 = 0.0;
        for p in &pts {
            let (a, b) = (u.eval(*p), back.eval(*p));
            scale = scale.max(a[0].abs()).max(a[1].abs());
            defect = defect.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        }
        worst = worst.max(defect / scale);
    }
    Ok(CheckOutcome {
        name: "reproduction",
        passed: worst <= REPRODUCTION_TOL,
        detail: format!("max relative pointwise defect {worst:.3e} over {samples} triangles"),
    })
}

/// Traces `u.tau` and `curl u` of random global fields on both sides of every
/// interior edge of L-shape meshes with either diagonal.
pub fn check_conformity(k: usize, seed: u64) -> Result<CheckOutcome> {
    check_degree(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for diagonal in [Diagonal::Forward, Diagonal::Backward] {
        let disc = Discretization::new(make_domain_with(Domain::Lshape, 4, diagonal)?, k)?;
        let full: Vec<f64> = (0..disc.dofmap.total).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fields: Vec<VecPoly> = (0..disc.mesh.num_triangles()).map(|t| disc.local_field(t, &full)).collect();
        let scale = fields.iter().map(|f| f.max_abs_coeff()).fold(1.0, f64::max);
        for e in disc.mesh.interior_edges() {
            let m = e.t_minus.expect("interior edge");
            let (a, b) = (disc.mesh.point(e.v0), disc.mesh.point(e.v1));
            let (up, um) = (&fields[e.t_plus], &fields[m]);
            let (cp, cm) = (up.curl(), um.curl());
            for j in 0..=k + 2 {
                let s = j as f64 / (k + 2) as f64;
                let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let (vp, vm) = (up.eval(p), um.eval(p));
                let jt = (vp[0] - vm[0]) * e.tangent[0] + (vp[1] - vm[1]) * e.tangent[1];
                let jc = cp.eval(p) - cm.eval(p);
                worst = worst.max(jt.abs().max(jc.abs()) / scale);
            }
        }
    }
    Ok(CheckOutcome {
        name: "conformity",
        passed: worst <= TRACE_TOL,
        detail: format!("max relative trace jump {worst:.3e}"),
    })
}

fn smooth_field() -> FnField<impl Fn([f64; 2]) -> [f64; 2] + Sync, impl Fn([f64; 2]) -> f64 + Sync> {
    FnField {
        value: |p: [f64; 2]| [p[0].exp() * p[1].sin(), (2.0 * p[0] + p[1]).cos()],
        curl: |p: [f64; 2]| -2.0 * (2.0 * p[0] + p[1]).sin() - p[0].exp() * p[1].cos(),
    }
}

fn smooth_curl2(p: [f64; 2]) -> [f64; 2] {
    let c = (2.0 * p[0] + p[1]).cos();
    [-2.0 * c + p[0].exp() * p[1].sin(), 4.0 * c + p[0].exp() * p[1].cos()]
}

/// `L^2` errors of `u - Pi_h u`, of its curl and of its `(curl)^2`.
pub fn interpolation_errors(
    disc: &Discretization,
    u: &dyn VectorField,
    curl2: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
) -> Result<[f64; 3]> {
    let full = disc.interpolate(u)?;
    let rule = triangle_rule(2 * disc.k + 6)?;
    let mut sums = [0.0; 3];
    for t in 0..disc.mesh.num_triangles() {
        let d = DerivedField::new(disc.local_field(t, &full));
        let (pts, wts) = rule.map_to_triangle(&disc.mesh.triangle_points(t));
        for (p, w) in pts.iter().zip(&wts) {
            let (v, e) = (u.value(*p), d.value.eval(*p));
            sums[0] += w * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
            sums[1] += w * (u.curl(*p) - d.curl.eval(*p)).powi(2);
            let (v, e) = (curl2(*p), d.curl2.eval(*p));
            sums[2] += w * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
        }
    }
    Ok(sums.map(f64::sqrt))
}

/// Levels used by [`check_interpolation_orders`]; coarser for high degrees
/// so that the finest errors stay above rounding.
pub fn order_levels(k: usize) -> Vec<usize> {
    match k {
        0..=5 => vec![2, 4, 8, 16, 32],
        6 => vec![1, 2, 4, 8],
        7 => vec![1, 2, 4],
        _ => vec![1, 2],
    }
}

/// Observed orders of the interpolation errors on the unit square against
/// `k + 1`, `k` and `k - 1`, on the last refinement.
pub fn check_interpolation_orders(k: usize) -> Result<CheckOutcome> {
    check_degree(k)?;
    let field = smooth_field();
    let levels = order_levels(k);
    let mut errs = Vec::new();
    for &n in &levels {
        let disc = Discretization::new(make_domain_with(Domain::Square, n, Diagonal::default())?, k)?;
        errs.push(interpolation_errors(&disc, &field, &smooth_curl2)?);
    }
    let l = errs.len();
    let orders: Vec<f64> = (0..3).map(|i| (errs[l - 2][i] / errs[l - 1][i]).log2()).collect();
    let expected = [k as f64 + 1.0, k as f64, k as f64 - 1.0];
    let passed = orders.iter().zip(&expected).all(|(o, e)| (o - e).abs() <= ORDER_TOL);
    Ok(CheckOutcome {
        name: "interpolation-order",
        passed,
        detail: format!(
            "orders (L2, curl, curl2) = ({:.3}, {:.3}, {:.3}), expected ({}, {}, {}) +- {ORDER_TOL}",
            orders[0], orders[1], orders[2], expected[0], expected[1], expected[2]
        ),
    })
}

/// All four suites for degree `k`.
pub fn certify(k: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_unisolvence(k, 100, seed)?,
        check_reproduction(k, 20, seed + 1)?,
        check_conformity(k, seed + 2)?,
        check_interpolation_orders(k)?,
    ])
}
