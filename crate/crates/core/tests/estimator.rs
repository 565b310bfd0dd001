use quadcurl::estimator::{dorfler_mark, eigen_report, global_report, Aggregation, Load};
use quadcurl::mesh::{make_domain, refine_bisect, Domain, Mesh};
use quadcurl::solver::{eigs_on_domain, eigs_on_mesh, solve_source, EigenOptions, EigenPair};
use quadcurl::spaces::{assemble, assemble_load, Discretization};

fn first_pair(domain: Domain, n: usize, index: usize) -> (Discretization, EigenPair) {
    let opts = EigenOptions {
        nev: index + 1,
        ..Default::default()
    };
    let (disc, res) = eigs_on_domain(domain, n, 4, Default::default(), &opts).unwrap();
    (disc, res.pairs[index].clone())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn eigen_load_identities_hold_termwise() {
    for domain in [Domain::Square, Domain::Lshape, Domain::SquareHole] {
        let (disc, p) = first_pair(domain, 4, 0);
        let r = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap();
        assert_eq!(r.eta2, 0.0);
        for t in &r.local.triangles {
            assert_eq!(t.eta2, 0.0);
            assert!(rel(t.eta0, p.lambda * t.eta3) <= 1e-12 || t.eta3 <= 1e-300);
        }
        for e in r.local.edges.iter().flatten() {
            assert!(rel(e.eta0, p.lambda * e.eta3) <= 1e-12 || e.eta3 <= 1e-300);
        }
        assert!(rel(r.eta0, p.lambda * r.eta3) <= 1e-12);
    }
}

#[test]
fn estimators_scale_with_the_eigenvector() {
    let (disc, p) = first_pair(Domain::Lshape, 4, 0);
    let base = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Single).unwrap();
    for c in [-3.0, 0.5] {
        let v: Vec<f64> = p.vector.iter().map(|x| c * x).collect();
        let r = eigen_report(&disc, &v, p.lambda, Aggregation::Single).unwrap();
        for (a, b) in [(r.eta0, base.eta0), (r.eta1, base.eta1), (r.eta3, base.eta3)] {
            assert!(rel(a, f64::abs(c) * b) <= 1e-12);
        }
    }
}

#[test]
fn estimators_do_not_depend_on_numbering() {
    let mesh = make_domain(Domain::Lshape, 4).unwrap();
    let points: Vec<[f64; 2]> = (0..mesh.num_vertices()).map(|v| mesh.point(v)).collect();
    // rotating the vertex lists flips the t_plus/t_minus roles of many edges
    let tris: Vec<[usize; 3]> = mesh
        .triangles
        .iter()
        .rev()
        .map(|t| [t.vertices[1], t.vertices[2], t.vertices[0]])
        .collect();
    let other = Mesh::from_triangles(points, tris, Domain::Lshape, 4).unwrap();
    let opts = EigenOptions {
        nev: 1,
        ..Default::default()
    };
    let reports: Vec<_> = [mesh, other]
        .into_iter()
        .map(|m| {
            let (disc, res) = eigs_on_mesh(m, 4, &opts).unwrap();
            let p = &res.pairs[0];
            eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap()
        })
        .collect();
    for (a, b) in [
        (reports[0].eta1, reports[1].eta1),
        (reports[0].eta3, reports[1].eta3),
        (reports[0].eta0, reports[1].eta0),
    ] {
        assert!(rel(a, b) <= 1e-6, "{a} vs {b}");
    }
}

#[test]
fn estimator_decreases_on_the_square() {
    let e: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| {
            let (disc, p) = first_pair(Domain::Square, n, 0);
            eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap().estimator.unwrap()
        })
        .collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn grouped_aggregation_dominates_single() {
    let (disc, p) = first_pair(Domain::Square, 4, 0);
    let g = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap();
    let s = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Single).unwrap();
    assert!(g.eta1 >= s.eta1 && g.eta3 >= s.eta3);
    assert!(g.eta1 <= 3f64.sqrt() * s.eta1 * (1.0 + 1e-12));
}

#[test]
fn entity_csv_has_a_row_per_triangle_and_interior_edge() {
    let (disc, p) = first_pair(Domain::Lshape, 4, 0);
    let r = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&disc, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows = text.lines().count() - 1;
    assert_eq!(rows, disc.mesh.num_triangles() + disc.mesh.num_interior_edges());
    let columns = text.lines().next().unwrap().split(',').count();
    assert!(text.lines().all(|l| l.split(',').count() == columns));
}

#[test]
fn top_indicators_sit_at_the_reentrant_corner() {
    let (disc, p) = first_pair(Domain::Lshape, 8, 0);
    let r = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap();
    let ind = r.indicators(&disc);
    let mut order: Vec<usize> = (0..ind.len()).collect();
    order.sort_by(|&a, &b| ind[b].total_cmp(&ind[a]));
    let top = &order[..ind.len().div_ceil(10)];
    let near = top
        .iter()
        .filter(|&&t| {
            let c = disc.mesh.centroid(t);
            ((c[0] - 0.5).powi(2) + (c[1] - 0.5).powi(2)).sqrt() <= 0.25
        })
        .count();
    assert!(2 * near >= top.len(), "{near} of {}", top.len());
}

#[test]
fn marking_equal_indicators() {
    let ind = vec![2.0; 40];
    for theta in [0.3, 0.5, 0.9] {
        let marked = dorfler_mark(&ind, theta).unwrap();
        assert_eq!(marked.len(), (theta * theta * 40.0f64).ceil() as usize);
    }
    assert!(dorfler_mark(&ind, 1.0).is_err());
    assert!(dorfler_mark(&ind, 0.0).is_err());
}

#[test]
fn adaptive_loop_refines_the_corner_and_reduces_the_estimator() {
    let mut mesh = make_domain(Domain::Lshape, 4).unwrap();
    let initial = mesh.num_vertices();
    let opts = EigenOptions {
        nev: 1,
        ..Default::default()
    };
    let mut estimators = Vec::new();
    for it in 0..=5 {
        let (disc, res) = eigs_on_mesh(mesh.clone(), 4, &opts).unwrap();
        let p = &res.pairs[0];
        let r = eigen_report(&disc, &p.vector, p.lambda, Aggregation::Grouped).unwrap();
        estimators.push(r.estimator.unwrap());
        if it < 5 {
            let marked = dorfler_mark(&r.indicators(&disc), 0.5).unwrap();
            mesh = refine_bisect(&mesh, &marked);
            assert!(mesh.hanging_nodes().is_empty());
        }
    }
    assert!(estimators.windows(2).all(|w| w[1] < w[0]), "{estimators:?}");
    let new: Vec<[f64; 2]> = (initial..mesh.num_vertices()).map(|v| mesh.point(v)).collect();
    assert!(!new.is_empty());
    let near = new
        .iter()
        .filter(|p| ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt() <= 0.25)
        .count();
    assert!(2 * near >= new.len(), "{near} of {}", new.len());
}

#[test]
fn source_load_oscillation_vanishes_for_polynomials() {
    let disc = Discretization::new(make_domain(Domain::Square, 2).unwrap(), 4).unwrap();
    let sys = assemble(&disc).unwrap();
    let f = |p: [f64; 2]| [p[1] * p[1], p[0] * p[1]];
    let div = |p: [f64; 2]| p[0];
    let sol = solve_source(&sys, &assemble_load(&disc, &f).unwrap()).unwrap();
    let full = disc.dofmap.expand(&sol.u);
    let poly = global_report(&disc, &full, Load::Field { value: &f, div: &div }, Aggregation::Grouped).unwrap();
    assert!(poly.eta2 <= 1e-12, "{}", poly.eta2);
    assert!(poly.estimator.is_none());

    let g = |p: [f64; 2]| [(3.0 * p[1]).sin(), (2.0 * p[0]).exp()];
    let gdiv = |_: [f64; 2]| 0.0;
    let sol = solve_source(&sys, &assemble_load(&disc, &g).unwrap()).unwrap();
    let full = disc.dofmap.expand(&sol.u);
    let smooth = global_report(&disc, &full, Load::Field { value: &g, div: &gdiv }, Aggregation::Grouped).unwrap();
    assert!(smooth.eta2 > 1e-8);
}
