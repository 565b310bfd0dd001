use std::collections::BTreeSet;

use proptest::prelude::*;
use quadcurl::element::{build_local, ElementGeometry, FnField};
use quadcurl::estimator::dorfler_mark;
use quadcurl::mesh::{make_domain, refine_bisect, Domain};

fn triangle() -> impl Strategy<Value = [[f64; 2]; 3]> {
    proptest::array::uniform3(proptest::array::uniform2(-2.0..2.0f64)).prop_filter("well shaped", |v| {
        let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
        let longest = (0..3)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % 3]);
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .fold(0.0, f64::max);
        area > 0.05 * longest * longest
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shape_functions_are_dual_to_the_dofs(v in triangle(), flips in proptest::array::uniform3(any::<bool>())) {
        let el = build_local(&ElementGeometry::new(v, flips), 4, 0).unwrap();
        prop_assert!(el.duality_defect() <= 1e-8, "defect {}", el.duality_defect());
        prop_assert!(el.condition <= 1e12);
    }

    #[test]
    fn linear_fields_are_reproduced(v in triangle(), a in proptest::array::uniform4(-1.0..1.0f64)) {
        let el = build_local(&ElementGeometry::new(v, [false; 3]), 5, 0).unwrap();
        let u = FnField {
            value: move |p: [f64; 2]| [a[0] * p[0] + a[1] * p[1], a[2] * p[0] + a[3] * p[1]],
            curl: move |_: [f64; 2]| a[2] - a[1],
        };
        let back = el.field(&el.interpolate(&u));
        for p in v {
            let (x, y) = ((u.value)(p), back.eval(p));
            prop_assert!((x[0] - y[0]).abs() + (x[1] - y[1]).abs() <= 1e-9);
        }
    }

    #[test]
    fn dorfler_sets_are_minimal(ind in proptest::collection::vec(0.0..10.0f64, 1..60), theta in 0.05..0.95f64) {
        let marked = dorfler_mark(&ind, theta).unwrap();
        let total: f64 = ind.iter().sum();
        let sum: f64 = marked.iter().map(|&t| ind[t]).sum();
        prop_assert!(sum >= theta * theta * total * (1.0 - 1e-12));
        if let Some(&smallest) = marked.iter().min_by(|&&a, &&b| ind[a].total_cmp(&ind[b])) {
            prop_assert!(sum - ind[smallest] < theta * theta * total);
            let outside = (0..ind.len()).filter(|t| !marked.contains(t)).map(|t| ind[t]).fold(0.0, f64::max);
            prop_assert!(outside <= ind[smallest]);
        }
    }

    #[test]
    fn bisection_keeps_meshes_conforming(marks in proptest::collection::btree_set(0usize..6, 1..4), rounds in 1usize..4) {
        let mut mesh = make_domain(Domain::Lshape, 2).unwrap();
        let mut marks: BTreeSet<usize> = marks;
        for _ in 0..rounds {
            let before = mesh.num_triangles();
            marks.retain(|&t| t < before);
            let next = refine_bisect(&mesh, &marks);
            prop_assert!(next.hanging_nodes().is_empty());
            prop_assert!((next.total_area() - 0.75).abs() < 1e-12);
            prop_assert!(next.num_triangles() >= before + marks.len());
            mesh = next;
            marks = marks.iter().map(|t| (t * 3 + 1) % mesh.num_triangles()).collect();
        }
    }
}
