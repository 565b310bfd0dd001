use std::collections::BTreeSet;

use quadcurl::mesh::{make_domain_with, read_mesh, refine_bisect, write_mesh, Diagonal, Domain};

#[test]
fn text_format_round_trips_all_domains() {
    for domain in [Domain::Square, Domain::Lshape, Domain::SquareHole] {
        for diagonal in [Diagonal::Forward, Diagonal::Backward] {
            let mesh = make_domain_with(domain, 4, diagonal).unwrap();
            let mut buf = Vec::new();
            write_mesh(&mesh, &mut buf).unwrap();
            let back = read_mesh(&buf[..], domain).unwrap();
            assert_eq!(back.num_vertices(), mesh.num_vertices());
            assert_eq!(back.num_edges(), mesh.num_edges());
            assert_eq!(back.num_triangles(), mesh.num_triangles());
            assert_eq!(back.holes(), domain.holes());
            for t in 0..mesh.num_triangles() {
                assert_eq!(back.triangle_points(t), mesh.triangle_points(t));
            }
            let mut again = Vec::new();
            write_mesh(&back, &mut again).unwrap();
            assert_eq!(buf, again);
        }
    }
}

#[test]
fn bisected_meshes_round_trip() {
    let mesh = make_domain_with(Domain::Lshape, 2, Diagonal::Backward).unwrap();
    let mesh = refine_bisect(&mesh, &BTreeSet::from([0, 3]));
    let mut buf = b"# comment lines are skipped\n".to_vec();
    write_mesh(&mesh, &mut buf).unwrap();
    let back = read_mesh(&buf[..], Domain::Lshape).unwrap();
    assert_eq!(back.num_triangles(), mesh.num_triangles());
    assert!((back.total_area() - 0.75).abs() < 1e-14);
    assert!(back.hanging_nodes().is_empty());
}

#[test]
fn truncated_files_are_rejected() {
    let mesh = make_domain_with(Domain::Square, 2, Diagonal::Backward).unwrap();
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    assert!(read_mesh(cut.as_bytes(), Domain::Square).is_err());
}
