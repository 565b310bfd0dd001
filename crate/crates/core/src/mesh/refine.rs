use std::collections::{BTreeSet, HashMap};

use super::Mesh;

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Red refinement: every triangle is split into four similar children.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let nv = mesh.num_vertices();
    let mut points: Vec<[f64; 2]> = mesh.vertices.iter().map(|v| v.point()).collect();
    for e in &mesh.edges {
        let a = mesh.point(e.v0);
        let b = mesh.point(e.v1);
        points.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
    }
    let mut tris = Vec::with_capacity(4 * mesh.num_triangles());
    for t in &mesh.triangles {
        let [p0, p1, p2] = t.vertices;
        // midpoint of local edge i (opposite vertex i)
        let m12 = nv + t.edges[0];
        let m20 = nv + t.edges[1];
        let m01 = nv + t.edges[2];
        tris.push([p0, m01, m20]);
        tris.push([m01, p1, m12]);
        tris.push([m20, m12, p2]);
        tris.push([m12, m20, m01]);
    }
    Mesh::from_triangles(points, tris, mesh.domain, mesh.level + 1)
        .expect("refinement of a valid mesh is valid")
}

/// Newest-vertex bisection of the marked triangles plus the closure needed to
/// remove hanging nodes. Marked triangles are bisected at least once.
pub fn refine_bisect(mesh: &Mesh, marked: &BTreeSet<usize>) -> Mesh {
    if marked.is_empty() {
        return mesh.clone();
    }
    let refinement_edge = |t: usize| {
        let v = mesh.triangles[t].vertices;
        key(v[1], v[2])
    };
    let mut cut: BTreeSet<(usize, usize)> = marked
        .iter()
        .filter(|&&t| t < mesh.num_triangles())
        .map(|&t| refinement_edge(t))
        .collect();
    // closure: a triangle with any cut edge must also cut its refinement edge
    loop {
        let mut changed = false;
        for t in &mesh.triangles {
            let v = t.vertices;
            let any = (0..3).any(|i| cut.contains(&key(v[(i + 1) % 3], v[(i + 2) % 3])));
            if any && cut.insert(refinement_edge(t.id)) {
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut points: Vec<[f64; 2]> = mesh.vertices.iter().map(|v| v.point()).collect();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tris = Vec::with_capacity(mesh.num_triangles() + 2 * cut.len());

    fn bisect(
        tri: [usize; 3],
        cut: &BTreeSet<(usize, usize)>,
        points: &mut Vec<[f64; 2]>,
        midpoint: &mut HashMap<(usize, usize), usize>,
        out: &mut Vec<[usize; 3]>,
    ) {
        let [p0, p1, p2] = tri;
        let e = key(p1, p2);
        if !cut.contains(&e) {
            out.push(tri);
            return;
        }
        let m = *midpoint.entry(e).or_insert_with(|| {
            let a = points[p1];
            let b = points[p2];
            points.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            points.len() - 1
        });
        bisect([m, p0, p1], cut, points, midpoint, out);
        bisect([m, p2, p0], cut, points, midpoint, out);
    }

    for t in &mesh.triangles {
        bisect(t.vertices, &cut, &mut points, &mut midpoint, &mut tris);
    }
    Mesh::from_triangles(points, tris, mesh.domain, mesh.level + 1)
        .expect("bisection of a valid mesh is valid")
}
