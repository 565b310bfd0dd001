use nalgebra::DMatrix;

use crate::element::ElementGeometry;
use crate::mesh::Mesh;
use crate::polyquad::poly::{dim_p, monomials_at, Poly2};
use crate::polyquad::triangle_frame;

/// Continuous Lagrange `P_k` space `S_h` with equispaced nodes and the
/// interior numbering of `S_h^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpace {
    pub k: usize,
    pub total: usize,
    pub cell_dofs: Vec<Vec<usize>>,
    pub on_boundary: Vec<bool>,
    /// Index in `S_h^0`, `None` for boundary nodes.
    pub interior_index: Vec<Option<usize>>,
    pub interior_to_global: Vec<usize>,
}

impl ScalarSpace {
    pub fn new(mesh: &Mesh, k: usize) -> Self {
        let (nv, ne) = (mesh.num_vertices(), mesh.num_edges());
        let pe = k - 1;
        let pt = (k - 1) * (k - 2) / 2;
        let edge_offset = nv;
        let tri_offset = nv + ne * pe;
        let total = tri_offset + mesh.num_triangles() * pt;
        let cell_dofs = mesh
            .triangles
            .iter()
            .map(|t| {
                let mut d: Vec<usize> = t.vertices.to_vec();
                for &e in &t.edges {
                    d.extend((0..pe).map(|j| edge_offset + e * pe + j));
                }
                d.extend((0..pt).map(|j| tri_offset + t.id * pt + j));
                d
            })
            .collect();
        let mut on_boundary = vec![false; total];
        for v in mesh.vertices.iter().filter(|v| v.on_boundary) {
            on_boundary[v.id] = true;
        }
        for e in mesh.edges.iter().filter(|e| e.on_boundary) {
            for j in 0..pe {
                on_boundary[edge_offset + e.id * pe + j] = true;
            }
        }
        let mut interior_index = vec![None; total];
        let mut interior_to_global = Vec::new();
        for (g, b) in on_boundary.iter().enumerate() {
            if !b {
                interior_index[g] = Some(interior_to_global.len());
                interior_to_global.push(g);
            }
        }
        Self {
            k,
            total,
            cell_dofs,
            on_boundary,
            interior_index,
            interior_to_global,
        }
    }

    pub fn num_interior(&self) -> usize {
        self.interior_to_global.len()
    }
}

/// Nodal basis of `P_k` on one triangle.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    pub nodes: Vec<[f64; 2]>,
    pub shapes: Vec<Poly2>,
}

impl LagrangeElement {
    /// Nodes in local order: vertices, `k-1` nodes per local edge in the
    /// global edge direction, interior nodes.
    pub fn new(geom: &ElementGeometry, k: usize) -> Self {
        let v = geom.vertices;
        let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let mut nodes: Vec<[f64; 2]> = v.to_vec();
        for e in 0..3 {
            let (a, b) = geom.edge_endpoints(e);
            nodes.extend((1..k).map(|j| lerp(a, b, j as f64 / k as f64)));
        }
        for i in 1..k {
            for j in 1..k - i {
                let (s, t) = (i as f64 / k as f64, j as f64 / k as f64);
                nodes.push([
                    v[0][0] + s * (v[1][0] - v[0][0]) + t * (v[2][0] - v[0][0]),
                    v[0][1] + s * (v[1][1] - v[0][1]) + t * (v[2][1] - v[0][1]),
                ]);
            }
        }
        let n = dim_p(k);
        debug_assert_eq!(nodes.len(), n);
        let frame = triangle_frame(&v);
        let mut vand = DMatrix::zeros(n, n);
        let mut mono = Vec::new();
        for (i, p) in nodes.iter().enumerate() {
            monomials_at(k, frame.local(*p), &mut mono);
            for (j, m) in mono.iter().enumerate() {
                vand[(i, j)] = *m;
            }
        }
        let inv = vand.lu().try_inverse().expect("Lagrange nodes are unisolvent");
        let shapes = (0..n)
            .map(|j| Poly2::from_coeffs(frame, k, inv.column(j).iter().copied().collect()))
            .collect();
        Self { nodes, shapes }
    }
}
