use crate::element::local_dim;
use crate::mesh::Mesh;

/// Global numbering of the vector space `V_h` and the boundary mask of
/// `V_h^0`.
///
/// Layout: one curl DOF per vertex, then `2k-1` DOFs per edge (`k-2` curl
/// nodes followed by `k+1` tangential moments, both in the global edge
/// direction), then `(k-1)(k-2)` interior DOFs per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub k: usize,
    pub vertex_offset: usize,
    pub edge_offset: usize,
    pub triangle_offset: usize,
    pub total: usize,
    /// Global DOFs of each triangle in local canonical order.
    pub cell_dofs: Vec<Vec<usize>>,
    pub constrained: Vec<bool>,
    /// Free index of each global DOF, `None` when constrained.
    pub free_index: Vec<Option<usize>>,
    pub free_to_global: Vec<usize>,
}

impl DofMap {
    pub fn per_edge(k: usize) -> usize {
        2 * k - 1
    }

    pub fn per_triangle(k: usize) -> usize {
        (k - 1) * (k - 2)
    }

    /// `V + E (2k-1) + T (k-1)(k-2)`
    pub fn count(nv: usize, ne: usize, nt: usize, k: usize) -> usize {
        nv + ne * Self::per_edge(k) + nt * Self::per_triangle(k)
    }

    pub fn new(mesh: &Mesh, k: usize) -> Self {
        let (nv, ne, nt) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles());
        let pe = Self::per_edge(k);
        let pt = Self::per_triangle(k);
        let vertex_offset = 0;
        let edge_offset = nv;
        let triangle_offset = nv + ne * pe;
        let total = Self::count(nv, ne, nt, k);

        let cell_dofs = mesh
            .triangles
            .iter()
            .map(|t| {
                let mut d = Vec::with_capacity(local_dim(k));
                d.extend(t.vertices.iter().map(|v| vertex_offset + v));
                for &e in &t.edges {
                    d.extend((0..k - 2).map(|j| edge_offset + e * pe + j));
                }
                for &e in &t.edges {
                    d.extend((0..=k).map(|j| edge_offset + e * pe + (k - 2) + j));
                }
                d.extend((0..pt).map(|j| triangle_offset + t.id * pt + j));
                d
            })
            .collect();

        let mut constrained = vec![false; total];
        for v in mesh.vertices.iter().filter(|v| v.on_boundary) {
            constrained[vertex_offset + v.id] = true;
        }
        for e in mesh.edges.iter().filter(|e| e.on_boundary) {
            for j in 0..pe {
                constrained[edge_offset + e.id * pe + j] = true;
            }
        }
        let mut free_index = vec![None; total];
        let mut free_to_global = Vec::new();
        for (g, c) in constrained.iter().enumerate() {
            if !c {
                free_index[g] = Some(free_to_global.len());
                free_to_global.push(g);
            }
        }
        Self {
            k,
            vertex_offset,
            edge_offset,
            triangle_offset,
            total,
            cell_dofs,
            constrained,
            free_index,
            free_to_global,
        }
    }

    pub fn num_free(&self) -> usize {
        self.free_to_global.len()
    }

    /// Full vector with zeros on constrained DOFs.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.num_free());
        let mut full = vec![0.0; self.total];
        for (f, &g) in self.free_to_global.iter().enumerate() {
            full[g] = free[f];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.total);
        self.free_to_global.iter().map(|&g| full[g]).collect()
    }

    pub fn local_coeffs(&self, t: usize, full: &[f64]) -> Vec<f64> {
        self.cell_dofs[t].iter().map(|&g| full[g]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_domain, refine_uniform, Domain};

    #[test]
    fn counts_on_the_two_triangle_square() {
        let m = make_domain(Domain::Square, 1).unwrap();
        let d = DofMap::new(&m, 4);
        assert_eq!(d.total, 51);
        // enumerate constrained DOFs directly
        let mut fixed = 0;
        for v in &m.vertices {
            fixed += usize::from(v.on_boundary);
        }
        for e in &m.edges {
            if e.on_boundary {
                fixed += 7;
            }
        }
        assert_eq!(fixed, 32);
        assert_eq!(d.num_free(), 19);
    }

    #[test]
    fn formula_holds_after_refinement() {
        let mut m = make_domain(Domain::Lshape, 2).unwrap();
        for _ in 0..3 {
            for k in 4..=6 {
                let d = DofMap::new(&m, k);
                assert_eq!(d.total, m.num_vertices() + m.num_edges() * (2 * k - 1) + m.num_triangles() * (k - 1) * (k - 2));
                let mut all: Vec<usize> = d.cell_dofs.iter().flatten().copied().collect();
                all.sort_unstable();
                all.dedup();
                assert_eq!(all.len(), d.total);
            }
            m = refine_uniform(&m);
        }
    }

    #[test]
    fn shared_edges_share_dofs() {
        let m = make_domain(Domain::Square, 3).unwrap();
        let d = DofMap::new(&m, 5);
        for e in m.interior_edges() {
            let t0 = &m.triangles[e.t_plus];
            let t1 = &m.triangles[e.t_minus.unwrap()];
            let i0 = t0.edges.iter().position(|&x| x == e.id).unwrap();
            let i1 = t1.edges.iter().position(|&x| x == e.id).unwrap();
            for j in 0..3 {
                assert_eq!(d.cell_dofs[t0.id][3 + 3 * i0 + j], d.cell_dofs[t1.id][3 + 3 * i1 + j]);
            }
            for j in 0..6 {
                assert_eq!(d.cell_dofs[t0.id][12 + 6 * i0 + j], d.cell_dofs[t1.id][12 + 6 * i1 + j]);
            }
        }
        let free = vec![1.0; d.num_free()];
        assert_eq!(d.restrict(&d.expand(&free)), free);
    }
}
