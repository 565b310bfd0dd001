//! Conforming triangulations of the benchmark domains.
//!
//! Conventions:
//! * triangle vertices are counterclockwise and `vertices[0]` is the newest
//!   vertex, so the refinement edge for bisection is local edge 0;
//! * local edge `i` is opposite local vertex `i` and runs counterclockwise;
//! * the global tangent of an edge runs from the lower to the higher vertex id
//!   and the normal is the tangent rotated by +90 degrees;
//! * for interior edges the normal points from `t_plus` into `t_minus`, and
//!   jumps are taken as `trace(t_plus) - trace(t_minus)`.

mod io;
mod refine;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use io::{read_mesh, write_mesh};
pub use refine::{refine_bisect, refine_uniform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// (0,1)^2
    Square,
    /// (0,1)^2 minus [1/2,1) x (0,1/2]
    Lshape,
    /// (0,1)^2 minus [1/4,3/4]^2
    SquareHole,
    /// Imported mesh with unknown generating domain.
    Custom,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Square => "square",
            Domain::Lshape => "lshape",
            Domain::SquareHole => "square-hole",
            Domain::Custom => "custom",
        }
    }

    /// Whether the unit cell with lower-left corner `(x, y)` and width `h`
    /// belongs to the domain.
    fn contains_cell(&self, x: f64, y: f64, h: f64) -> bool {
        let (cx, cy) = (x + 0.5 * h, y + 0.5 * h);
        match self {
            Domain::Square | Domain::Custom => true,
            Domain::Lshape => !(cx > 0.5 && cy < 0.5),
            Domain::SquareHole => !((0.25..=0.75).contains(&cx) && (0.25..=0.75).contains(&cy)),
        }
    }

    /// Whether `p` lies on the boundary of the domain (tolerance 1e-12).
    pub fn on_boundary(&self, p: [f64; 2]) -> bool {
        let tol = 1e-12;
        let near = |a: f64, b: f64| (a - b).abs() <= tol;
        let within = |a: f64, lo: f64, hi: f64| a >= lo - tol && a <= hi + tol;
        let outer = near(p[0], 0.0) || near(p[0], 1.0) || near(p[1], 0.0) || near(p[1], 1.0);
        match self {
            Domain::Square | Domain::Custom => outer,
            Domain::Lshape => {
                outer
                    || (near(p[0], 0.5) && within(p[1], 0.0, 0.5))
                    || (near(p[1], 0.5) && within(p[0], 0.5, 1.0))
            }
            Domain::SquareHole => {
                let on_hole = ((near(p[0], 0.25) || near(p[0], 0.75)) && within(p[1], 0.25, 0.75))
                    || ((near(p[1], 0.25) || near(p[1], 0.75)) && within(p[0], 0.25, 0.75));
                outer || on_hole
            }
        }
    }

    /// Number of holes (first Betti number) of the domain.
    pub fn holes(&self) -> usize {
        match self {
            Domain::SquareHole => 1,
            _ => 0,
        }
    }

    /// Location of the strongest geometric singularity, if any.
    pub fn reentrant_corner(&self) -> Option<[f64; 2]> {
        match self {
            Domain::Lshape => Some([0.5, 0.5]),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "square" | "omega1" => Ok(Domain::Square),
            "lshape" | "l-shape" | "omega2" => Ok(Domain::Lshape),
            "square-hole" | "squarehole" | "omega3" => Ok(Domain::SquareHole),
            "custom" => Ok(Domain::Custom),
            other => Err(Error::InvalidArgument(format!("unknown domain '{other}'"))),
        }
    }
}

/// Orientation of the cell diagonals of the structured meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagonal {
    /// From lower-left to upper-right ("/").
    Forward,
    /// From lower-right to upper-left ("\").
    #[default]
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub on_boundary: bool,
}

impl Vertex {
    pub fn point(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub v0: usize,
    pub v1: usize,
    pub length: f64,
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub t_plus: usize,
    pub t_minus: Option<usize>,
    pub on_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub id: usize,
    pub vertices: [usize; 3],
    pub edges: [usize; 3],
    /// +1 when the counterclockwise local edge agrees with the global tangent.
    pub edge_signs: [i8; 3],
    pub diameter: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub triangles: Vec<Triangle>,
    pub domain: Domain,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    OfTriangle,
    OfEdge,
    OfVertex,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    /// Builds edges, adjacency and boundary flags from vertex coordinates and
    /// triangle connectivity. Clockwise triangles are flipped by swapping their
    /// last two vertices, which keeps `vertices[0]`.
    pub fn from_triangles(
        points: Vec<[f64; 2]>,
        mut tris: Vec<[usize; 3]>,
        domain: Domain,
        level: usize,
    ) -> Result<Self> {
        let nv = points.len();
        for (t, tri) in tris.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let a = signed_area(points[tri[0]], points[tri[1]], points[tri[2]]);
            if a.abs() < 1e-300 {
                return Err(Error::Mesh(format!("triangle {t} is degenerate")));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_tris: Vec<Vec<usize>> = Vec::new();
        let mut edge_verts: Vec<(usize, usize)> = Vec::new();
        let mut tri_edges = Vec::with_capacity(tris.len());
        for (t, tri) in tris.iter().enumerate() {
            let mut es = [0usize; 3];
            for (i, e) in es.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_of.entry(key).or_insert_with(|| {
                    edge_verts.push(key);
                    edge_tris.push(Vec::new());
                    edge_verts.len() - 1
                });
                edge_tris[id].push(t);
                *e = id;
            }
            tri_edges.push(es);
        }

        let mut vertex_boundary = vec![false; nv];
        let mut edges = Vec::with_capacity(edge_verts.len());
        for (id, &(v0, v1)) in edge_verts.iter().enumerate() {
            let adj = &edge_tris[id];
            if adj.len() > 2 {
                return Err(Error::Mesh(format!("edge {v0}-{v1} is shared by {} triangles", adj.len())));
            }
            let (p0, p1) = (points[v0], points[v1]);
            let length = dist(p0, p1);
            let tangent = [(p1[0] - p0[0]) / length, (p1[1] - p0[1]) / length];
            let normal = [-tangent[1], tangent[0]];
            let on_boundary = adj.len() == 1;
            if on_boundary {
                vertex_boundary[v0] = true;
                vertex_boundary[v1] = true;
            }
            // the normal points out of t_plus
            let points_out_of = |t: usize| {
                let w = tris[t].iter().copied().find(|&v| v != v0 && v != v1).unwrap();
                let d = [points[w][0] - p0[0], points[w][1] - p0[1]];
                normal[0] * d[0] + normal[1] * d[1] < 0.0
            };
            let (t_plus, t_minus) = if on_boundary {
                (adj[0], None)
            } else if points_out_of(adj[0]) {
                (adj[0], Some(adj[1]))
            } else {
                (adj[1], Some(adj[0]))
            };
            edges.push(Edge {
                id,
                v0,
                v1,
                length,
                tangent,
                normal,
                t_plus,
                t_minus,
                on_boundary,
            });
        }

        let vertices = points
            .iter()
            .enumerate()
            .map(|(id, p)| Vertex {
                id,
                x: p[0],
                y: p[1],
                on_boundary: vertex_boundary[id],
            })
            .collect();

        let triangles = tris
            .iter()
            .enumerate()
            .map(|(id, tri)| {
                let es = tri_edges[id];
                let mut signs = [1i8; 3];
                let mut diameter: f64 = 0.0;
                for i in 0..3 {
                    let a = tri[(i + 1) % 3];
                    let b = tri[(i + 2) % 3];
                    signs[i] = if a < b { 1 } else { -1 };
                    diameter = diameter.max(edges[es[i]].length);
                }
                Triangle {
                    id,
                    vertices: *tri,
                    edges: es,
                    edge_signs: signs,
                    diameter,
                    area: signed_area(points[tri[0]], points[tri[1]], points[tri[2]]),
                }
            })
            .collect();

        Ok(Self {
            vertices,
            edges,
            triangles,
            domain,
            level,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn point(&self, v: usize) -> [f64; 2] {
        self.vertices[v].point()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = &self.triangles[t];
        [self.point(tri.vertices[0]), self.point(tri.vertices[1]), self.point(tri.vertices[2])]
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.triangle_points(t);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    /// Whether the counterclockwise local edge `i` of `t` is reversed with
    /// respect to the global tangent.
    pub fn edge_reversed(&self, t: usize) -> [bool; 3] {
        let s = self.triangles[t].edge_signs;
        [s[0] < 0, s[1] < 0, s[2] < 0]
    }

    /// Mesh size: the largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        self.triangles.iter().fold(0.0, |m, t| m.max(t.diameter))
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    /// V - E + T.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    /// Number of holes of a connected mesh, `1 - (V - E + T)`.
    pub fn holes(&self) -> usize {
        (1 - self.euler_characteristic()).max(0) as usize
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| !e.on_boundary)
    }

    pub fn num_interior_edges(&self) -> usize {
        self.interior_edges().count()
    }

    /// Triangles forming the requested patch, sorted by id.
    pub fn patch(&self, kind: PatchKind, id: usize) -> Result<Vec<usize>> {
        let check = |kind: &'static str, count: usize| {
            if id >= count {
                Err(Error::InvalidId { kind, id, count })
            } else {
                Ok(())
            }
        };
        let mut out = match kind {
            PatchKind::OfTriangle => {
                check("triangle", self.num_triangles())?;
                let mut v = vec![id];
                for &e in &self.triangles[id].edges {
                    let edge = &self.edges[e];
                    v.push(edge.t_plus);
                    if let Some(m) = edge.t_minus {
                        v.push(m);
                    }
                }
                v
            }
            PatchKind::OfEdge => {
                check("edge", self.num_edges())?;
                let edge = &self.edges[id];
                let mut v = vec![edge.t_plus];
                v.extend(edge.t_minus);
                v
            }
            PatchKind::OfVertex => {
                check("vertex", self.num_vertices())?;
                self.triangles
                    .iter()
                    .filter(|t| t.vertices.contains(&id))
                    .map(|t| t.id)
                    .collect()
            }
        };
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Vertices lying strictly inside some edge (hanging nodes). Quadratic in
    /// mesh size; intended for audits of small meshes.
    pub fn hanging_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for v in &self.vertices {
            let p = v.point();
            for e in &self.edges {
                if e.v0 == v.id || e.v1 == v.id {
                    continue;
                }
                let a = self.point(e.v0);
                let b = self.point(e.v1);
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                if cross.abs() > 1e-12 * e.length {
                    continue;
                }
                let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (e.length * e.length);
                if t > 1e-12 && t < 1.0 - 1e-12 {
                    out.push(v.id);
                    break;
                }
            }
        }
        out
    }
}

/// Structured mesh of one of the benchmark domains with cell width `1/n`.
pub fn make_domain(domain: Domain, n: usize) -> Result<Mesh> {
    make_domain_with(domain, n, Diagonal::default())
}

pub fn make_domain_with(domain: Domain, n: usize, diagonal: Diagonal) -> Result<Mesh> {
    let invalid = |reason: &str| {
        Err(Error::InvalidSubdivision {
            domain: domain.name().to_string(),
            n,
            reason: reason.to_string(),
        })
    };
    match domain {
        Domain::Square if n < 1 => return invalid("need n >= 1"),
        Domain::Lshape if n < 2 || !n.is_multiple_of(2) => return invalid("the L-shape needs an even n"),
        Domain::SquareHole if n < 4 || !n.is_multiple_of(4) => return invalid("the holed square needs n divisible by 4"),
        Domain::Custom => return invalid("custom domains are imported, not generated"),
        _ => {}
    }
    let h = 1.0 / n as f64;
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if domain.contains_cell(i as f64 * h, j as f64 * h, h) {
                cells.push((i, j));
            }
        }
    }
    let mut used = vec![usize::MAX; (n + 1) * (n + 1)];
    for &(i, j) in &cells {
        for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
            used[grid(a, b)] = 0;
        }
    }
    let mut points = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let g = grid(i, j);
            if used[g] != usize::MAX {
                used[g] = points.len();
                points.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
    }
    let mut tris = Vec::with_capacity(2 * cells.len());
    for &(i, j) in &cells {
        let a = used[grid(i, j)];
        let b = used[grid(i + 1, j)];
        let c = used[grid(i + 1, j + 1)];
        let d = used[grid(i, j + 1)];
        // right-angle vertex first, so the refinement edge is the diagonal
        match diagonal {
            Diagonal::Forward => {
                tris.push([b, c, a]);
                tris.push([d, a, c]);
            }
            Diagonal::Backward => {
                tris.push([a, b, d]);
                tris.push([c, d, b]);
            }
        }
    }
    Mesh::from_triangles(points, tris, domain, 0)
}
