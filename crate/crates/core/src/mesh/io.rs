//! Plain-text mesh format.
//!
//! ```text
//! nv ne nt
//! x y boundary_flag            (nv lines)
//! v0 v1 boundary_flag          (ne lines)
//! v0 v1 v2 e0 e1 e2            (nt lines)
//! ```
//!
//! Edges are renumbered on import; the file's edge list is only checked for
//! consistency with the triangles.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::{Domain, Mesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v.x, v.y, u8::from(v.on_boundary))?;
    }
    for e in &mesh.edges {
        writeln!(w, "{} {} {}", e.v0, e.v1, u8::from(e.on_boundary))?;
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.vertices;
        let [e0, e1, e2] = t.edges;
        writeln!(w, "{a} {b} {c} {e0} {e1} {e2}")?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.ok_or_else(|| Error::Mesh(format!("line {line}: missing field")))?
        .parse()
        .map_err(|_| Error::Mesh(format!("line {line}: cannot parse field")))
}

pub fn read_mesh<R: BufRead>(r: R, domain: Domain) -> Result<Mesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|l| l.as_ref().map_or(true, |(_, s)| !s.trim().is_empty() && !s.starts_with('#')));
    let mut next = || -> Result<(usize, String)> {
        lines
            .next()
            .ok_or_else(|| Error::Mesh("unexpected end of file".into()))?
            .map_err(Error::from)
    };
    let (ln, header) = next()?;
    let mut it = header.split_whitespace();
    let nv: usize = parse(it.next(), ln)?;
    let ne: usize = parse(it.next(), ln)?;
    let nt: usize = parse(it.next(), ln)?;

    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next()?;
        let mut it = l.split_whitespace();
        let x: f64 = parse(it.next(), ln)?;
        let y: f64 = parse(it.next(), ln)?;
        let _flag: u8 = parse(it.next(), ln)?;
        points.push([x, y]);
    }
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = next()?;
        let mut it = l.split_whitespace();
        let a: usize = parse(it.next(), ln)?;
        let b: usize = parse(it.next(), ln)?;
        let _flag: u8 = parse(it.next(), ln)?;
        edges.push((a.min(b), a.max(b)));
    }
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next()?;
        let mut it = l.split_whitespace();
        let v: [usize; 3] = [parse(it.next(), ln)?, parse(it.next(), ln)?, parse(it.next(), ln)?];
        for i in 0..3 {
            let e: usize = parse(it.next(), ln)?;
            let pair = edges
                .get(e)
                .ok_or_else(|| Error::Mesh(format!("line {ln}: edge id {e} out of range")))?;
            let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
            if *pair != (a.min(b), a.max(b)) {
                return Err(Error::Mesh(format!("line {ln}: edge {e} does not join vertices {a} and {b}")));
            }
        }
        tris.push(v);
    }
    let mesh = Mesh::from_triangles(points, tris, domain, 0)?;
    let file_edges: HashSet<(usize, usize)> = edges.into_iter().collect();
    if file_edges.len() != mesh.num_edges() {
        return Err(Error::Mesh(format!(
            "edge list has {} distinct edges, triangles define {}",
            file_edges.len(),
            mesh.num_edges()
        )));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_domain;

    #[test]
    fn round_trip() {
        let m = make_domain(Domain::SquareHole, 4).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice(), Domain::SquareHole).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_inconsistent_edges() {
        let text = "3 3 1\n0 0 1\n1 0 1\n0 1 1\n1 2 1\n0 2 1\n0 1 1\n0 1 2 0 0 2\n";
        assert!(read_mesh(text.as_bytes(), Domain::Custom).is_err());
        let ok = "3 3 1\n0 0 1\n1 0 1\n0 1 1\n1 2 1\n0 2 1\n0 1 1\n0 1 2 0 1 2\n";
        let m = read_mesh(ok.as_bytes(), Domain::Custom).unwrap();
        assert_eq!(m.num_edges(), 3);
        assert!(read_mesh("2 0".as_bytes(), Domain::Custom).is_err());
    }
}
