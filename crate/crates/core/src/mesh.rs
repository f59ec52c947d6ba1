//! Structured triangle meshes of planar eccentric annuli.
//!
//! Vertex `(i, j)` sits at radial level `t_i = i / n_radial` on the linear blend
//! between the inner circle point at angle `theta_j = 2 pi j / n_angular` and
//! the outer circle point at the same angle. Vertices are stored ring by ring,
//! `index = i * n_angular + j`.
//!
//! Quads are split along `(i, j)-(i+1, j+1)` in the first and third quadrants
//! and along the other diagonal in the second and fourth, so the triangulation
//! is exactly mirror symmetric under `theta -> -theta` (and, for `s = 0`, under
//! `x -> -x` as well). When `n_angular` is not a multiple of four the split
//! flips at `theta = pi` instead, which keeps the `theta -> -theta` symmetry.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::AnnulusSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Inner,
    Outer,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Inner => 0,
            BoundaryTag::Outer => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BoundaryTag::Inner),
            1 => Some(BoundaryTag::Outer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub n_radial: usize,
    pub n_angular: usize,
    pub spec: AnnulusSpec,
}

/// Unit direction at angle index `j`, built from the first quadrant by exact
/// sign flips so mirrored vertices have bitwise mirrored coordinates.
fn direction(j: usize, n: usize) -> [f64; 2] {
    let j = j % n;
    if j > n / 2 {
        let [x, y] = direction(n - j, n);
        return [x, -y];
    }
    if j == 0 {
        return [1.0, 0.0];
    }
    if 2 * j == n {
        return [-1.0, 0.0];
    }
    if n.is_multiple_of(4) {
        if 4 * j == n {
            return [0.0, 1.0];
        }
        if 4 * j > n {
            let [x, y] = direction(n / 2 - j, n);
            return [-x, y];
        }
    }
    let theta = 2.0 * PI * j as f64 / n as f64;
    [theta.cos(), theta.sin()]
}

fn uses_main_diagonal(j: usize, n: usize) -> bool {
    if n.is_multiple_of(4) {
        (4 * j / n).is_multiple_of(2)
    } else {
        2 * j < n
    }
}

/// Twice the signed area of triangle `(a, b, c)`.
pub fn signed_area2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

impl Mesh {
    pub fn generate(spec: &AnnulusSpec, n_radial: usize, n_angular: usize) -> Result<Self> {
        if spec.dim != 2 {
            return Err(Error::InvalidMeshParams(format!(
                "only planar annuli can be meshed, got dim = {}",
                spec.dim
            )));
        }
        if n_radial < 2 {
            return Err(Error::InvalidMeshParams(format!(
                "n_radial must be >= 2, got {n_radial}"
            )));
        }
        if n_angular < 8 || !n_angular.is_multiple_of(2) {
            return Err(Error::InvalidMeshParams(format!(
                "n_angular must be even and >= 8, got {n_angular}"
            )));
        }
        spec.check_contained()?;

        let n = n_angular;
        let mut vertices = Vec::with_capacity((n_radial + 1) * n);
        for i in 0..=n_radial {
            let t = i as f64 / n_radial as f64;
            for j in 0..n {
                let [dx, dy] = direction(j, n);
                let inner = [spec.s + spec.r0 * dx, spec.r0 * dy];
                let outer = [spec.r1 * dx, spec.r1 * dy];
                let v = if i == 0 {
                    inner
                } else if i == n_radial {
                    outer
                } else {
                    [
                        (1.0 - t) * inner[0] + t * outer[0],
                        (1.0 - t) * inner[1] + t * outer[1],
                    ]
                };
                vertices.push(v);
            }
        }

        let idx = |i: usize, j: usize| i * n + (j % n);
        let mut triangles = Vec::with_capacity(2 * n_radial * n);
        for i in 0..n_radial {
            for j in 0..n {
                let a = idx(i, j);
                let b = idx(i, j + 1);
                let c = idx(i + 1, j + 1);
                let d = idx(i + 1, j);
                if uses_main_diagonal(j, n) {
                    triangles.push([a, d, c]);
                    triangles.push([a, c, b]);
                } else {
                    triangles.push([a, d, b]);
                    triangles.push([d, c, b]);
                }
            }
        }

        let mut boundary_edges = Vec::with_capacity(2 * n);
        for j in 0..n {
            boundary_edges.push(BoundaryEdge {
                vertices: [idx(0, j), idx(0, j + 1)],
                tag: BoundaryTag::Inner,
            });
        }
        for j in 0..n {
            boundary_edges.push(BoundaryEdge {
                vertices: [idx(n_radial, j), idx(n_radial, j + 1)],
                tag: BoundaryTag::Outer,
            });
        }

        let mesh = Self {
            vertices,
            triangles,
            boundary_edges,
            n_radial,
            n_angular,
            spec: *spec,
        };
        if let Some(t) = mesh.triangles.iter().position(|&tri| mesh.area(tri) <= 0.0) {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} is degenerate or inverted"
            )));
        }
        Ok(mesh)
    }

    /// Same annulus at twice the resolution in both directions.
    pub fn refine(&self) -> Result<Self> {
        Self::generate(&self.spec, 2 * self.n_radial, 2 * self.n_angular)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self, tri: [usize; 3]) -> f64 {
        0.5 * signed_area2(
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        )
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|&t| self.area(t)).sum()
    }

    /// Ring index `i` and angle index `j` of a vertex.
    pub fn ring_angle(&self, v: usize) -> (usize, usize) {
        (v / self.n_angular, v % self.n_angular)
    }

    /// Vertex at the mirrored angle `-theta_j` on the same ring.
    pub fn mirror_vertex(&self, v: usize) -> usize {
        let (i, j) = self.ring_angle(v);
        i * self.n_angular + (self.n_angular - j) % self.n_angular
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let (i, _) = self.ring_angle(v);
        i == 0 || i == self.n_radial
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.n_vertices())
            .map(|v| self.is_boundary_vertex(v))
            .collect()
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    /// For each boundary edge, the index of its unique adjacent triangle.
    pub fn boundary_edge_triangles(&self) -> Result<Vec<usize>> {
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                owner.insert((a.min(b), a.max(b)), t);
            }
        }
        self.boundary_edges
            .iter()
            .map(|e| {
                let [a, b] = e.vertices;
                owner
                    .get(&(a.min(b), a.max(b)))
                    .copied()
                    .ok_or(Error::OrphanEdge(a, b))
            })
            .collect()
    }

    /// Plain-text dump: `V T B`, then vertices, triangles and tagged boundary edges.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        );
        for v in &self.vertices {
            let _ = writeln!(out, "{} {}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.code());
        }
        out
    }
}

/// Raw contents of a mesh dump.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDump {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

pub fn parse_dump(text: &str) -> Result<MeshDump> {
    let bad = |msg: &str| Error::InvalidMesh(format!("dump: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let counts: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("empty"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad header")))
        .collect::<Result<_>>()?;
    let [nv, nt, nb] = counts[..] else {
        return Err(bad("header must be `V T B`"));
    };
    let mut row = |k: usize| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad("truncated"))?;
        let toks: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if toks.len() != k {
            return Err(bad(&format!("expected {k} fields in `{line}`")));
        }
        Ok(toks)
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad coordinate"));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad index"));

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let r = row(2)?;
        vertices.push([num(&r[0])?, num(&r[1])?]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let r = row(3)?;
        triangles.push([int(&r[0])?, int(&r[1])?, int(&r[2])?]);
    }
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let r = row(3)?;
        let code: u8 = r[2].parse().map_err(|_| bad("bad tag"))?;
        boundary_edges.push(BoundaryEdge {
            vertices: [int(&r[0])?, int(&r[1])?],
            tag: BoundaryTag::from_code(code).ok_or_else(|| bad("tag must be 0 or 1"))?,
        });
    }
    Ok(MeshDump {
        vertices,
        triangles,
        boundary_edges,
    })
}
