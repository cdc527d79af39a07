//! Triangle mesh representation and per-triangle metrics.

use std::collections::BTreeMap;

use super::Point2;
use crate::{Error, Result};

/// Three vertex indices in counterclockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub v: [usize; 3],
}

impl Triangle {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        Triangle { v: [a, b, c] }
    }

    /// The three edges as sorted index pairs.
    pub fn edges(&self) -> [(usize, usize); 3] {
        let e = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
        [
            e(self.v[0], self.v[1]),
            e(self.v[1], self.v[2]),
            e(self.v[2], self.v[0]),
        ]
    }
}

/// An immutable triangle mesh: vertex table, triangle table and edge
/// adjacency. All read operations are safe to share across threads;
/// "mutation" (vertex relocation, edge flips) produces a new revision.
#[derive(Debug, Clone)]
pub struct Mesh2 {
    vertices: Vec<Point2>,
    triangles: Vec<Triangle>,
    /// Sorted edge -> incident triangle indices (one or two).
    edge_tris: BTreeMap<(usize, usize), Vec<usize>>,
    /// Vertex -> incident triangle indices.
    vertex_tris: Vec<Vec<usize>>,
}

impl Mesh2 {
    /// Builds a mesh from vertex coordinates and triangles.
    ///
    /// Triangles listed clockwise are reoriented; degenerate (zero-area)
    /// triangles and out-of-range indices are rejected. Conformity is *not*
    /// checked here -- it is reported by
    /// [`validate_admissible`](super::validate_admissible) as data.
    pub fn new(vertices: Vec<Point2>, mut triangles: Vec<Triangle>) -> Result<Self> {
        for (i, p) in vertices.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &vi in &tri.v {
                if vi >= vertices.len() {
                    return Err(Error::IndexOutOfBounds {
                        index: vi,
                        len: vertices.len(),
                    });
                }
            }
            if tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[2] == tri.v[0] {
                return Err(Error::DegenerateTriangle { tri: t, area: 0.0 });
            }
            let [a, b, c] = tri.v.map(|i| vertices[i]);
            let area2 = (b - a).cross(c - a);
            let scale = (b - a).norm().max((c - a).norm()).max(f64::MIN_POSITIVE);
            if area2.abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateTriangle {
                    tri: t,
                    area: 0.5 * area2,
                });
            }
            if area2 < 0.0 {
                tri.v.swap(1, 2);
            }
        }
        let mut edge_tris: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut vertex_tris = vec![Vec::new(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for e in tri.edges() {
                edge_tris.entry(e).or_default().push(t);
            }
            for &vi in &tri.v {
                vertex_tris[vi].push(t);
            }
        }
        Ok(Mesh2 {
            vertices,
            triangles,
            edge_tris,
            vertex_tris,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn triangle(&self, t: usize) -> Triangle {
        self.triangles[t]
    }

    /// The three corner points of triangle `t`.
    pub fn tri_points(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].v.map(|i| self.vertices[i])
    }

    /// Triangles incident to the sorted edge `(a, b)`.
    pub fn edge_triangles(&self, a: usize, b: usize) -> &[usize] {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edge_tris.get(&key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Deterministic iteration over all edges with their incident triangles.
    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.edge_tris.iter()
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }

    /// A vertex is interior when every incident edge has two incident
    /// triangles (its star is a closed fan).
    pub fn is_interior_vertex(&self, v: usize) -> bool {
        if self.vertex_tris[v].is_empty() {
            return false;
        }
        for &t in &self.vertex_tris[v] {
            for e in self.triangles[t].edges() {
                if (e.0 == v || e.1 == v) && self.edge_tris[&e].len() != 2 {
                    return false;
                }
            }
        }
        true
    }

    /// New revision with vertex `v` relocated to `p`.
    pub fn with_vertex_moved(&self, v: usize, p: Point2) -> Result<Mesh2> {
        if v >= self.vertices.len() {
            return Err(Error::IndexOutOfBounds {
                index: v,
                len: self.vertices.len(),
            });
        }
        let mut vertices = self.vertices.clone();
        vertices[v] = p;
        Mesh2::new(vertices, self.triangles.clone())
    }

    /// New revision with the diagonal of the quad formed by the two triangles
    /// incident to edge `(a, b)` flipped. The quad must be convex: on a
    /// concave quad the flipped triangles would overlap, which orientation
    /// normalization would silently hide.
    pub fn with_edge_flipped(&self, a: usize, b: usize) -> Result<Mesh2> {
        let incident = self.edge_triangles(a, b);
        if incident.len() != 2 {
            return Err(Error::InadmissibleMove {
                reason: format!("edge ({a}, {b}) is not shared by exactly two triangles"),
            });
        }
        let (t0, t1) = (incident[0], incident[1]);
        let opposite = |t: usize| -> usize {
            *self.triangles[t]
                .v
                .iter()
                .find(|&&vi| vi != a && vi != b)
                .expect("triangle has a vertex off the edge")
        };
        let (c, d) = (opposite(t0), opposite(t1));
        // Convexity: c and d on opposite sides of ab, a and b on opposite
        // sides of cd.
        let (pa, pb, pc, pd) = (
            self.vertices[a],
            self.vertices[b],
            self.vertices[c],
            self.vertices[d],
        );
        let side_ab = (pb - pa).cross(pc - pa) * (pb - pa).cross(pd - pa);
        let side_cd = (pd - pc).cross(pa - pc) * (pd - pc).cross(pb - pc);
        if side_ab >= 0.0 || side_cd >= 0.0 {
            return Err(Error::InadmissibleMove {
                reason: format!("edge ({a}, {b}): the surrounding quad is not strictly convex"),
            });
        }
        let mut triangles = self.triangles.clone();
        triangles[t0] = Triangle::new(c, a, d);
        triangles[t1] = Triangle::new(d, b, c);
        Mesh2::new(self.vertices.clone(), triangles)
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        super::polygon::bounding_box(&self.vertices)
    }

    /// New revision with every vertex rotated by `rotation_rad` about the
    /// origin and translated. Connectivity is unchanged.
    pub fn transformed(&self, rotation_rad: f64, translation: crate::algebra::Vec2) -> Mesh2 {
        let (c, s) = (rotation_rad.cos(), rotation_rad.sin());
        let vertices = self
            .vertices
            .iter()
            .map(|p| {
                Point2::new(
                    c * p.x - s * p.y + translation.x,
                    s * p.x + c * p.y + translation.y,
                )
            })
            .collect();
        Mesh2::new(vertices, self.triangles.clone()).expect("rigid motions preserve validity")
    }
}

/// Per-triangle geometric quantities.
#[derive(Debug, Clone, Copy)]
pub struct TriangleMetrics {
    pub area: f64,
    /// Edge lengths; `edge_lengths[i]` is opposite vertex `i`.
    pub edge_lengths: [f64; 3],
    /// Interior angles in degrees; `angles_deg[i]` is at vertex `i`.
    pub angles_deg: [f64; 3],
    /// Smallest height: `2 * area / longest edge`.
    pub min_height: f64,
}

impl TriangleMetrics {
    pub fn min_angle_deg(&self) -> f64 {
        self.angles_deg.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths.iter().sum()
    }
}

/// Computes area, edge lengths, angles and the minimum height of a triangle.
pub fn triangle_metrics(mesh: &Mesh2, t: usize) -> Result<TriangleMetrics> {
    if t >= mesh.n_triangles() {
        return Err(Error::IndexOutOfBounds {
            index: t,
            len: mesh.n_triangles(),
        });
    }
    triangle_metrics_from_points(&mesh.tri_points(t), t)
}

pub fn triangle_metrics_from_points(pts: &[Point2; 3], t: usize) -> Result<TriangleMetrics> {
    let [a, b, c] = *pts;
    let area = 0.5 * (b - a).cross(c - a).abs();
    // edge i is opposite vertex i
    let edge_lengths = [(c - b).norm(), (a - c).norm(), (b - a).norm()];
    let max_edge = edge_lengths.iter().cloned().fold(0.0, f64::max);
    if area <= 1e-14 * max_edge * max_edge || max_edge == 0.0 {
        return Err(Error::DegenerateTriangle { tri: t, area });
    }
    let angle_at = |p: Point2, q: Point2, r: Point2| -> f64 {
        let u = q - p;
        let v = r - p;
        let cos = u.dot(v) / (u.norm() * v.norm());
        cos.clamp(-1.0, 1.0).acos().to_degrees()
    };
    let angles_deg = [angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)];
    Ok(TriangleMetrics {
        area,
        edge_lengths,
        angles_deg,
        min_height: 2.0 * area / max_edge,
    })
}
