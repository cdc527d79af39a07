//! Mesh representation, admissibility validation and slicing geometry.

use std::ops::{Add, Sub};

use crate::algebra::Vec2;

pub mod admissibility;
pub mod generate;
pub mod mesh;
pub mod polygon;
pub mod slicing;

pub use admissibility::{
    classify_pair, conformity_defects, validate_admissible, AdmissibilityParams, ConformityDefect,
    PairRelation, ValidationReport, Violation,
};
pub use generate::{jittered_grid, structured_grid};
pub use mesh::{triangle_metrics, triangle_metrics_from_points, Mesh2, Triangle, TriangleMetrics};
pub use polygon::{DomainPair, DomainPolygon, DomainRole};
pub use slicing::{
    project_p_xi, project_p_xi_triangle, project_phi, section, Section, SliceFrame,
};

/// A point of the plane. Domain coordinates are measured in the same units
/// as the mesh size `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn to_vec(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Sub for Point2 {
    type Output = Vec2;
    fn sub(self, o: Point2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Add<Vec2> for Point2 {
    type Output = Point2;
    fn add(self, v: Vec2) -> Point2 {
        Point2::new(self.x + v.x, self.y + v.y)
    }
}

impl Sub<Vec2> for Point2 {
    type Output = Point2;
    fn sub(self, v: Vec2) -> Point2 {
        Point2::new(self.x - v.x, self.y - v.y)
    }
}
