use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, twice the signed area of (0, self, other).
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Shape of the computational domain.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disk { radius: f64 },
    Rectangle { a: f64, b: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A bounded planar domain with a human-readable label.
///
/// Disks are centered at the origin; rectangles occupy (0,a) x (0,b) with
/// the short side along x.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Domain {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub label: String,
}

impl Domain {
    pub fn disk(radius: f64) -> Result<Domain> {
        Domain::new(Shape::Disk { radius }, "disk")
    }

    pub fn rectangle(a: f64, b: f64) -> Result<Domain> {
        Domain::new(Shape::Rectangle { a, b }, "rectangle")
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Domain> {
        Domain::new(Shape::Polygon { vertices }, "polygon")
    }

    pub fn new(shape: Shape, label: impl Into<String>) -> Result<Domain> {
        let domain = Domain {
            shape,
            label: label.into(),
        };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Disk { radius } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidDomain(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
            }
            Shape::Rectangle { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *a <= *b) {
                    return Err(Error::InvalidDomain(format!(
                        "rectangle sides must satisfy 0 < a <= b, got a={a}, b={b}"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidDomain(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
                    return Err(Error::InvalidDomain("polygon vertex not finite".into()));
                }
                let area = polygon_signed_area(vertices);
                if area <= 0.0 {
                    return Err(Error::InvalidDomain(format!(
                        "polygon must be counter-clockwise with positive area, signed area {area}"
                    )));
                }
                if !polygon_is_simple(vertices) {
                    return Err(Error::InvalidDomain(
                        "polygon boundary is self-intersecting".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Exact area of the described domain (disk area is the true circle's).
    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius } => std::f64::consts::PI * radius * radius,
            Shape::Rectangle { a, b } => a * b,
            Shape::Polygon { vertices } => polygon_signed_area(vertices),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius } => 2.0 * radius,
            Shape::Rectangle { a, b } => a.hypot(*b),
            Shape::Polygon { vertices } => {
                let mut d = 0.0f64;
                for (i, v) in vertices.iter().enumerate() {
                    for w in vertices.iter().skip(i + 1) {
                        d = d.max((v[0] - w[0]).hypot(v[1] - w[1]));
                    }
                }
                d
            }
        }
    }

    /// The boundary as an ordered counter-clockwise vertex loop, with
    /// curved boundaries discretized at edge length <= `h`.
    pub fn boundary_polygon(&self, h: f64) -> Vec<Point> {
        match &self.shape {
            Shape::Disk { radius } => {
                let n = ((2.0 * std::f64::consts::PI * radius) / h).ceil().max(12.0) as usize;
                (0..n)
                    .map(|k| {
                        let t = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
                        Point::new(radius * t.cos(), radius * t.sin())
                    })
                    .collect()
            }
            Shape::Rectangle { a, b } => vec![
                Point::new(0.0, 0.0),
                Point::new(*a, 0.0),
                Point::new(*a, *b),
                Point::new(0.0, *b),
            ],
            Shape::Polygon { vertices } => {
                vertices.iter().map(|v| Point::new(v[0], v[1])).collect()
            }
        }
    }

    /// Strict JSON parse: rejects unknown keys and invalid shapes.
    pub fn from_json(text: &str) -> Result<Domain> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidDomain("domain spec must be a JSON object".into()))?;
        let kind = obj
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::InvalidDomain("missing \"kind\" key".into()))?;
        let allowed: &[&str] = match kind {
            "disk" => &["kind", "radius", "label"],
            "rectangle" => &["kind", "a", "b", "label"],
            "polygon" => &["kind", "vertices", "label"],
            other => {
                return Err(Error::InvalidDomain(format!("unknown domain kind {other:?}")));
            }
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidDomain(format!(
                    "unknown key {key:?} in {kind} domain spec"
                )));
            }
        }
        let domain: Domain = serde_json::from_value(value)?;
        domain.validate()?;
        Ok(domain)
    }
}

pub fn polygon_signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice
}

/// True when no two non-adjacent edges of the closed loop intersect.
fn polygon_is_simple(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let p = |i: usize| Point::new(vertices[i % n][0], vertices[i % n][1]);
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip shared-endpoint pairs.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            if segments_intersect(p(i), p(i + 1), p(j), p(j + 1)) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q - p).cross(r - p);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        orient(p, q, r) == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(Domain::disk(0.0).is_err());
        assert!(Domain::rectangle(2.0, 1.0).is_err());
        assert!(Domain::rectangle(-1.0, 1.0).is_err());
        // clockwise square
        assert!(Domain::polygon(vec![[0., 0.], [0., 1.], [1., 1.], [1., 0.]]).is_err());
        // bow tie
        assert!(Domain::polygon(vec![[0., 0.], [1., 1.], [1., 0.], [0., 1.]]).is_err());
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let d = Domain::from_json(r#"{"kind":"rectangle","a":1.0,"b":10.0,"label":"thin"}"#)
            .unwrap();
        assert_eq!(d.area(), 10.0);
        assert_eq!(d.label, "thin");
        assert!(Domain::from_json(r#"{"kind":"rectangle","a":1.0,"b":10.0,"c":3}"#).is_err());
        assert!(Domain::from_json(r#"{"kind":"blob"}"#).is_err());
        assert!(Domain::from_json(r#"{"kind":"disk","radius":-2.0}"#).is_err());
    }
}
