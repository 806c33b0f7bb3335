use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::domain::{Domain, Point, Shape};

/// Conforming triangulation of a domain.
///
/// All triangles are counter-clockwise. Boundary nodes are exactly the nodes
/// incident to an edge shared by a single triangle.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain,
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
    node_triangles: Vec<Vec<u32>>,
    h_max: f64,
}

impl Mesh {
    fn from_parts(domain: Domain, nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        for tri in &mut triangles {
            let [a, b, c] = *tri;
            let area2 = (nodes[b] - nodes[a]).cross(nodes[c] - nodes[a]);
            if area2 == 0.0 {
                return Err(Error::Mesh("degenerate (zero area) triangle".into()));
            }
            if area2 < 0.0 {
                tri.swap(1, 2);
            }
        }

        // Boundary = edges seen by exactly one triangle.
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut is_boundary = vec![false; nodes.len()];
        for (&(u, v), &count) in &edge_count {
            match count {
                1 => {
                    is_boundary[u] = true;
                    is_boundary[v] = true;
                }
                2 => {}
                n => {
                    return Err(Error::Mesh(format!("non-manifold edge used {n} times")));
                }
            }
        }
        let mut boundary_nodes: Vec<usize> =
            (0..nodes.len()).filter(|&i| is_boundary[i]).collect();
        boundary_nodes.sort_unstable();

        let mut node_triangles = vec![Vec::new(); nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                node_triangles[v].push(t as u32);
            }
        }

        let mut h_max = 0.0f64;
        for tri in &triangles {
            for k in 0..3 {
                h_max = h_max.max(nodes[tri[k]].dist(nodes[tri[(k + 1) % 3]]));
            }
        }

        Ok(Mesh {
            domain,
            nodes,
            triangles,
            boundary_nodes,
            is_boundary,
            node_triangles,
            h_max,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Triangles incident to a node.
    pub fn triangles_of(&self, node: usize) -> &[u32] {
        &self.node_triangles[node]
    }

    /// Distinct nodes connected to `node` by an edge.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &t in &self.node_triangles[node] {
            for &v in &self.triangles[t as usize] {
                if v != node && !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * (self.nodes[b] - self.nodes[a]).cross(self.nodes[c] - self.nodes[a])
    }

    /// Total mesh area (the area of the meshed polygonal approximation).
    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Uniform refinement: every triangle splits into four via edge
    /// midpoints. Halves `h_max` and leaves the covered polygon unchanged.
    pub fn refine(&self) -> Mesh {
        let mut nodes = self.nodes.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |u: usize, v: usize, nodes: &mut Vec<Point>| -> usize {
            let key = (u.min(v), u.max(v));
            *midpoint.entry(key).or_insert_with(|| {
                nodes.push((nodes[u] + nodes[v]).scale(0.5));
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for tri in &self.triangles {
            let [a, b, c] = *tri;
            let ab = mid(a, b, &mut nodes);
            let bc = mid(b, c, &mut nodes);
            let ca = mid(c, a, &mut nodes);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        Mesh::from_parts(self.domain.clone(), nodes, triangles)
            .expect("refinement of a valid mesh stays valid")
    }

    /// Minimal distance from `x` to the (polygonal) mesh boundary.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        let poly = self.domain.boundary_polygon(self.h_max);
        let mut d = f64::INFINITY;
        let n = poly.len();
        for i in 0..n {
            d = d.min(segment_distance(poly[i], poly[(i + 1) % n], x));
        }
        d
    }
}

fn segment_distance(a: Point, b: Point, x: Point) -> f64 {
    let ab = b - a;
    let t = ((x - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    (x - (a + ab.scale(t))).norm()
}

/// Builds a conforming triangulation with `h_max <= 1.5 * h_target`.
///
/// Disks get a structured polar mesh whose boundary is an inscribed polygon
/// with edge length <= h_target; rectangles a crisscross grid with a node at
/// the center; polygons an ear-clip triangulation refined by longest-edge
/// bisection and smoothed.
pub fn build_mesh(domain: &Domain, h_target: f64) -> Result<Mesh> {
    domain.validate()?;
    if !(h_target > 0.0) || h_target >= domain.diameter() {
        return Err(Error::Mesh(format!(
            "h_target {h_target} must lie in (0, diameter)"
        )));
    }
    match &domain.shape {
        Shape::Disk { radius } => disk_mesh(domain.clone(), *radius, h_target),
        Shape::Rectangle { a, b } => rectangle_mesh(domain.clone(), *a, *b, h_target),
        Shape::Polygon { vertices } => polygon_mesh(domain.clone(), vertices, h_target),
    }
}

/// Polar mesh: rings of 6i nodes around a center node.
fn disk_mesh(domain: Domain, radius: f64, h: f64) -> Result<Mesh> {
    use std::f64::consts::PI;
    // Boundary ring has 6n nodes with edge ~ pi R/(3n) <= h; the inter-ring
    // merge near the center makes edges up to ~1.73 R/n, so the ring count
    // keeps both below their bounds.
    let n = ((1.2 * radius) / h).ceil().max(2.0) as usize;
    let mut nodes = vec![Point::new(0.0, 0.0)];
    let mut ring_start = vec![0usize; n + 1];
    for i in 1..=n {
        ring_start[i] = nodes.len();
        let m = 6 * i;
        let r = radius * (i as f64) / (n as f64);
        for k in 0..m {
            let t = 2.0 * PI * (k as f64) / (m as f64);
            nodes.push(Point::new(r * t.cos(), r * t.sin()));
        }
    }
    let mut triangles = Vec::new();
    // Innermost fan.
    for k in 0..6 {
        triangles.push([0, ring_start[1] + k, ring_start[1] + (k + 1) % 6]);
    }
    // Merge consecutive rings by advancing whichever pointer has the node
    // of smaller angle next; yields exactly 6i + 6(i-1) triangles.
    for i in 2..=n {
        let (inner, outer) = (ring_start[i - 1], ring_start[i]);
        let (ni, no) = (6 * (i - 1), 6 * i);
        let (mut ii, mut io) = (0usize, 0usize);
        while io < no || ii < ni {
            // Compare fractional angles (io+1)/no vs (ii+1)/ni in integers.
            let advance_outer = io < no && (ii >= ni || (io + 1) * ni <= (ii + 1) * no);
            if advance_outer {
                triangles.push([outer + io % no, outer + (io + 1) % no, inner + ii % ni]);
                io += 1;
            } else {
                triangles.push([outer + io % no, inner + (ii + 1) % ni, inner + ii % ni]);
                ii += 1;
            }
        }
    }
    Mesh::from_parts(domain, nodes, triangles)
}

/// Crisscross grid with even subdivision counts so the center is a node.
fn rectangle_mesh(domain: Domain, a: f64, b: f64, h: f64) -> Result<Mesh> {
    let nx = 2 * ((a / (2.0 * h)).ceil().max(1.0) as usize);
    let ny = 2 * ((b / (2.0 * h)).ceil().max(1.0) as usize);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point::new(
                a * (i as f64) / (nx as f64),
                b * (j as f64) / (ny as f64),
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            } else {
                triangles.push([p00, p10, p01]);
                triangles.push([p10, p11, p01]);
            }
        }
    }
    Mesh::from_parts(domain, nodes, triangles)
}

fn polygon_mesh(domain: Domain, vertices: &[[f64; 2]], h: f64) -> Result<Mesh> {
    let nodes: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
    let triangles = ear_clip(&nodes)?;
    let (mut nodes, mut triangles) = (nodes, triangles);
    bisect_to_target(&mut nodes, &mut triangles, 1.45 * h);
    smooth_interior(&mut nodes, &triangles, 20);
    Mesh::from_parts(domain, nodes, triangles)
}

/// Ear clipping for a simple CCW polygon.
fn ear_clip(nodes: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut ring: Vec<usize> = (0..nodes.len()).collect();
    let mut triangles = Vec::new();
    let mut guard = 0usize;
    while ring.len() > 3 {
        let n = ring.len();
        let mut clipped = false;
        for k in 0..n {
            let (ip, ic, inx) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
            let (p, c, q) = (nodes[ip], nodes[ic], nodes[inx]);
            if (c - p).cross(q - c) <= 0.0 {
                continue; // reflex corner
            }
            let mut contains = false;
            for &other in &ring {
                if other == ip || other == ic || other == inx {
                    continue;
                }
                if point_in_triangle(nodes[other], p, c, q) {
                    contains = true;
                    break;
                }
            }
            if !contains {
                triangles.push([ip, ic, inx]);
                ring.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            guard += 1;
            if guard > nodes.len() {
                return Err(Error::Mesh("ear clipping failed on polygon".into()));
            }
        }
    }
    triangles.push([ring[0], ring[1], ring[2]]);
    Ok(triangles)
}

fn point_in_triangle(x: Point, a: Point, b: Point, c: Point) -> bool {
    let s0 = (b - a).cross(x - a);
    let s1 = (c - b).cross(x - b);
    let s2 = (a - c).cross(x - c);
    s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0
}

/// Rivara-style longest-edge bisection until every edge is <= target.
fn bisect_to_target(nodes: &mut Vec<Point>, triangles: &mut Vec<[usize; 3]>, target: f64) {
    loop {
        let mut too_long: Vec<(f64, usize)> = (0..triangles.len())
            .filter_map(|t| {
                let (len, _) = longest_edge(nodes, triangles[t]);
                (len > target).then_some((len, t))
            })
            .collect();
        if too_long.is_empty() {
            break;
        }
        // Longest first so conformity cascades terminate quickly.
        too_long.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, t) in too_long {
            if longest_edge(nodes, triangles[t]).0 > target {
                bisect_triangle(nodes, triangles, t);
            }
        }
    }
}

fn longest_edge(nodes: &[Point], tri: [usize; 3]) -> (f64, usize) {
    let mut best = (0.0f64, 0usize);
    for k in 0..3 {
        let len = nodes[tri[k]].dist(nodes[tri[(k + 1) % 3]]);
        if len > best.0 {
            best = (len, k);
        }
    }
    best
}

/// Bisects triangle `t` across its longest edge, splitting the neighbor
/// sharing that edge as well to keep the mesh conforming.
fn bisect_triangle(nodes: &mut Vec<Point>, triangles: &mut Vec<[usize; 3]>, t: usize) {
    let tri = triangles[t];
    let (_, k) = longest_edge(nodes, tri);
    let (u, v, w) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
    let neighbor = (0..triangles.len()).find(|&s| {
        s != t && triangles[s].contains(&u) && triangles[s].contains(&v)
    });
    let m = nodes.len();
    nodes.push((nodes[u] + nodes[v]).scale(0.5));
    triangles[t] = [u, m, w];
    triangles.push([m, v, w]);
    if let Some(s) = neighbor {
        let stri = triangles[s];
        let z = stri.iter().copied().find(|&z| z != u && z != v).unwrap();
        triangles[s] = [u, z, m];
        triangles.push([m, z, v]);
    }
}

/// Laplacian smoothing of interior nodes; rejects sweeps that would flip
/// any incident triangle.
fn smooth_interior(nodes: &mut [Point], triangles: &[[usize; 3]], sweeps: usize) {
    let n = nodes.len();
    let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (u, v) = (tri[k], tri[(k + 1) % 3]);
            *edge_count.entry((u.min(v), u.max(v))).or_insert(0) += 1;
        }
    }
    let mut interior = vec![true; n];
    for (&(u, v), &c) in &edge_count {
        if c == 1 {
            interior[u] = false;
            interior[v] = false;
        }
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in edge_count.keys() {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    let mut node_tris = vec![Vec::new(); n];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            node_tris[v].push(t);
        }
    }
    for _ in 0..sweeps {
        for i in 0..n {
            if !interior[i] || adjacency[i].is_empty() {
                continue;
            }
            let mut avg = Point::new(0.0, 0.0);
            for &j in &adjacency[i] {
                avg = avg + nodes[j];
            }
            let candidate = avg.scale(1.0 / adjacency[i].len() as f64);
            let old = nodes[i];
            nodes[i] = candidate;
            let ok = node_tris[i].iter().all(|&t| {
                let [a, b, c] = triangles[t];
                (nodes[b] - nodes[a]).cross(nodes[c] - nodes[a]) > 1e-14
            });
            if !ok {
                nodes[i] = old;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::polygon_signed_area;

    #[test]
    fn disk_mesh_area_and_h() {
        let domain = Domain::disk(1.0).unwrap();
        let mesh = build_mesh(&domain, 0.1).unwrap();
        let area = mesh.area();
        assert!((area - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.01);
        assert!(mesh.h_max() <= 1.5 * 0.1, "h_max = {}", mesh.h_max());
        // center node present
        assert!(mesh.node(0).norm() == 0.0);
        // boundary nodes on the unit circle
        for &b in mesh.boundary_nodes() {
            assert!((mesh.node(b).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rectangle_mesh_is_exact() {
        let domain = Domain::rectangle(1.0, 2.0).unwrap();
        let mesh = build_mesh(&domain, 0.1).unwrap();
        assert!((mesh.area() - 2.0).abs() < 1e-12);
        assert!(mesh.h_max() <= 0.15);
        // center is a node
        assert!(mesh
            .nodes()
            .iter()
            .any(|p| (p.x - 0.5).abs() < 1e-14 && (p.y - 1.0).abs() < 1e-14));
    }

    #[test]
    fn refine_halves_h_and_keeps_area() {
        let domain = Domain::rectangle(1.0, 1.0).unwrap();
        let mesh = build_mesh(&domain, 0.5).unwrap();
        let fine = mesh.refine();
        assert!((fine.h_max() - 0.5 * mesh.h_max()).abs() < 1e-14);
        assert!((fine.area() - mesh.area()).abs() < 1e-13);

        let disk = build_mesh(&Domain::disk(1.0).unwrap(), 0.2).unwrap();
        let disk_fine = disk.refine();
        assert!((disk_fine.area() - disk.area()).abs() < 1e-12);
        assert!((disk_fine.h_max() - 0.5 * disk.h_max()).abs() < 1e-14);
    }

    #[test]
    fn polygon_mesh_covers_polygon() {
        let verts = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.5, 1.5], [0.0, 1.0]];
        let domain = Domain::polygon(verts.clone()).unwrap();
        let mesh = build_mesh(&domain, 0.15).unwrap();
        let exact = polygon_signed_area(&verts);
        assert!((mesh.area() - exact).abs() < 1e-12);
        assert!(mesh.h_max() <= 1.5 * 0.15);
        for t in 0..mesh.triangles().len() {
            assert!(mesh.triangle_area(t) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_h() {
        let domain = Domain::disk(1.0).unwrap();
        assert!(build_mesh(&domain, 0.0).is_err());
        assert!(build_mesh(&domain, 5.0).is_err());
    }
}
