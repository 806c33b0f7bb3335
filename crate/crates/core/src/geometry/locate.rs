use crate::geometry::domain::Point;
use crate::geometry::mesh::Mesh;

/// Uniform-grid spatial index for point-in-triangle queries.
#[derive(Debug, Clone)]
pub struct Locator {
    min: Point,
    inv_cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl Locator {
    pub fn build(mesh: &Mesh) -> Locator {
        let nodes = mesh.nodes();
        let (mut lo, mut hi) = (nodes[0], nodes[0]);
        for p in nodes {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cell = (2.0 * mesh.h_max()).max(1e-12);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (mut tlo, mut thi) = (nodes[tri[0]], nodes[tri[0]]);
            for &v in &tri[1..] {
                tlo = Point::new(tlo.x.min(nodes[v].x), tlo.y.min(nodes[v].y));
                thi = Point::new(thi.x.max(nodes[v].x), thi.y.max(nodes[v].y));
            }
            let i0 = (((tlo.x - lo.x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let i1 = (((thi.x - lo.x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let j0 = (((tlo.y - lo.y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            let j1 = (((thi.y - lo.y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(t as u32);
                }
            }
        }
        Locator { min: lo, inv_cell: 1.0 / cell, nx, ny, cells }
    }

    /// Triangle containing `x` plus its barycentric coordinates, or None if
    /// `x` lies outside the mesh (beyond a small tolerance).
    pub fn locate(&self, mesh: &Mesh, x: Point) -> Option<(usize, [f64; 3])> {
        let i = (((x.x - self.min.x) * self.inv_cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let j = (((x.y - self.min.y) * self.inv_cell).floor() as isize).clamp(0, self.ny as isize - 1);
        // Search the containing cell first, then the 3x3 patch around it.
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for ring in 0..2isize {
            for dj in -ring..=ring {
                for di in -ring..=ring {
                    if ring == 1 && di.abs() != 1 && dj.abs() != 1 {
                        continue;
                    }
                    let (ci, cj) = (i + di, j + dj);
                    if ci < 0 || cj < 0 || ci >= self.nx as isize || cj >= self.ny as isize {
                        continue;
                    }
                    for &t in &self.cells[(cj as usize) * self.nx + ci as usize] {
                        let bary = barycentric(mesh, t as usize, x);
                        let worst = bary[0].min(bary[1]).min(bary[2]);
                        if worst >= 0.0 {
                            return Some((t as usize, bary));
                        }
                        if best.map_or(true, |(_, _, w)| worst > w) {
                            best = Some((t as usize, bary, worst));
                        }
                    }
                }
            }
            if ring == 0 {
                if let Some((t, bary, worst)) = best {
                    if worst > -1e-9 {
                        return Some((t, clamp_bary(bary)));
                    }
                }
            }
        }
        best.and_then(|(t, bary, worst)| (worst > -1e-9).then(|| (t, clamp_bary(bary))))
    }
}

fn clamp_bary(mut b: [f64; 3]) -> [f64; 3] {
    for v in &mut b {
        *v = v.max(0.0);
    }
    let s = b[0] + b[1] + b[2];
    [b[0] / s, b[1] / s, b[2] / s]
}

pub fn barycentric(mesh: &Mesh, t: usize, x: Point) -> [f64; 3] {
    let [a, b, c] = mesh.triangles()[t];
    let (pa, pb, pc) = (mesh.node(a), mesh.node(b), mesh.node(c));
    let area2 = (pb - pa).cross(pc - pa);
    let la = (pb - x).cross(pc - x) / area2;
    let lb = (pc - x).cross(pa - x) / area2;
    [la, lb, 1.0 - la - lb]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::Domain;
    use crate::geometry::mesh::build_mesh;

    #[test]
    fn locates_interior_points() {
        let mesh = build_mesh(&Domain::disk(1.0).unwrap(), 0.2).unwrap();
        let loc = Locator::build(&mesh);
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.4), (0.9, 0.0), (-0.2, 0.7)] {
            let p = Point::new(x, y);
            let (t, bary) = loc.locate(&mesh, p).expect("point should be found");
            let [a, b, c] = mesh.triangles()[t];
            let rec = mesh.node(a).scale(bary[0])
                + mesh.node(b).scale(bary[1])
                + mesh.node(c).scale(bary[2]);
            assert!(rec.dist(p) < 1e-12);
        }
        assert!(loc.locate(&mesh, Point::new(2.0, 0.0)).is_none());
    }
}
