//! Simplicial submesh used as quadrature support, plus shape-regularity diagnostics.

use nalgebra::Point2;
use rayon::prelude::*;

use super::PolyMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub points: [Point2<f64>; 3],
}

impl Triangle {
    pub fn new(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> Self {
        Self { points: [a, b, c] }
    }

    /// Signed area, positive for counterclockwise vertices.
    pub fn area(&self) -> f64 {
        let [a, b, c] = self.points;
        0.5 * ((b - a).perp(&(c - a)))
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.points;
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    pub fn inradius(&self) -> f64 {
        let [a, b, c] = self.points;
        let perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
        2.0 * self.area().abs() / perimeter
    }

    /// Maps reference coordinates `(s, t)` on the unit triangle to physical space.
    pub fn map(&self, s: f64, t: f64) -> Point2<f64> {
        let [a, b, c] = self.points;
        a + (b - a) * s + (c - a) * t
    }
}

/// Per-element triangles covering each element exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTriangulation {
    triangles: Vec<Vec<Triangle>>,
}

impl SubTriangulation {
    pub fn element(&self, e: usize) -> &[Triangle] {
        &self.triangles[e]
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Triangle]> {
        self.triangles.iter().map(Vec::as_slice)
    }
}

/// Triangulates one element: the element itself if it is a triangle, else a
/// barycenter fan, else (for fans with a non-positive triangle) ear clipping.
pub fn triangulate_element(mesh: &PolyMesh, e: usize) -> Result<Vec<Triangle>> {
    let pts = mesh.element_points(e);
    let el = mesh.element(e);
    let tol = 1e-14 * el.diameter * el.diameter;
    if pts.len() == 3 {
        return Ok(vec![Triangle::new(pts[0], pts[1], pts[2])]);
    }
    let n = pts.len();
    let fan: Vec<Triangle> =
        (0..n).map(|i| Triangle::new(el.centroid, pts[i], pts[(i + 1) % n])).collect();
    if fan.iter().all(|t| t.area() > tol) {
        return Ok(fan);
    }
    ear_clip(&pts, tol).ok_or_else(|| Error::Triangulation {
        element: e,
        message: "ear clipping found no valid ear".into(),
    })
}

fn ear_clip(pts: &[Point2<f64>], tol: f64) -> Option<Vec<Triangle>> {
    // straight-angle vertices carry no area and would leave degenerate ears
    let mut poly: Vec<Point2<f64>> = Vec::with_capacity(pts.len());
    let n = pts.len();
    for i in 0..n {
        let (p, c, q) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
        if Triangle::new(p, c, q).area().abs() > tol {
            poly.push(c);
        }
    }
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while poly.len() > 3 {
        let m = poly.len();
        let ear = (0..m).find(|&i| {
            let t = Triangle::new(poly[(i + m - 1) % m], poly[i], poly[(i + 1) % m]);
            t.area() > tol
                && poly.iter().enumerate().all(|(j, p)| {
                    j == i || j == (i + 1) % m || j == (i + m - 1) % m || !contains(&t, p)
                })
        })?;
        out.push(Triangle::new(poly[(ear + m - 1) % m], poly[ear], poly[(ear + 1) % m]));
        poly.remove(ear);
    }
    let last = Triangle::new(poly[0], poly[1], poly[2]);
    (last.area() > tol).then(|| {
        out.push(last);
        out
    })
}

fn contains(t: &Triangle, p: &Point2<f64>) -> bool {
    let [a, b, c] = t.points;
    let d1 = (b - a).perp(&(p - a));
    let d2 = (c - b).perp(&(p - b));
    let d3 = (a - c).perp(&(p - c));
    d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
}

pub fn subtriangulate(mesh: &PolyMesh) -> Result<SubTriangulation> {
    let triangles = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| triangulate_element(mesh, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubTriangulation { triangles })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// `min r_S / h_S` over all subtriangles.
    pub min_inradius_ratio: f64,
    /// `min h_S / h_T` over all subtriangles `S` of `T`.
    pub min_size_ratio: f64,
    pub max_faces_per_element: usize,
    pub h: f64,
}

pub fn regularity_report(mesh: &PolyMesh) -> Result<RegularityReport> {
    let sub = subtriangulate(mesh)?;
    let (mut rho, mut size) = (f64::INFINITY, f64::INFINITY);
    for (e, tris) in sub.iter().enumerate() {
        let ht = mesh.element(e).diameter;
        for t in tris {
            rho = rho.min(t.inradius() / t.diameter());
            size = size.min(t.diameter() / ht);
        }
    }
    Ok(RegularityReport {
        min_inradius_ratio: rho,
        min_size_ratio: size,
        max_faces_per_element: mesh.max_faces_per_element(),
        h: mesh.mesh_size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, generate_hexagonal, generate_nonmatching, generate_voronoi};

    fn check_cover(mesh: &PolyMesh) {
        let sub = subtriangulate(mesh).unwrap();
        for (e, tris) in sub.iter().enumerate() {
            let total: f64 = tris.iter().map(Triangle::area).sum();
            let m = mesh.element(e).measure;
            assert!(tris.iter().all(|t| t.area() > 0.0));
            assert!((total - m).abs() <= 1e-12 * m, "element {e}: {total} vs {m}");
        }
    }

    #[test]
    fn square_fans_into_four() {
        let m = generate_cartesian(1).unwrap();
        let sub = subtriangulate(&m).unwrap();
        assert_eq!(sub.element(0).len(), 4);
        check_cover(&m);
    }

    #[test]
    fn triangle_is_kept() {
        let m = PolyMesh::from_polygons(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![vec![0, 1, 2]], None)
            .unwrap();
        let sub = subtriangulate(&m).unwrap();
        assert_eq!(sub.element(0).len(), 1);
        assert_eq!(sub.element(0)[0].area(), 0.5);
    }

    #[test]
    fn regular_hexagon() {
        let v: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let m = PolyMesh::from_polygons(v, vec![(0..6).collect()], None).unwrap();
        let sub = subtriangulate(&m).unwrap();
        assert_eq!(sub.element(0).len(), 6);
        let total: f64 = sub.element(0).iter().map(Triangle::area).sum();
        assert!((total - 1.5 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn nonconvex_falls_back_to_ear_clipping() {
        // thin L-shape: the barycenter fan produces a negative triangle
        let v = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 0.2], [0.2, 0.2], [0.2, 3.0], [0.0, 3.0]];
        let m = PolyMesh::from_polygons(v, vec![(0..6).collect()], None).unwrap();
        let tris = triangulate_element(&m, 0).unwrap();
        assert_eq!(tris.len(), 4);
        check_cover(&m);
    }

    #[test]
    fn families_are_covered() {
        check_cover(&generate_hexagonal(8).unwrap());
        check_cover(&generate_nonmatching(4).unwrap());
        check_cover(&generate_voronoi(50, 3).unwrap());
    }

    #[test]
    fn report_values() {
        let r = regularity_report(&generate_cartesian(4).unwrap()).unwrap();
        assert_eq!(r.max_faces_per_element, 4);
        let r1 = regularity_report(&generate_cartesian(1).unwrap()).unwrap();
        assert!((r1.h - 2f64.sqrt()).abs() < 1e-15);
        // fan triangle of a square: legs s/sqrt2, hypotenuse s
        let expect = (2f64.sqrt() - 1.0) / 2.0;
        assert!((r1.min_inradius_ratio - expect).abs() < 1e-14);
        assert!((r1.min_size_ratio - 1.0 / 2f64.sqrt()).abs() < 1e-14);
    }
}
