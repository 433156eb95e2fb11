//! Two-dimensional polygonal meshes with full face topology.
//!
//! A [`PolyMesh`] is built from counterclockwise vertex loops. Edges are
//! deduplicated into faces; each face remembers the element that created it
//! (`owner`, the `T1` side) and, for interfaces, the second incident element
//! (`neighbor`, the `T2` side). The face normal always points out of the
//! owner, so `n_{T1,F} = n_F` and `n_{T2,F} = -n_F`.
//!
//! Vertices lying in the interior of another element's edge (hanging nodes)
//! split that edge, so a coarse cell abutting two fine cells carries one face
//! per fine neighbor.

mod generate;
mod io;
mod subtri;

use std::collections::HashMap;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

pub use generate::{
    generate_cartesian, generate_hexagonal, generate_nonmatching, generate_triangular,
    generate_voronoi, MeshFamily,
};
pub use io::{load_mesh, save_native, write_stats_csv, MeshFormat, NativeMesh};
pub use subtri::{regularity_report, subtriangulate, RegularityReport, SubTriangulation, Triangle};

/// Relative tolerance used to detect hanging nodes on element edges.
const HANGING_NODE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    /// Element `T1`, the one the normal points out of.
    pub owner: usize,
    /// Element `T2`; `None` for boundary faces.
    pub neighbor: Option<usize>,
    pub normal: Vector2<f64>,
    pub tangent: Vector2<f64>,
    pub midpoint: Point2<f64>,
    /// Length of the face, which is also its diameter `h_F`.
    pub measure: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }

    pub fn diameter(&self) -> f64 {
        self.measure
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Counterclockwise vertex loop, including hanging nodes.
    pub vertices: Vec<usize>,
    /// Face ids, `faces[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub faces: Vec<usize>,
    /// `+1` when this element owns `faces[i]`, `-1` otherwise.
    pub orientations: Vec<f64>,
    pub measure: f64,
    pub centroid: Point2<f64>,
    pub diameter: f64,
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point2<f64>>,
    elements: Vec<Element>,
    faces: Vec<Face>,
}

fn signed_area(points: &[Point2<f64>]) -> f64 {
    let n = points.len();
    let mut area = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        area += a.x * b.y - b.x * a.y;
    }
    0.5 * area
}

fn polygon_centroid(points: &[Point2<f64>], area: f64) -> Point2<f64> {
    let n = points.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let cross = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    Point2::new(cx / (6.0 * area), cy / (6.0 * area))
}

fn polygon_diameter(points: &[Point2<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((b - a).norm());
        }
    }
    d
}

/// Uniform bucket grid used to find vertices lying on element edges.
struct VertexGrid {
    origin: Point2<f64>,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl VertexGrid {
    fn new(vertices: &[Point2<f64>]) -> Self {
        let (mut lo, mut hi) = (vertices[0], vertices[0]);
        for v in vertices {
            lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let extent = (hi - lo).amax().max(f64::MIN_POSITIVE);
        let per_side = (vertices.len() as f64).sqrt().ceil().max(1.0);
        let cell = extent / per_side * (1.0 + 1e-9);
        let nx = (((hi.x - lo.x) / cell).floor() as usize) + 1;
        let ny = (((hi.y - lo.y) / cell).floor() as usize) + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut grid = Self { origin: lo, cell, nx, ny, buckets: Vec::new() };
        for (i, v) in vertices.iter().enumerate() {
            let (ix, iy) = grid.index(v);
            buckets[iy * nx + ix].push(i);
        }
        grid.buckets = buckets;
        grid
    }

    fn index(&self, p: &Point2<f64>) -> (usize, usize) {
        let ix = (((p.x - self.origin.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let iy = (((p.y - self.origin.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        (ix, iy)
    }

    /// Vertex ids in buckets overlapping the bounding box of `a`-`b`.
    fn candidates(&self, a: &Point2<f64>, b: &Point2<f64>, pad: f64, out: &mut Vec<usize>) {
        out.clear();
        let lo = Point2::new(a.x.min(b.x) - pad, a.y.min(b.y) - pad);
        let hi = Point2::new(a.x.max(b.x) + pad, a.y.max(b.y) + pad);
        let (x0, y0) = self.index(&lo);
        let (x1, y1) = self.index(&hi);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                out.extend_from_slice(&self.buckets[iy * self.nx + ix]);
            }
        }
    }
}

impl PolyMesh {
    /// Builds a mesh from counterclockwise vertex loops.
    ///
    /// `regions` assigns a permeability region tag per element (default 0).
    pub fn from_polygons(
        vertices: Vec<[f64; 2]>,
        loops: Vec<Vec<usize>>,
        regions: Option<Vec<usize>>,
    ) -> Result<Self> {
        let vertices: Vec<Point2<f64>> = vertices.iter().map(|v| Point2::new(v[0], v[1])).collect();
        let regions = regions.unwrap_or_else(|| vec![0; loops.len()]);
        if regions.len() != loops.len() {
            return Err(Error::Dimension(format!(
                "{} region tags for {} elements",
                regions.len(),
                loops.len()
            )));
        }
        if vertices.is_empty() || loops.is_empty() {
            return Err(Error::Dimension("empty mesh".into()));
        }

        for (e, lp) in loops.iter().enumerate() {
            if lp.len() < 3 || lp.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::DegenerateElement { element: e, area: 0.0 });
            }
            let pts: Vec<_> = lp.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&pts);
            let scale = polygon_diameter(&pts).powi(2);
            if area.abs() <= 1e-14 * scale || scale == 0.0 {
                return Err(Error::DegenerateElement { element: e, area });
            }
            if area < 0.0 {
                return Err(Error::InconsistentOrientation { element: e });
            }
        }

        let loops = Self::split_hanging_nodes(&vertices, loops);

        let mut faces: Vec<Face> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elements = Vec::with_capacity(loops.len());
        for (e, lp) in loops.into_iter().enumerate() {
            let n = lp.len();
            let mut elem_faces = Vec::with_capacity(n);
            let mut orientations = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (lp[i], lp[(i + 1) % n]);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let d = pb - pa;
                        let len = d.norm();
                        let tangent = d / len;
                        faces.push(Face {
                            vertices: [a, b],
                            owner: e,
                            neighbor: None,
                            normal: Vector2::new(tangent.y, -tangent.x),
                            tangent,
                            midpoint: nalgebra::center(&pa, &pb),
                            measure: len,
                        });
                        lookup.insert(key, faces.len() - 1);
                        elem_faces.push(faces.len() - 1);
                        orientations.push(1.0);
                    }
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.vertices[0] == a {
                            return Err(Error::InconsistentOrientation { element: e });
                        }
                        if face.neighbor.is_some() || face.owner == e {
                            return Err(Error::NonManifoldEdge(key.0, key.1));
                        }
                        face.neighbor = Some(e);
                        elem_faces.push(f);
                        orientations.push(-1.0);
                    }
                }
            }
            let pts: Vec<_> = lp.iter().map(|&v| vertices[v]).collect();
            let measure = signed_area(&pts);
            elements.push(Element {
                centroid: polygon_centroid(&pts, measure),
                diameter: polygon_diameter(&pts),
                measure,
                vertices: lp,
                faces: elem_faces,
                orientations,
                region: regions[e],
            });
        }

        Ok(Self { vertices, elements, faces })
    }

    fn split_hanging_nodes(vertices: &[Point2<f64>], loops: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        let grid = VertexGrid::new(vertices);
        let mut used = vec![false; vertices.len()];
        for lp in &loops {
            for &v in lp {
                used[v] = true;
            }
        }
        let mut cand = Vec::new();
        loops
            .into_iter()
            .map(|lp| {
                let n = lp.len();
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let (a, b) = (lp[i], lp[(i + 1) % n]);
                    out.push(a);
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let d = pb - pa;
                    let len2 = d.norm_squared();
                    let tol = HANGING_NODE_TOL * len2.sqrt();
                    grid.candidates(&pa, &pb, tol, &mut cand);
                    let mut inner: Vec<(f64, usize)> = cand
                        .iter()
                        .copied()
                        .filter(|&v| v != a && v != b && used[v])
                        .filter_map(|v| {
                            let w = vertices[v] - pa;
                            let s = w.dot(&d) / len2;
                            let dist = (w.x * d.y - w.y * d.x).abs() / len2.sqrt();
                            (s > HANGING_NODE_TOL && s < 1.0 - HANGING_NODE_TOL && dist <= tol)
                                .then_some((s, v))
                        })
                        .collect();
                    inner.sort_by(|x, y| x.0.total_cmp(&y.0));
                    inner.dedup_by_key(|x| x.1);
                    out.extend(inner.into_iter().map(|(_, v)| v));
                }
                out
            })
            .collect()
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    /// Outward unit normal `n_TF` of the `local`-th face of element `e`.
    pub fn outward_normal(&self, e: usize, local: usize) -> Vector2<f64> {
        let el = &self.elements[e];
        self.faces[el.faces[local]].normal * el.orientations[local]
    }

    /// Maximum number of faces of any element (`N_∂`).
    pub fn max_faces_per_element(&self) -> usize {
        self.elements.iter().map(|e| e.faces.len()).max().unwrap_or(0)
    }

    /// Mesh size `h = max h_T`.
    pub fn mesh_size(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    pub fn element_points(&self, e: usize) -> Vec<Point2<f64>> {
        self.elements[e].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn face_endpoints(&self, f: usize) -> (Point2<f64>, Point2<f64>) {
        let [a, b] = self.faces[f].vertices;
        (self.vertices[a], self.vertices[b])
    }

    /// Number of distinct region tags, i.e. `max(tag) + 1`.
    pub fn num_regions(&self) -> usize {
        self.elements.iter().map(|e| e.region).max().map_or(0, |r| r + 1)
    }

    pub fn set_regions(&mut self, regions: &[usize]) -> Result<()> {
        if regions.len() != self.elements.len() {
            return Err(Error::Dimension(format!(
                "{} region tags for {} elements",
                regions.len(),
                self.elements.len()
            )));
        }
        for (el, &r) in self.elements.iter_mut().zip(regions) {
            el.region = r;
        }
        Ok(())
    }

    /// Assigns region tags from a predicate on element centroids.
    pub fn tag_regions(&mut self, tag: impl Fn(&Point2<f64>) -> usize) {
        for el in &mut self.elements {
            el.region = tag(&el.centroid);
        }
    }

    /// Vertex loops as originally given (hanging nodes included).
    pub fn loops(&self) -> Vec<Vec<usize>> {
        self.elements.iter().map(|e| e.vertices.clone()).collect()
    }

    /// Returns true when `p` lies in element `e` (boundary included, relative tolerance).
    pub fn element_contains(&self, e: usize, p: &Point2<f64>) -> bool {
        let pts = self.element_points(e);
        let h = self.elements[e].diameter;
        let n = pts.len();
        // winding test valid for simple polygons; edges count as inside
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let d = b - a;
            let w = p - a;
            let cross = d.x * w.y - d.y * w.x;
            let s = w.dot(&d) / d.norm_squared();
            if cross.abs() <= 1e-12 * h * d.norm() && (-1e-12..=1.0 + 1e-12).contains(&s) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// All elements containing `p` (several when `p` sits on a face or vertex).
    pub fn locate(&self, p: &Point2<f64>) -> Vec<usize> {
        (0..self.elements.len())
            .filter(|&e| {
                let el = &self.elements[e];
                (p - el.centroid).norm() <= el.diameter * (1.0 + 1e-9)
            })
            .filter(|&e| self.element_contains(e, p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> PolyMesh {
        generate_cartesian(2).unwrap()
    }

    #[test]
    fn cartesian_counts() {
        let m = two_by_two();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.num_faces(), 12);
        assert_eq!(m.num_interior_faces(), 4);
        let m1 = generate_cartesian(1).unwrap();
        assert_eq!(m1.num_faces(), 4);
        assert_eq!(m1.num_boundary_faces(), 4);
        assert_eq!(m1.num_interior_faces(), 0);
        assert!((m1.mesh_size() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn divergence_closure_and_normals() {
        for m in [
            two_by_two(),
            generate_triangular(3).unwrap(),
            generate_hexagonal(4).unwrap(),
            generate_nonmatching(4).unwrap(),
            generate_voronoi(30, 7).unwrap(),
        ] {
            for (e, el) in m.elements().iter().enumerate() {
                let mut s = Vector2::zeros();
                for (i, &f) in el.faces.iter().enumerate() {
                    s += m.outward_normal(e, i) * m.face(f).measure;
                    assert!(m.face(f).measure <= el.diameter * (1.0 + 1e-14));
                }
                assert!(s.norm() <= 1e-12 * el.diameter, "closure {s:?}");
                assert!(el.measure > 0.0);
            }
            for (fi, f) in m.faces().iter().enumerate() {
                if let Some(t2) = f.neighbor {
                    let i1 = m.element(f.owner).faces.iter().position(|&x| x == fi).unwrap();
                    let i2 = m.element(t2).faces.iter().position(|&x| x == fi).unwrap();
                    assert_eq!(m.outward_normal(f.owner, i1), f.normal);
                    assert_eq!(m.outward_normal(t2, i2), -f.normal);
                }
            }
        }
    }

    #[test]
    fn hanging_node_splits_coarse_edge() {
        // two fine cells on the left, one coarse cell on the right
        let v = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [0.0, 0.5],
            [1.0, 0.5],
            [0.0, 1.0],
            [1.0, 1.0],
            [2.0, 1.0],
        ];
        let loops = vec![vec![0, 1, 4, 3], vec![3, 4, 6, 5], vec![1, 2, 7, 6]];
        let m = PolyMesh::from_polygons(v, loops, None).unwrap();
        assert_eq!(m.element(2).faces.len(), 5);
        assert_eq!(m.num_interior_faces(), 3);
    }

    #[test]
    fn clockwise_loop_is_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let err = PolyMesh::from_polygons(v.clone(), vec![vec![0, 3, 2, 1]], None).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }));
        let err = PolyMesh::from_polygons(v, vec![vec![0, 1, 1]], None).unwrap_err();
        assert!(matches!(err, Error::DegenerateElement { .. }));
    }

    #[test]
    fn mismatched_orientation_between_neighbors() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [2.0, 0.0], [2.0, 1.0]];
        // second square reuses edge 1->2 in the same direction as the first
        let loops = vec![vec![0, 1, 2, 3], vec![1, 2, 5, 4]];
        assert!(PolyMesh::from_polygons(v, loops, None).is_err());
    }

    #[test]
    fn locate_points() {
        let m = two_by_two();
        assert_eq!(m.locate(&Point2::new(0.25, 0.25)), vec![0]);
        assert_eq!(m.locate(&Point2::new(0.5, 0.5)).len(), 4);
    }
}
