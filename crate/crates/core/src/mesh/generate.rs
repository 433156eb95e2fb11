//! Mesh generators for the unit square.

use std::collections::HashMap;

use nalgebra::{Point2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PolyMesh;
use crate::error::{Error, Result};

/// The mesh families used by the convergence harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFamily {
    Cartesian,
    Triangular,
    Hexagonal,
    Voronoi,
    Nonmatching,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 5] = [
        MeshFamily::Cartesian,
        MeshFamily::Triangular,
        MeshFamily::Hexagonal,
        MeshFamily::Voronoi,
        MeshFamily::Nonmatching,
    ];

    /// Mesh of refinement `level` (0 = coarsest). Each level halves `h`.
    pub fn generate(self, level: u32) -> Result<PolyMesh> {
        let n = 1usize << level;
        match self {
            MeshFamily::Cartesian => generate_cartesian(4 * n),
            MeshFamily::Triangular => generate_triangular(4 * n),
            MeshFamily::Hexagonal => generate_hexagonal(4 * n),
            MeshFamily::Voronoi => generate_voronoi(32 * n * n, 0x5eed + level as u64),
            MeshFamily::Nonmatching => generate_nonmatching(4 * n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Cartesian => "cartesian",
            MeshFamily::Triangular => "triangular",
            MeshFamily::Hexagonal => "hexagonal",
            MeshFamily::Voronoi => "voronoi",
            MeshFamily::Nonmatching => "nonmatching",
        }
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mesh family `{s}`")))
    }
}

/// `n x n` uniform squares on the unit square.
pub fn generate_cartesian(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::Config("cartesian mesh needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let vertices = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| [i as f64 * h, j as f64 * h]))
        .collect();
    let loops = (0..n)
        .flat_map(|j| (0..n).map(move |i| vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
        .collect();
    PolyMesh::from_polygons(vertices, loops, None)
}

/// `n x n` squares, each split along its rising diagonal (`2 n^2` triangles).
pub fn generate_triangular(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::Config("triangular mesh needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let vertices = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| [i as f64 * h, j as f64 * h]))
        .collect();
    let mut loops = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            loops.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            loops.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::from_polygons(vertices, loops, None)
}

/// Predominantly hexagonal mesh: clipped Voronoi diagram of a staggered lattice
/// with `n + 1` rows. Even rows carry `n` seeds, odd rows `n + 1` (the outer two
/// sitting on the boundary), giving `n^2 + 3n/2` cells for even `n`: `n = 32`
/// yields 1072 cells and `n = 64` yields 4192.
pub fn generate_hexagonal(n: usize) -> Result<PolyMesh> {
    if n < 2 {
        return Err(Error::Config("hexagonal mesh needs n >= 2".into()));
    }
    let h = 1.0 / n as f64;
    let mut seeds = Vec::new();
    for j in 0..=n {
        let y = j as f64 * h;
        if j % 2 == 0 {
            seeds.extend((0..n).map(|i| Point2::new((i as f64 + 0.5) * h, y)));
        } else {
            seeds.extend((0..=n).map(|i| Point2::new(i as f64 * h, y)));
        }
    }
    clipped_voronoi(&seeds)
}

/// Centroidal-ish Voronoi mesh from `npoints` random seeds relaxed with Lloyd iterations.
pub fn generate_voronoi(npoints: usize, seed: u64) -> Result<PolyMesh> {
    if npoints < 2 {
        return Err(Error::Config("voronoi mesh needs at least 2 seeds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<Point2<f64>> =
        (0..npoints).map(|_| Point2::new(rng.random::<f64>(), rng.random::<f64>())).collect();
    for _ in 0..40 {
        let cells = voronoi_cells(&seeds);
        seeds = cells.iter().map(|c| polygon_centroid(c)).collect();
    }
    clipped_voronoi(&seeds)
}

/// `n x n` squares (`n` even) where the lower-left quarter is refined once,
/// producing hanging nodes along the refinement interface.
pub fn generate_nonmatching(n: usize) -> Result<PolyMesh> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Config("nonmatching mesh needs an even n >= 2".into()));
    }
    let m = 2 * n;
    let h = 1.0 / m as f64;
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut loops = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if 2 * i < n && 2 * j < n {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let (a, b) = (2 * i + di, 2 * j + dj);
                    loops.push(vec![id(a, b), id(a + 1, b), id(a + 1, b + 1), id(a, b + 1)]);
                }
            } else {
                let (a, b) = (2 * i, 2 * j);
                loops.push(vec![id(a, b), id(a + 2, b), id(a + 2, b + 2), id(a, b + 2)]);
            }
        }
    }
    let all: Vec<[f64; 2]> = (0..=m)
        .flat_map(|j| (0..=m).map(move |i| [i as f64 * h, j as f64 * h]))
        .collect();
    let (vertices, loops) = compact(&all, loops);
    PolyMesh::from_polygons(vertices, loops, None)
}

/// Drops unreferenced vertices and renumbers loops.
fn compact(vertices: &[[f64; 2]], loops: Vec<Vec<usize>>) -> (Vec<[f64; 2]>, Vec<Vec<usize>>) {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    let loops = loops
        .into_iter()
        .map(|lp| {
            lp.into_iter()
                .map(|v| {
                    if map[v] == usize::MAX {
                        map[v] = out.len();
                        out.push(vertices[v]);
                    }
                    map[v]
                })
                .collect()
        })
        .collect();
    (out, loops)
}

fn polygon_centroid(poly: &[Point2<f64>]) -> Point2<f64> {
    let n = poly.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let c = p.x * q.y - q.x * p.y;
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    Point2::new(cx / (3.0 * a), cy / (3.0 * a))
}

/// Keeps the part of `poly` where `(x - o) . d <= c`.
fn clip(poly: &[Point2<f64>], d: Vector2<f64>, c: f64) -> Vec<Point2<f64>> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (fp, fq) = (p.coords.dot(&d) - c, q.coords.dot(&d) - c);
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let s = fp / (fp - fq);
            out.push(p + (q - p) * s);
        }
    }
    out
}

/// Voronoi cells of `seeds` clipped to the unit square.
fn voronoi_cells(seeds: &[Point2<f64>]) -> Vec<Vec<Point2<f64>>> {
    let n = seeds.len();
    let per_side = ((n as f64).sqrt().ceil() as usize).max(1);
    let cell = 1.0 / per_side as f64;
    let bucket_of = |p: &Point2<f64>| {
        let i = ((p.x / cell).floor().max(0.0) as usize).min(per_side - 1);
        let j = ((p.y / cell).floor().max(0.0) as usize).min(per_side - 1);
        (i, j)
    };
    let mut buckets = vec![Vec::new(); per_side * per_side];
    for (s, p) in seeds.iter().enumerate() {
        let (i, j) = bucket_of(p);
        buckets[j * per_side + i].push(s);
    }
    let square = [
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ];
    seeds
        .iter()
        .enumerate()
        .map(|(s, p)| {
            let mut poly = square.to_vec();
            let (bi, bj) = bucket_of(p);
            let mut ring = 0usize;
            loop {
                let radius = poly.iter().map(|v| (v - p).norm()).fold(0.0, f64::max);
                // seeds farther than twice the cell radius cannot cut the cell
                if ring > 0 && (ring as f64 - 1.0) * cell > 2.0 * radius {
                    break;
                }
                if ring > per_side {
                    break;
                }
                let (i0, i1) = (bi as isize - ring as isize, bi as isize + ring as isize);
                let (j0, j1) = (bj as isize - ring as isize, bj as isize + ring as isize);
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        let on_ring = i == i0 || i == i1 || j == j0 || j == j1;
                        if !on_ring || i < 0 || j < 0 || i >= per_side as isize || j >= per_side as isize {
                            continue;
                        }
                        for &o in &buckets[j as usize * per_side + i as usize] {
                            if o == s {
                                continue;
                            }
                            let q = seeds[o];
                            let d = q - p;
                            let c = 0.5 * (q.coords.norm_squared() - p.coords.norm_squared());
                            poly = clip(&poly, d, c);
                        }
                    }
                }
                ring += 1;
            }
            poly
        })
        .collect()
}

fn clipped_voronoi(seeds: &[Point2<f64>]) -> Result<PolyMesh> {
    let cells = voronoi_cells(seeds);
    let tol = 1e-10;
    let key = |p: &Point2<f64>| ((p.x / tol).round() as i64, (p.y / tol).round() as i64);
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut loops: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut lp: Vec<usize> = Vec::with_capacity(cell.len());
        for p in cell {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(&v) = index.get(&(kx + dx, ky + dy)) {
                        found = Some(v);
                        break 'search;
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push([p.x, p.y]);
                index.insert((kx, ky), vertices.len() - 1);
                vertices.len() - 1
            });
            if lp.last() != Some(&v) {
                lp.push(v);
            }
        }
        while lp.len() > 1 && lp.first() == lp.last() {
            lp.pop();
        }
        loops.push(lp);
    }
    collapse_short_edges(&mut vertices, &mut loops, 1e-3 / (seeds.len() as f64).sqrt());
    PolyMesh::from_polygons(vertices, loops, None)
}

/// Merges vertices joined by edges shorter than `min_len`, keeping boundary
/// vertices (and corners) in place.
fn collapse_short_edges(vertices: &mut [[f64; 2]], loops: &mut [Vec<usize>], min_len: f64) {
    let rank = |v: &[f64; 2]| {
        let on = |x: f64| x.abs() < 1e-12 || (x - 1.0).abs() < 1e-12;
        on(v[0]) as u8 + on(v[1]) as u8
    };
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for lp in loops.iter() {
        let n = lp.len();
        for i in 0..n {
            let (a, b) = (find(&mut parent, lp[i]), find(&mut parent, lp[(i + 1) % n]));
            if a == b {
                continue;
            }
            let (pa, pb) = (vertices[a], vertices[b]);
            let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            if len >= min_len {
                continue;
            }
            let (ra, rb) = (rank(&pa), rank(&pb));
            if ra > 0 && rb > 0 && ra == rb && ra == 1 {
                // both on the boundary: only merge if on the same side
                let same = (pa[0] - pb[0]).abs() < 1e-12 || (pa[1] - pb[1]).abs() < 1e-12;
                if !same {
                    continue;
                }
            }
            if ra == 2 && rb == 2 {
                continue;
            }
            let (keep, drop) = if ra >= rb { (a, b) } else { (b, a) };
            if rank(&vertices[keep]) == 0 {
                vertices[keep] = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            }
            parent[drop] = keep;
        }
    }
    for lp in loops.iter_mut() {
        let mut out: Vec<usize> = Vec::with_capacity(lp.len());
        for &v in lp.iter() {
            let r = find(&mut parent, v);
            if out.last() != Some(&r) {
                out.push(r);
            }
        }
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        *lp = out;
    }
}
