//! Legacy-VTK export of broken fields sampled at subtriangle vertices.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::system::{Discretization, Solution};

/// Discontinuous samples: every subtriangle owns its three vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Element of each triangle.
    pub element: Vec<usize>,
    pub pressure: Vec<f64>,
    pub displacement: Vec<[f64; 2]>,
}

pub fn sample_fields(disc: &Discretization, sol: &Solution) -> FieldSamples {
    let mut s = FieldSamples {
        points: Vec::new(),
        triangles: Vec::new(),
        element: Vec::new(),
        pressure: Vec::new(),
        displacement: Vec::new(),
    };
    for e in 0..disc.mesh.num_elements() {
        for tri in disc.sub.element(e) {
            let base = s.points.len();
            for p in &tri.points {
                s.points.push([p.x, p.y]);
                s.pressure.push(disc.pressure_at(&sol.pressure, e, p));
                s.displacement.push(disc.displacement_at(sol, e, p));
            }
            s.triangles.push([base, base + 1, base + 2]);
            s.element.push(e);
        }
    }
    s
}

/// Writes an unstructured grid whose points are displaced by `scale * u`.
/// Reference coordinates are kept as a point field.
pub fn write_vtk(samples: &FieldSamples, scale: f64, mut out: impl Write) -> Result<()> {
    let n = samples.points.len();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "biot-hho fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for (p, u) in samples.points.iter().zip(&samples.displacement) {
        writeln!(out, "{} {} 0", p[0] + scale * u[0], p[1] + scale * u[1])?;
    }
    let nt = samples.triangles.len();
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in &samples.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "CELL_DATA {nt}")?;
    writeln!(out, "SCALARS element int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for e in &samples.element {
        writeln!(out, "{e}")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for p in &samples.pressure {
        writeln!(out, "{p}")?;
    }
    writeln!(out, "VECTORS displacement double")?;
    for u in &samples.displacement {
        writeln!(out, "{} {} 0", u[0], u[1])?;
    }
    writeln!(out, "VECTORS reference double")?;
    for p in &samples.points {
        writeln!(out, "{} {} 0", p[0], p[1])?;
    }
    Ok(())
}

/// Reads back a file produced by [`write_vtk`].
pub fn read_vtk(input: impl BufRead) -> Result<FieldSamples> {
    let lines = input.lines().collect::<std::io::Result<Vec<_>>>()?;
    // the first two lines are the version banner and a free-form title
    let tokens: Vec<&str> = lines.iter().skip(2).flat_map(|l| l.split_whitespace()).collect();
    let mut c = Cursor { tokens, pos: 0 };
    c.expect(&["ASCII", "DATASET", "UNSTRUCTURED_GRID", "POINTS"])?;
    let n = c.count()?;
    c.expect(&["double"])?;
    c.skip(3 * n)?;
    c.expect(&["CELLS"])?;
    let nt = c.count()?;
    c.skip(1)?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        c.expect(&["3"])?;
        triangles.push([c.count()?, c.count()?, c.count()?]);
    }
    c.expect(&["CELL_TYPES"])?;
    c.skip(nt + 1)?;
    c.expect(&["CELL_DATA"])?;
    c.skip(1)?;
    c.expect(&["SCALARS", "element", "int", "1", "LOOKUP_TABLE", "default"])?;
    let element = (0..nt).map(|_| c.count()).collect::<Result<Vec<_>>>()?;
    c.expect(&["POINT_DATA"])?;
    c.skip(1)?;
    c.expect(&["SCALARS", "pressure", "double", "1", "LOOKUP_TABLE", "default"])?;
    let pressure = (0..n).map(|_| c.number()).collect::<Result<Vec<_>>>()?;
    let displacement = c.vectors("displacement", n)?;
    let points = c.vectors("reference", n)?;
    Ok(FieldSamples { points, triangles, element, pressure, displacement })
}

struct Cursor<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: String) -> Error {
        Error::MeshParse { path: "vtk".into(), message: format!("token {}: {message}", self.pos) }
    }

    fn next(&mut self) -> Result<&'a str> {
        let t = self.tokens.get(self.pos).copied().ok_or_else(|| self.error("unexpected end of file".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, words: &[&str]) -> Result<()> {
        for w in words {
            let t = self.next()?;
            if t != *w {
                return Err(self.error(format!("expected `{w}`, found `{t}`")));
            }
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64> {
        let t = self.next()?;
        t.parse().map_err(|_| self.error(format!("bad number `{t}`")))
    }

    fn count(&mut self) -> Result<usize> {
        let t = self.next()?;
        t.parse().map_err(|_| self.error(format!("bad integer `{t}`")))
    }

    fn skip(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.next()?;
        }
        Ok(())
    }

    fn vectors(&mut self, name: &str, n: usize) -> Result<Vec<[f64; 2]>> {
        self.expect(&["VECTORS", name, "double"])?;
        (0..n)
            .map(|_| {
                let v = [self.number()?, self.number()?];
                self.number()?;
                Ok(v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_hexagonal;
    use crate::problem::{BoundaryConditions, Physics};

    fn disc() -> Discretization {
        Discretization::new(generate_hexagonal(4).unwrap(), 2, Physics::new(1.0, 1.0, 0.0, 1.0), BoundaryConditions::default())
            .unwrap()
    }

    #[test]
    fn export_roundtrip_is_exact() {
        let d = disc();
        let mut sol = d.interpolate_displacement(|p| [p.x.sin(), p.y * p.x]);
        sol.pressure = d.project_pressure(|p| (3.0 * p.x).cos() - p.y);
        let s = sample_fields(&d, &sol);
        let mut buf = Vec::new();
        write_vtk(&s, 0.5, &mut buf).unwrap();
        let back = read_vtk(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn zero_solution_gives_zero_fields() {
        let d = disc();
        let sol = d.interpolate_displacement(|_| [0.0, 0.0]);
        let s = sample_fields(&d, &sol);
        assert!(s.pressure.iter().all(|&p| p == 0.0));
        assert!(s.displacement.iter().all(|u| u == &[0.0, 0.0]));
        assert_eq!(s.triangles.len(), d.sub.iter().map(|t| t.len()).sum::<usize>());
    }
}
