//! Global numbering of displacement, pressure and multiplier unknowns.
//!
//! Full layout: element displacements, face displacements, pressures, then the
//! optional zero-mean multiplier. Condensed layout: face displacements,
//! pressures, multiplier.

use std::ops::Range;

use nalgebra::{DMatrix, Vector2};

use crate::basis::num_monomials;
use crate::element::LocalElement;
use crate::mesh::PolyMesh;
use crate::problem::{BoundaryConditions, DisplacementBc, PressureBc};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Both components are unknown.
    Free,
    /// Both components are prescribed.
    Clamped,
    /// Only the normal component is unknown.
    Sliding,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    pub nk: usize,
    pub nf: usize,
    pub num_elements: usize,
    pub face_kind: Vec<FaceKind>,
    face_offset: Vec<usize>,
    face_normal: Vec<Vector2<f64>>,
    pub num_face_unknowns: usize,
    pub multiplier: bool,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh, k: usize, bc: &BoundaryConditions, c0: f64) -> Self {
        let (nk, nf) = (num_monomials(k), k + 1);
        let mut face_kind = Vec::with_capacity(mesh.num_faces());
        let mut face_offset = Vec::with_capacity(mesh.num_faces() + 1);
        let mut off = 0;
        for f in mesh.faces() {
            let kind = match (f.is_boundary(), bc.displacement) {
                (false, _) => FaceKind::Free,
                (true, DisplacementBc::Clamped) => FaceKind::Clamped,
                (true, DisplacementBc::Sliding) => FaceKind::Sliding,
            };
            face_offset.push(off);
            off += match kind {
                FaceKind::Free => 2 * nf,
                FaceKind::Clamped => 0,
                FaceKind::Sliding => nf,
            };
            face_kind.push(kind);
        }
        face_offset.push(off);
        Self {
            k,
            nk,
            nf,
            num_elements: mesh.num_elements(),
            face_kind,
            face_offset,
            face_normal: mesh.faces().iter().map(|f| f.normal).collect(),
            num_face_unknowns: off,
            multiplier: c0 == 0.0 && bc.pressure == PressureBc::Neumann,
        }
    }

    pub fn num_faces(&self) -> usize {
        self.face_kind.len()
    }

    /// Face unknowns of face `f`, as indices into the face block.
    pub fn face_dofs(&self, f: usize) -> Range<usize> {
        self.face_offset[f]..self.face_offset[f + 1]
    }

    pub fn num_pressure(&self) -> usize {
        self.num_elements * self.nk
    }

    pub fn pressure_dofs(&self, e: usize) -> Range<usize> {
        e * self.nk..(e + 1) * self.nk
    }

    pub fn num_element_displacement(&self) -> usize {
        self.num_elements * 2 * self.nk
    }

    pub fn element_dofs(&self, e: usize) -> Range<usize> {
        e * 2 * self.nk..(e + 1) * 2 * self.nk
    }

    /// Unknowns of the reduced face-plus-pressure system.
    pub fn condensed_size(&self) -> usize {
        self.num_face_unknowns + self.num_pressure() + usize::from(self.multiplier)
    }

    pub fn full_size(&self) -> usize {
        self.num_element_displacement() + self.condensed_size()
    }

    /// Map from the unknowns of face `f` to its `2 nf` component coefficients.
    pub fn face_map(&self, f: usize) -> DMatrix<f64> {
        let nf = self.nf;
        match self.face_kind[f] {
            FaceKind::Free => DMatrix::identity(2 * nf, 2 * nf),
            FaceKind::Clamped => DMatrix::zeros(2 * nf, 0),
            FaceKind::Sliding => {
                let n = self.face_normal[f];
                let mut e = DMatrix::zeros(2 * nf, nf);
                for j in 0..nf {
                    e[(j, j)] = n.x;
                    e[(nf + j, j)] = n.y;
                }
                e
            }
        }
    }

    /// Element-local face map: block-diagonal `E_T` and the face-unknown indices of its columns.
    pub fn local_face_map(&self, le: &LocalElement) -> (DMatrix<f64>, Vec<usize>) {
        let nf = self.nf;
        let rows = 2 * nf * le.faces.len();
        let cols: usize = le.faces.iter().map(|f| self.face_dofs(f.global).len()).sum();
        let mut e = DMatrix::zeros(rows, cols);
        let mut idx = Vec::with_capacity(cols);
        let mut c = 0;
        for (i, f) in le.faces.iter().enumerate() {
            let m = self.face_map(f.global);
            e.view_mut((2 * nf * i, c), m.shape()).copy_from(&m);
            c += m.ncols();
            idx.extend(self.face_dofs(f.global));
        }
        (e, idx)
    }

    /// Condensed-system size predicted from mesh counts alone for free interior
    /// faces and clamped boundary faces: `2 |F_i| (k + 1) + |T| nk (+1)`.
    pub fn predicted_condensed_size(mesh: &PolyMesh, k: usize, multiplier: bool) -> usize {
        2 * mesh.num_interior_faces() * (k + 1) + mesh.num_elements() * num_monomials(k) + usize::from(multiplier)
    }
}
