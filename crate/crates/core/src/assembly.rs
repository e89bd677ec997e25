//! CSR sparse matrix type and assembly of the Q1 finite element operators:
//! mass, stiffness, and their weighted variants, plus nonlinear load
//! vectors.
//!
//! Nonlinear integrands are evaluated at the nodes first and then
//! interpolated bilinearly to the quadrature points (group finite element
//! treatment), which is what makes every time step a linear solve.

use crate::error::SimError;
use crate::mesh::{gauss_points_2x2, shape_gradients, shape_values, Grid};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Value at (i, j), zero if outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                d[i][self.col_indices[k]] = self.values[k];
            }
        }
        d
    }

    /// Entrywise sum.
    pub fn entry_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// max |A - A^T| over the pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Fixed sparsity pattern of the Q1 operators on a grid (9-point stencil)
/// plus per-element scatter maps. Symbolic phase runs once per grid; the
/// numeric phase per weighted matrix reuses it.
#[derive(Debug, Clone)]
pub struct Assembler {
    grid: Grid,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    /// CSR value slot of (local a, local b) for each element, 16 per element.
    scatter: Vec<u32>,
}

/// Which bilinear form an element matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    Mass,
    Stiffness,
}

impl Assembler {
    pub fn new(grid: &Grid) -> Assembler {
        let n = grid.num_nodes();
        let nx = grid.nx;
        let ny = grid.ny;
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for j in 0..=ny {
            for i in 0..=nx {
                for dj in -1i64..=1 {
                    let jj = j as i64 + dj;
                    if jj < 0 || jj > ny as i64 {
                        continue;
                    }
                    for di in -1i64..=1 {
                        let ii = i as i64 + di;
                        if ii < 0 || ii > nx as i64 {
                            continue;
                        }
                        col_indices.push(jj as usize * (nx + 1) + ii as usize);
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        let mut scatter = Vec::with_capacity(grid.num_elements() * 16);
        for e in 0..grid.num_elements() {
            let nodes = grid.element_nodes(e);
            for &a in &nodes {
                let lo = row_offsets[a];
                let hi = row_offsets[a + 1];
                for &b in &nodes {
                    let k = col_indices[lo..hi].binary_search(&b).expect("stencil");
                    scatter.push((lo + k) as u32);
                }
            }
        }
        Assembler {
            grid: grid.clone(),
            row_offsets,
            col_indices,
            scatter,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn empty(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.grid.num_nodes(),
            ncols: self.grid.num_nodes(),
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: vec![0.0; self.col_indices.len()],
        }
    }

    /// Element matrix for the requested form with the weight interpolated
    /// from nodal values at the 2x2 Gauss points.
    fn element_matrix(
        &self,
        form: Form,
        wnodal: Option<[f64; 4]>,
        map: Option<&dyn Fn(f64) -> f64>,
    ) -> [[f64; 4]; 4] {
        let (hx, hy) = (self.grid.hx, self.grid.hy);
        let det_j = 0.25 * hx * hy;
        let mut m = [[0.0; 4]; 4];
        for ((xi, eta), w) in gauss_points_2x2() {
            let nv = shape_values(xi, eta);
            let weight = match wnodal {
                Some(c) => {
                    let interp = (0..4).map(|a| c[a] * nv[a]).sum::<f64>();
                    match map {
                        Some(f) => f(interp),
                        None => interp,
                    }
                }
                None => 1.0,
            };
            let scale = w * weight * det_j;
            match form {
                Form::Mass => {
                    for a in 0..4 {
                        for b in 0..4 {
                            m[a][b] += scale * nv[a] * nv[b];
                        }
                    }
                }
                Form::Stiffness => {
                    let gr = shape_gradients(xi, eta, hx, hy);
                    for a in 0..4 {
                        for b in 0..4 {
                            m[a][b] += scale * (gr[a].0 * gr[b].0 + gr[a].1 * gr[b].1);
                        }
                    }
                }
            }
        }
        m
    }

    fn assemble(&self, form: Form, weight: Option<&[f64]>) -> Result<SparseMatrix, SimError> {
        let mut out = self.empty();
        self.assemble_into(form, weight, None, &mut out.values)?;
        Ok(out)
    }

    fn assemble_into(
        &self,
        form: Form,
        weight: Option<&[f64]>,
        map: Option<&dyn Fn(f64) -> f64>,
        values: &mut [f64],
    ) -> Result<(), SimError> {
        if let Some(w) = weight {
            if w.len() != self.grid.num_nodes() {
                return Err(SimError::DimensionMismatch {
                    expected: self.grid.num_nodes(),
                    got: w.len(),
                });
            }
        }
        values.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.grid.num_elements() {
            let nodes = self.grid.element_nodes(e);
            let wnodal = weight.map(|w| [w[nodes[0]], w[nodes[1]], w[nodes[2]], w[nodes[3]]]);
            let local = self.element_matrix(form, wnodal, map);
            let base = e * 16;
            for a in 0..4 {
                for b in 0..4 {
                    values[self.scatter[base + a * 4 + b] as usize] += local[a][b];
                }
            }
        }
        Ok(())
    }

    pub fn mass(&self) -> SparseMatrix {
        self.assemble(Form::Mass, None).expect("unweighted")
    }

    pub fn stiffness(&self) -> SparseMatrix {
        self.assemble(Form::Stiffness, None).expect("unweighted")
    }

    pub fn weighted_mass(&self, w: &[f64]) -> Result<SparseMatrix, SimError> {
        self.assemble(Form::Mass, Some(w))
    }

    pub fn weighted_stiffness(&self, w: &[f64]) -> Result<SparseMatrix, SimError> {
        self.assemble(Form::Stiffness, Some(w))
    }

    /// Numeric-only reassembly into an existing value buffer (pattern fixed).
    pub fn weighted_mass_into(&self, w: &[f64], values: &mut [f64]) -> Result<(), SimError> {
        self.assemble_into(Form::Mass, Some(w), None, values)
    }

    pub fn weighted_stiffness_into(&self, w: &[f64], values: &mut [f64]) -> Result<(), SimError> {
        self.assemble_into(Form::Stiffness, Some(w), None, values)
    }

    /// Weighted reassembly with the coefficient evaluated as `map` of the
    /// interpolated nodal `field` at each quadrature point (instead of
    /// interpolating nodal coefficient values). For steep nonlinear
    /// coefficients, such as the degenerate interface mobility, this avoids
    /// sampling the nonlinearity only at nodes and restores second-order
    /// spatial accuracy on coarse grids.
    pub fn mapped_mass_into(
        &self,
        field: &[f64],
        map: impl Fn(f64) -> f64,
        values: &mut [f64],
    ) -> Result<(), SimError> {
        self.assemble_into(Form::Mass, Some(field), Some(&map), values)
    }

    pub fn mapped_stiffness_into(
        &self,
        field: &[f64],
        map: impl Fn(f64) -> f64,
        values: &mut [f64],
    ) -> Result<(), SimError> {
        self.assemble_into(Form::Stiffness, Some(field), Some(&map), values)
    }

    /// Load vector `[(I_h g, w_j)]_j` via element quadrature of the bilinear
    /// interpolant of the nodal values `g`. Equals the consistent-mass
    /// product `M g` up to rounding.
    pub fn load_vector(&self, g: &[f64]) -> Result<Vec<f64>, SimError> {
        if g.len() != self.grid.num_nodes() {
            return Err(SimError::DimensionMismatch {
                expected: self.grid.num_nodes(),
                got: g.len(),
            });
        }
        let det_j = 0.25 * self.grid.hx * self.grid.hy;
        let mut out = vec![0.0; g.len()];
        for e in 0..self.grid.num_elements() {
            let nodes = self.grid.element_nodes(e);
            for ((xi, eta), w) in gauss_points_2x2() {
                let nv = shape_values(xi, eta);
                let gval: f64 = (0..4).map(|a| g[nodes[a]] * nv[a]).sum();
                let scale = w * gval * det_j;
                for a in 0..4 {
                    out[nodes[a]] += scale * nv[a];
                }
            }
        }
        Ok(out)
    }
}

/// Convenience one-shot assemblies (symbolic + numeric).
pub fn assemble_mass(grid: &Grid) -> SparseMatrix {
    Assembler::new(grid).mass()
}

pub fn assemble_stiffness(grid: &Grid) -> SparseMatrix {
    Assembler::new(grid).stiffness()
}
