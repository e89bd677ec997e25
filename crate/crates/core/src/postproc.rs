//! Quantities of interest, the Ginzburg-Landau energy, isocontour
//! extraction, and file export.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::assembly::SparseMatrix;
use crate::constitutive::{psi, PotentialSpec};
use crate::error::SimError;
use crate::linalg::spmv;
use crate::mesh::{gauss_points_2x2, shape_gradients, shape_values, Grid};

/// Exact integral of the Q1 interpolant of `u`: `1^T M u`.
pub fn field_integral(m: &SparseMatrix, u: &[f64]) -> Result<f64, SimError> {
    Ok(spmv(m, u)?.iter().sum())
}

/// The four energy contributions, each integrated with the same 2x2 Gauss
/// rule as assembly: gradient term, potential term, nutrient term, and the
/// chemotaxis coupling (reported with its negative sign applied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub gradient: f64,
    pub potential: f64,
    pub nutrient: f64,
    pub chemotaxis: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.gradient + self.potential + self.nutrient + self.chemotaxis
    }
}

/// Ginzburg-Landau energy
/// `int [ eps^2/2 |grad phi|^2 + Psi(phi) + 1/2 sigma^2 - chi phi sigma ]`.
pub fn energy_parts(
    grid: &Grid,
    phi: &[f64],
    sigma: &[f64],
    epsilon: f64,
    chi: f64,
    potential: PotentialSpec,
) -> Result<EnergyParts, SimError> {
    let n = grid.num_nodes();
    if phi.len() != n || sigma.len() != n {
        return Err(SimError::DimensionMismatch {
            expected: n,
            got: phi.len().min(sigma.len()),
        });
    }
    let det_j = 0.25 * grid.hx * grid.hy;
    let mut parts = EnergyParts {
        gradient: 0.0,
        potential: 0.0,
        nutrient: 0.0,
        chemotaxis: 0.0,
    };
    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        for ((xi, eta), w) in gauss_points_2x2() {
            let nv = shape_values(xi, eta);
            let gr = shape_gradients(xi, eta, grid.hx, grid.hy);
            let mut p = 0.0;
            let mut s = 0.0;
            let mut gx = 0.0;
            let mut gy = 0.0;
            for a in 0..4 {
                p += phi[nodes[a]] * nv[a];
                s += sigma[nodes[a]] * nv[a];
                gx += phi[nodes[a]] * gr[a].0;
                gy += phi[nodes[a]] * gr[a].1;
            }
            let scale = w * det_j;
            parts.gradient += scale * 0.5 * epsilon * epsilon * (gx * gx + gy * gy);
            parts.potential += scale * psi(p, potential);
            parts.nutrient += scale * 0.5 * s * s;
            parts.chemotaxis -= scale * chi * p * s;
        }
    }
    Ok(parts)
}

pub fn energy(
    grid: &Grid,
    phi: &[f64],
    sigma: &[f64],
    epsilon: f64,
    chi: f64,
    potential: PotentialSpec,
) -> Result<f64, SimError> {
    Ok(energy_parts(grid, phi, sigma, epsilon, chi, potential)?.total())
}

/// Discrete Cahn-Hilliard energy used by the stability checks:
/// `eps^2/2 phi^T K phi + quadrature of Psi(I_h phi)`.
pub fn ch_energy(
    grid: &Grid,
    k: &SparseMatrix,
    phi: &[f64],
    epsilon: f64,
    potential: PotentialSpec,
) -> Result<f64, SimError> {
    let kphi = spmv(k, phi)?;
    let grad = 0.5 * epsilon * epsilon * crate::linalg::dot(phi, &kphi);
    let zeros = vec![0.0; phi.len()];
    let parts = energy_parts(grid, phi, &zeros, 0.0, 0.0, potential)?;
    Ok(grad + parts.potential)
}

/// Isocontour of a nodal field: polylines whose vertices lie on grid cell
/// edges and interpolate to the level exactly.
#[derive(Debug, Clone)]
pub struct Contour {
    pub polylines: Vec<Vec<(f64, f64)>>,
    pub level: f64,
}

impl Contour {
    /// Total length of all polylines.
    pub fn perimeter(&self) -> f64 {
        self.polylines
            .iter()
            .map(|line| {
                line.windows(2)
                    .map(|p| ((p[1].0 - p[0].0).powi(2) + (p[1].1 - p[0].1).powi(2)).sqrt())
                    .sum::<f64>()
            })
            .sum()
    }
}

// Crossing point on a grid edge, always interpolated from the lexically
// smaller node to the larger so that adjacent cells produce bit-identical
// vertices.
fn edge_crossing(grid: &Grid, a: usize, b: usize, u: &[f64], level: f64) -> (f64, f64) {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    let (xa, ya) = grid.node_coords(a);
    let (xb, yb) = grid.node_coords(b);
    let (va, vb) = (u[a], u[b]);
    let t = if va == vb { 0.5 } else { (level - va) / (vb - va) };
    (xa + t * (xb - xa), ya + t * (yb - ya))
}

/// Marching squares with linear edge interpolation. Saddle cells are
/// resolved by the cell-center average; segments sharing endpoints are
/// joined into polylines.
pub fn extract_contour(grid: &Grid, u: &[f64], level: f64) -> Result<Contour, SimError> {
    let n = grid.num_nodes();
    if u.len() != n {
        return Err(SimError::DimensionMismatch {
            expected: n,
            got: u.len(),
        });
    }
    let mut segments: Vec<[(f64, f64); 2]> = Vec::new();
    for e in 0..grid.num_elements() {
        let c = grid.element_nodes(e); // ccw from lower-left
        let inside = |id: usize| u[id] > level;
        let case = (inside(c[0]) as usize)
            | (inside(c[1]) as usize) << 1
            | (inside(c[2]) as usize) << 2
            | (inside(c[3]) as usize) << 3;
        if case == 0 || case == 15 {
            continue;
        }
        // Edge k joins corners k and (k+1)%4.
        let cross = |k: usize| edge_crossing(grid, c[k], c[(k + 1) % 4], u, level);
        let mut push = |i: usize, j: usize| segments.push([cross(i), cross(j)]);
        match case {
            1 => push(3, 0),
            2 => push(0, 1),
            3 => push(3, 1),
            4 => push(1, 2),
            6 => push(0, 2),
            7 => push(3, 2),
            8 => push(2, 3),
            9 => push(0, 2),
            11 => push(1, 2),
            12 => push(1, 3),
            13 => push(0, 1),
            14 => push(3, 0),
            5 | 10 => {
                // Saddle: the cell-center average decides which diagonal
                // pair of corners the inside region connects through.
                let center = 0.25 * (u[c[0]] + u[c[1]] + u[c[2]] + u[c[3]]);
                if (center > level) == (case == 5) {
                    push(0, 1);
                    push(2, 3);
                } else {
                    push(3, 0);
                    push(1, 2);
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(Contour {
        polylines: join_segments(segments),
        level,
    })
}

fn point_key(p: (f64, f64)) -> (u64, u64) {
    (p.0.to_bits(), p.1.to_bits())
}

fn join_segments(segments: Vec<[(f64, f64); 2]>) -> Vec<Vec<(f64, f64)>> {
    let mut adjacency: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, seg) in segments.iter().enumerate() {
        adjacency.entry(point_key(seg[0])).or_default().push(i);
        adjacency.entry(point_key(seg[1])).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    // Iterate in segment order for determinism.
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = vec![segments[start][0], segments[start][1]];
        // Extend forward from the tail, then backward from the head.
        for dir in 0..2 {
            loop {
                let tip = if dir == 0 { *line.last().unwrap() } else { line[0] };
                let Some(cands) = adjacency.get(&point_key(tip)) else {
                    break;
                };
                let next = cands.iter().copied().find(|&i| !used[i]);
                let Some(i) = next else { break };
                used[i] = true;
                let seg = segments[i];
                let other = if point_key(seg[0]) == point_key(tip) {
                    seg[1]
                } else {
                    seg[0]
                };
                if dir == 0 {
                    line.push(other);
                } else {
                    line.insert(0, other);
                }
            }
        }
        polylines.push(line);
    }
    polylines
}

/// C-style `%.17g` formatting: shortest of fixed/scientific at 17
/// significant digits, trailing zeros stripped. Round-trips any f64.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // 17 significant digits in scientific form, then apply %g presentation.
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent value");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let mut s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        let mut m = mantissa.to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        format!("{}e{}{:02}", m, if exp < 0 { "-" } else { "+" }, exp.abs())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SimError {
    SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// CSV time series: header `time,<name>,...`, `%.17g` values, LF endings.
pub fn write_csv_timeseries(
    path: &Path,
    times: &[f64],
    columns: &[(String, Vec<f64>)],
) -> Result<(), SimError> {
    for (name, vals) in columns {
        if vals.len() != times.len() {
            return Err(SimError::InvalidInput(format!(
                "column {name} has {} rows, expected {}",
                vals.len(),
                times.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("time");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, t) in times.iter().enumerate() {
        out.push_str(&format_g17(*t));
        for (_, vals) in columns {
            out.push(',');
            out.push_str(&format_g17(vals[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Legacy ASCII VTK STRUCTURED_POINTS file with one scalar array per field.
pub fn write_vtk_field(
    path: &Path,
    grid: &Grid,
    fields: &[(String, Vec<f64>)],
) -> Result<(), SimError> {
    let n = grid.num_nodes();
    for (name, vals) in fields {
        if vals.len() != n {
            return Err(SimError::InvalidInput(format!(
                "field {name} has {} values, expected {n}",
                vals.len()
            )));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let r: Result<(), std::io::Error> = (|| {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "stoch-ch field snapshot")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET STRUCTURED_POINTS")?;
        writeln!(w, "DIMENSIONS {} {} 1", grid.nx + 1, grid.ny + 1)?;
        writeln!(w, "ORIGIN 0 0 0")?;
        writeln!(w, "SPACING {} {} 1", format_g17(grid.hx), format_g17(grid.hy))?;
        writeln!(w, "POINT_DATA {n}")?;
        for (name, vals) in fields {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in vals {
                writeln!(w, "{}", format_g17(*v))?;
            }
        }
        Ok(())
    })();
    r.map_err(|e| io_err(path, e))
}
