//! Sparse kernels and the per-step linear solver.
//!
//! The default solver is restarted GMRES with zero-fill incomplete-LU
//! right preconditioning (diagonal scaling as fallback when the
//! factorization breaks down); everything runs single-threaded with a fixed
//! iteration order so repeated solves of the same system are bit-identical.
//! A dense LU fallback serves small systems and the verification suite.

use crate::assembly::SparseMatrix;
use crate::error::SimError;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// CSR matrix-vector product.
pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>, SimError> {
    if x.len() != a.ncols {
        return Err(SimError::DimensionMismatch {
            expected: a.ncols,
            got: x.len(),
        });
    }
    let mut y = vec![0.0; a.nrows];
    spmv_into(a, x, &mut y);
    Ok(y)
}

pub fn spmv_into(a: &SparseMatrix, x: &[f64], y: &mut [f64]) {
    for i in 0..a.nrows {
        let mut acc = 0.0;
        for k in a.row_offsets[i]..a.row_offsets[i + 1] {
            acc += a.values[k] * x[a.col_indices[k]];
        }
        y[i] = acc;
    }
}

/// Default relative tolerance of the per-step solver.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default restart length.
pub const GMRES_RESTART: usize = 50;

/// Default iteration cap for an n x n system.
pub fn default_max_iter(n: usize) -> usize {
    10 * n
}

/// Zero-fill incomplete LU factorization (ILU(0)): L and U live in the
/// sparsity pattern of A itself, with L unit-diagonal. Column indices must
/// be sorted within each row, as produced by assembly.
pub struct Ilu0 {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Factor `a`; returns `None` when a diagonal entry is absent or a
    /// pivot vanishes (caller falls back to diagonal scaling).
    pub fn new(a: &SparseMatrix) -> Option<Ilu0> {
        let n = a.nrows;
        let mut values = a.values.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in a.row_offsets[i]..a.row_offsets[i + 1] {
                if a.col_indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return None;
            }
        }
        // pos[j] = index of (i, j) inside the current row, or MAX.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let lo = a.row_offsets[i];
            let hi = a.row_offsets[i + 1];
            for k in lo..hi {
                pos[a.col_indices[k]] = k;
            }
            let mut ok = true;
            for k in lo..hi {
                let col = a.col_indices[k];
                if col >= i {
                    break;
                }
                let piv = values[diag[col]];
                if piv == 0.0 {
                    ok = false;
                    break;
                }
                let lik = values[k] / piv;
                values[k] = lik;
                for kk in (diag[col] + 1)..a.row_offsets[col + 1] {
                    let p = pos[a.col_indices[kk]];
                    if p != usize::MAX {
                        values[p] -= lik * values[kk];
                    }
                }
            }
            for k in lo..hi {
                pos[a.col_indices[k]] = usize::MAX;
            }
            if !ok || values[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(Ilu0 {
            row_offsets: a.row_offsets.clone(),
            col_indices: a.col_indices.clone(),
            values,
            diag,
        })
    }

    /// Solve `L U out = r`.
    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = r[i];
            for k in self.row_offsets[i]..self.diag[i] {
                acc -= self.values[k] * out[self.col_indices[k]];
            }
            out[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = out[i];
            for k in (self.diag[i] + 1)..self.row_offsets[i + 1] {
                acc -= self.values[k] * out[self.col_indices[k]];
            }
            out[i] = acc / self.values[self.diag[i]];
        }
    }
}

enum Precond {
    Ilu(Ilu0),
    Jacobi(Vec<f64>),
}

impl Precond {
    fn build(a: &SparseMatrix) -> Precond {
        match Ilu0::new(a) {
            Some(f) => Precond::Ilu(f),
            None => {
                let mut dinv = vec![1.0; a.nrows];
                for (i, d) in dinv.iter_mut().enumerate() {
                    let v = a.get(i, i);
                    if v != 0.0 {
                        *d = 1.0 / v;
                    }
                }
                Precond::Jacobi(dinv)
            }
        }
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) {
        match self {
            Precond::Ilu(f) => f.apply(r, out),
            Precond::Jacobi(dinv) => {
                for ((o, ri), di) in out.iter_mut().zip(r).zip(dinv) {
                    *o = ri * di;
                }
            }
        }
    }
}

/// Solve `A x = b` by restarted GMRES with ILU(0) right preconditioning.
///
/// On success the true residual satisfies
/// `||A x - b||_2 <= tol * max(||b||_2, tiny)`.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, SimError> {
    gmres(a, b, tol, max_iter, GMRES_RESTART)
}

/// Solve a system whose unknowns are `fields` equally sized blocks stored
/// block-by-block (`[u; v; ...]`), reordering to a node-interleaved layout
/// (`u_0, v_0, ..., u_1, v_1, ...`) before GMRES. ILU(0) captures far more of
/// the inter-field coupling when the fields of one node are adjacent in the
/// matrix, which is decisive on fine grids. The returned solution is in the
/// original block layout and satisfies the same residual contract as
/// [`solve`] (the reordering is a permutation, so 2-norms are unchanged).
pub fn solve_interleaved(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    fields: usize,
) -> Result<Vec<f64>, SimError> {
    let nt = a.nrows;
    if fields < 2 || nt % fields != 0 {
        return solve(a, b, tol, max_iter);
    }
    if b.len() != nt {
        return Err(SimError::DimensionMismatch {
            expected: nt,
            got: b.len(),
        });
    }
    let n = nt / fields;
    // old index f*n + i  <->  new index i*fields + f
    let mut row_offsets = Vec::with_capacity(nt + 1);
    let mut col_indices = Vec::with_capacity(a.nnz());
    let mut values = Vec::with_capacity(a.nnz());
    let mut bp = vec![0.0; nt];
    let mut entries: Vec<(usize, f64)> = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        for f in 0..fields {
            let old = f * n + i;
            bp[i * fields + f] = b[old];
            entries.clear();
            for k in a.row_offsets[old]..a.row_offsets[old + 1] {
                let c = a.col_indices[k];
                entries.push(((c % n) * fields + c / n, a.values[k]));
            }
            entries.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &entries {
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
    }
    let ap = SparseMatrix {
        nrows: nt,
        ncols: nt,
        row_offsets,
        col_indices,
        values,
    };
    let xp = solve(&ap, &bp, tol, max_iter)?;
    let mut x = vec![0.0; nt];
    for i in 0..n {
        for f in 0..fields {
            x[f * n + i] = xp[i * fields + f];
        }
    }
    Ok(x)
}

pub fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> Result<Vec<f64>, SimError> {
    let n = a.nrows;
    if a.ncols != n {
        return Err(SimError::DimensionMismatch {
            expected: n,
            got: a.ncols,
        });
    }
    if b.len() != n {
        return Err(SimError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(SimError::InvalidInput("solver tolerance must be positive".into()));
    }

    let precond = Precond::build(a);
    let mut z = vec![0.0; n];

    let bnorm = norm2(b);
    let target = tol * bnorm.max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }

    let m = restart.max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0f64; m]; m + 1];
    let mut total_iters = 0usize;
    let mut residual;

    'outer: loop {
        // r = b - A x
        let ax = spmv(a, &x)?;
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        residual = beta;
        if beta <= target {
            return Ok(x);
        }
        if total_iters >= max_iter {
            break 'outer;
        }

        for row in h.iter_mut() {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        r.iter_mut().for_each(|v| *v /= beta);
        basis.clear();
        basis.push(r);

        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut k_used = 0;

        for j in 0..m {
            if total_iters >= max_iter {
                break;
            }
            total_iters += 1;

            // w = A M^{-1} v_j
            precond.apply(&basis[j], &mut z);
            let mut w = spmv(a, &z)?;

            // Modified Gram-Schmidt.
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[i][j] = hij;
                for (wv, vv) in w.iter_mut().zip(&basis[i]) {
                    *wv -= hij * vv;
                }
            }
            let hj1 = norm2(&w);
            h[j + 1][j] = hj1;

            // Apply previous Givens rotations to the new column.
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + hj1 * hj1).sqrt();
            if denom == 0.0 {
                k_used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hj1 / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            k_used = j + 1;

            let est = g[j + 1].abs();
            if est <= target {
                break;
            }
            if hj1 == 0.0 {
                break;
            }
            w.iter_mut().for_each(|v| *v /= hj1);
            basis.push(w);
        }

        if k_used == 0 {
            break 'outer;
        }

        // Back-substitute y from the triangular least-squares system.
        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for jj in (i + 1)..k_used {
                acc -= h[i][jj] * y[jj];
            }
            y[i] = acc / h[i][i];
        }
        // x += M^{-1} (V y)
        let mut u = vec![0.0; n];
        for i in 0..k_used {
            let yi = y[i];
            for (uv, vv) in u.iter_mut().zip(&basis[i]) {
                *uv += yi * vv;
            }
        }
        precond.apply(&u, &mut z);
        for (xv, zv) in x.iter_mut().zip(&z) {
            *xv += zv;
        }

        // Loop back to recompute the true residual; exits there if converged.
        if total_iters >= max_iter {
            let ax = spmv(a, &x)?;
            residual = norm2(
                &b.iter()
                    .zip(&ax)
                    .map(|(bi, ai)| bi - ai)
                    .collect::<Vec<_>>(),
            );
            if residual <= target {
                return Ok(x);
            }
            break 'outer;
        }
    }

    Err(SimError::NonConvergence {
        iterations: total_iters,
        residual,
        tolerance: target,
    })
}

/// Dense LU solve with partial pivoting. Used as the small-system fallback
/// and as the independent oracle in tests.
pub fn dense_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Result<Vec<f64>, SimError> {
    let n = a.len();
    if b.len() != n {
        return Err(SimError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col][col].abs();
        for row in (col + 1)..n {
            if a[row][col].abs() > best {
                best = a[row][col].abs();
                piv = row;
            }
        }
        if best == 0.0 {
            return Err(SimError::NonConvergence {
                iterations: 0,
                residual: f64::INFINITY,
                tolerance: 0.0,
            });
        }
        if piv != col {
            a.swap(piv, col);
            x.swap(piv, col);
        }
        let d = a[col][col];
        for row in (col + 1)..n {
            let f = a[row][col] / d;
            if f == 0.0 {
                continue;
            }
            a[row][col] = 0.0;
            for k in (col + 1)..n {
                a[row][k] -= f * a[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Coupled 3x3 block system with unknown ordering [phi, mu, sigma].
pub struct BlockSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// Compose a 3N x 3N CSR matrix from scalar N x N blocks that all share the
/// same sparsity pattern. `blocks[br][bc]` is a list of (coefficient, values)
/// pairs accumulated into that block; empty lists leave the block out of the
/// pattern entirely.
pub fn compose_block3(
    row_offsets: &[usize],
    col_indices: &[usize],
    n: usize,
    blocks: &[[Vec<(f64, &[f64])>; 3]; 3],
) -> SparseMatrix {
    let scalar_nnz = col_indices.len();
    let mut nnz = 0;
    for row in blocks {
        for cell in row {
            if !cell.is_empty() {
                nnz += scalar_nnz;
            }
        }
    }
    let mut out_offsets = Vec::with_capacity(3 * n + 1);
    let mut out_cols = Vec::with_capacity(nnz);
    let mut out_vals = Vec::with_capacity(nnz);
    out_offsets.push(0);
    for br in 0..3 {
        for i in 0..n {
            let lo = row_offsets[i];
            let hi = row_offsets[i + 1];
            for (bc, cell) in blocks[br].iter().enumerate() {
                if cell.is_empty() {
                    continue;
                }
                for k in lo..hi {
                    let mut v = 0.0;
                    for (c, vals) in cell {
                        v += c * vals[k];
                    }
                    out_cols.push(bc * n + col_indices[k]);
                    out_vals.push(v);
                }
            }
            out_offsets.push(out_cols.len());
        }
    }
    SparseMatrix {
        nrows: 3 * n,
        ncols: 3 * n,
        row_offsets: out_offsets,
        col_indices: out_cols,
        values: out_vals,
    }
}

/// Replace row `row` by the identity row with right-hand side `value`.
/// The diagonal entry must be inside the pattern.
pub fn set_identity_row(a: &mut SparseMatrix, rhs: &mut [f64], row: usize, value: f64) {
    let lo = a.row_offsets[row];
    let hi = a.row_offsets[row + 1];
    for k in lo..hi {
        a.values[k] = if a.col_indices[k] == row { 1.0 } else { 0.0 };
    }
    rhs[row] = value;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_stiffness, SparseMatrix};
    use crate::mesh::Grid;

    fn csr_from_dense(d: &[Vec<f64>]) -> SparseMatrix {
        let nrows = d.len();
        let ncols = d[0].len();
        let mut row_offsets = vec![0usize];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for row in d {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        }
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / (1u64 << 53) as f64
    }

    #[test]
    fn spmv_identity_and_hand_case() {
        let i2 = csr_from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(spmv(&i2, &[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
        let a = csr_from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(spmv(&a, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert!(spmv(&a, &[1.0]).is_err());
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        let n = 50;
        let mut seed = 12345u64;
        let mut d = vec![vec![0.0; n]; n];
        for row in d.iter_mut() {
            for v in row.iter_mut() {
                if lcg(&mut seed) < 0.2 {
                    *v = lcg(&mut seed) - 0.5;
                }
            }
        }
        let a = csr_from_dense(&d);
        let x: Vec<f64> = (0..n).map(|_| lcg(&mut seed) - 0.5).collect();
        let y = spmv(&a, &x).unwrap();
        for i in 0..n {
            let oracle: f64 = (0..n).map(|j| d[i][j] * x[j]).sum();
            assert!((y[i] - oracle).abs() < 1e-13);
        }
    }

    #[test]
    fn gmres_identity() {
        let i3 = csr_from_dense(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let b = vec![1.0, -2.0, 3.0];
        let x = solve(&i3, &b, 1e-12, 100).unwrap();
        for i in 0..3 {
            assert!((x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gmres_vs_dense_lu() {
        let d = vec![
            vec![10.0, 1.0, 2.0],
            vec![-1.0, 8.0, 1.5],
            vec![0.5, -2.0, 12.0],
        ];
        let b = [1.0, 2.0, -3.0];
        let a = csr_from_dense(&d);
        let x = solve(&a, &b, 1e-13, 1000).unwrap();
        let oracle = dense_solve(d, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - oracle[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn interleaved_solve_matches_dense() {
        // Three-field random sparse block system; the interleaved path must
        // return the same solution as dense LU, in the original block layout.
        let nper = 12;
        let n = 3 * nper;
        let mut seed = 4242u64;
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i == j {
                    *v = 5.0 + lcg(&mut seed);
                } else if lcg(&mut seed) < 0.15 {
                    *v = lcg(&mut seed) - 0.5;
                }
            }
        }
        let a = csr_from_dense(&d);
        let b: Vec<f64> = (0..n).map(|_| lcg(&mut seed) - 0.5).collect();
        let x = solve_interleaved(&a, &b, 1e-12, 10 * n, 3).unwrap();
        let oracle = dense_solve(d, &b).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-9, "x[{i}]");
        }
    }

    #[test]
    fn interleaved_solve_falls_back_on_indivisible_size() {
        let d = vec![vec![3.0, 1.0], vec![0.0, 2.0]];
        let a = csr_from_dense(&d);
        let x = solve_interleaved(&a, &[3.0, 4.0], 1e-12, 100, 3).unwrap();
        assert!((x[1] - 2.0).abs() < 1e-10);
        assert!((x[0] - (3.0 - 2.0) / 3.0).abs() < 1e-10);
    }

    #[test]
    fn gmres_random_system_residual_contract() {
        let n = 80;
        let mut seed = 999u64;
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i == j {
                    *v = 4.0 + lcg(&mut seed);
                } else if lcg(&mut seed) < 0.1 {
                    *v = 0.5 * (lcg(&mut seed) - 0.5);
                }
            }
        }
        let a = csr_from_dense(&d);
        let b: Vec<f64> = (0..n).map(|_| lcg(&mut seed) - 0.5).collect();
        let tol = 1e-11;
        let x = solve(&a, &b, tol, 10 * n).unwrap();
        let r: Vec<f64> = spmv(&a, &x)
            .unwrap()
            .iter()
            .zip(&b)
            .map(|(ax, bi)| bi - ax)
            .collect();
        assert!(norm2(&r) <= tol * norm2(&b));
    }

    #[test]
    fn gmres_deterministic() {
        let grid = Grid::build(8, 8, 1.0, 1.0).unwrap();
        let k = assemble_stiffness(&grid);
        // Shifted stiffness is SPD.
        let mut a = k.clone();
        for i in 0..a.nrows {
            let lo = a.row_offsets[i];
            let hi = a.row_offsets[i + 1];
            for kk in lo..hi {
                if a.col_indices[kk] == i {
                    a.values[kk] += 1.0;
                }
            }
        }
        let b: Vec<f64> = (0..a.nrows).map(|i| (i as f64).sin()).collect();
        let x1 = solve(&a, &b, 1e-12, 10_000).unwrap();
        let x2 = solve(&a, &b, 1e-12, 10_000).unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn singular_system_reports_nonconvergence() {
        let grid = Grid::build(4, 4, 1.0, 1.0).unwrap();
        let k = assemble_stiffness(&grid);
        // Constant b is incompatible with range(K) = {1}^perp.
        let b = vec![1.0; k.nrows];
        match solve(&k, &b, 1e-12, 200) {
            Err(SimError::NonConvergence { .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn dense_lu_singular() {
        let d = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(dense_solve(d, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn block_compose_and_dirichlet_rows() {
        let grid = Grid::build(2, 2, 1.0, 1.0).unwrap();
        let asm = crate::assembly::Assembler::new(&grid);
        let m = asm.mass();
        let k = asm.stiffness();
        let n = grid.num_nodes();
        let blocks: [[Vec<(f64, &[f64])>; 3]; 3] = [
            [vec![(1.0, &m.values)], vec![(0.5, &k.values)], vec![]],
            [vec![(-2.0, &k.values), (1.0, &m.values)], vec![(1.0, &m.values)], vec![]],
            [vec![], vec![], vec![(1.0, &m.values), (0.5, &k.values)]],
        ];
        let mut a = compose_block3(&m.row_offsets, &m.col_indices, n, &blocks);
        assert_eq!(a.nrows, 3 * n);
        // Spot-check block placement against scalar entries.
        assert!((a.get(0, 0) - m.get(0, 0)).abs() < 1e-15);
        assert!((a.get(0, n) - 0.5 * k.get(0, 0)).abs() < 1e-15);
        assert!((a.get(n + 1, 1) - (m.get(1, 1) - 2.0 * k.get(1, 1))).abs() < 1e-15);
        assert!((a.get(2 * n + 3, 2 * n + 4) - (m.get(3, 4) + 0.5 * k.get(3, 4))).abs() < 1e-15);

        let mut rhs = vec![2.0; 3 * n];
        set_identity_row(&mut a, &mut rhs, 2 * n + 1, 7.0);
        assert_eq!(a.get(2 * n + 1, 2 * n + 1), 1.0);
        assert_eq!(a.get(2 * n + 1, 2 * n), 0.0);
        assert_eq!(rhs[2 * n + 1], 7.0);
    }
}
