//! Smallest Laplacian eigenpairs and the per-point spectral coordinates.
//!
//! Two solver paths share one contract: a dense cyclic-Jacobi decomposition
//! as the exact reference for small graphs, and a deflated Lanczos iteration
//! with full reorthogonalization for everything else. [`embed`] sits on top,
//! discarding the trivial constant-vector eigenspace (one zero eigenvalue per
//! connected component) before retaining the first `r` nontrivial pairs.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::graph::{laplacian_components, LaplacianMatrix};
use crate::{Error, Result};

/// Above this vertex count the dense path refuses and callers must use the
/// Lanczos path.
pub const DENSE_CUTOFF: usize = 2000;

/// Residual tolerance used by [`embed`]; one digit tighter than the
/// published 1e-6 embedding invariant.
const EMBED_TOL: f64 = 1e-7;

/// Per-point spectral coordinates: row u holds the u-th entries of the first
/// `r` nontrivial eigenvectors, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    n_points: usize,
    r: usize,
    coords: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl SpectralEmbedding {
    /// Assembles an embedding from raw parts without solving; the in-crate
    /// tests use this to stage hand-built coordinate matrices.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn from_raw_parts(
        n_points: usize,
        r: usize,
        coords: Vec<f64>,
        eigenvalues: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(coords.len(), n_points * r);
        Self {
            n_points,
            r,
            coords,
            eigenvalues,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Spectral coordinates of point `u` (length `r`).
    pub fn point(&self, u: usize) -> &[f64] {
        &self.coords[u * self.r..(u + 1) * self.r]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Dumps the n x r coordinate matrix as CSV with 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        for u in 0..self.n_points {
            let row = self.point(u);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    write!(out, ",")?;
                }
                write!(out, "{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Computes the first `r` nontrivial eigenpairs of `l` and packs them as
/// per-point coordinates.
///
/// The trivial near-zero eigenspace (one eigenvalue per connected component)
/// is dropped before counting `r`; each dropped eigenvalue is checked to be
/// below `1e-8` times a Gershgorin bound on the largest eigenvalue. Errors
/// when `r` exceeds the `n - n_components` available nontrivial pairs.
pub fn embed(l: &LaplacianMatrix, r: usize, seed: u64) -> Result<SpectralEmbedding> {
    let n = l.n_vertices();
    if r < 1 {
        return Err(Error::InvalidParameter("embedding dimension r must be at least 1".into()));
    }
    if r >= n {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension r = {r} must be smaller than the vertex count {n}"
        )));
    }
    let components = laplacian_components(l);
    let n_components = components.iter().copied().max().unwrap_or(0) + 1;
    let available = n - n_components;
    if r > available {
        return Err(Error::InvalidParameter(format!(
            "r = {r} exceeds the {available} nontrivial eigenpairs of a graph with \
             {n_components} connected components (deficit {})",
            r - available
        )));
    }

    let m = r + n_components;
    // The Lanczos path serves m < n; asking for the full spectrum (tiny
    // graphs, r close to n) goes to the dense reference solver.
    let (evals, evecs) = if m < n {
        let max_iter = (n - 1).min(1500.max(12 * m));
        smallest_eigenpairs_lanczos(l, m, EMBED_TOL, max_iter, seed)?
    } else {
        smallest_eigenpairs_dense(l, m)?
    };

    // The first n_components eigenvalues span the constant-per-component
    // null space; everything retained must sit above the trivial threshold.
    let threshold = 1e-8 * l.eigenvalue_upper_bound();
    if evals[n_components - 1] > threshold {
        return Err(Error::NonConvergence {
            worst: evals[n_components - 1],
            tol: threshold,
            residuals: evals.clone(),
        });
    }

    let eigenvalues: Vec<f64> = evals[n_components..].to_vec();
    let mut coords = vec![0.0; n * r];
    for (j, vec) in evecs[n_components..].iter().enumerate() {
        for (u, &value) in vec.iter().enumerate() {
            coords[u * r + j] = value;
        }
    }
    Ok(SpectralEmbedding {
        n_points: n,
        r,
        coords,
        eigenvalues,
    })
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations; returns the
/// smallest `m` pairs ascending. Exact reference path, `n <= DENSE_CUTOFF`.
pub fn smallest_eigenpairs_dense(
    l: &LaplacianMatrix,
    m: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = l.n_vertices();
    if n > DENSE_CUTOFF {
        return Err(Error::InvalidParameter(format!(
            "dense eigensolver limited to {DENSE_CUTOFF} vertices (got {n}); use the Lanczos path"
        )));
    }
    if m < 1 || m > n {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenpairs from a {n}x{n} matrix"
        )));
    }
    let (evals, evecs) = jacobi_eigen(l.to_dense(), n)?;
    Ok((evals[..m].to_vec(), evecs[..m].to_vec()))
}

/// Deflated Lanczos with full reorthogonalization.
///
/// The null space of a Laplacian is exactly the span of the connected
/// component indicator vectors, so those pairs are known without iterating:
/// the Krylov process runs in their orthogonal complement (reorthogonalizing
/// against the constant-per-component basis and the full Krylov basis each
/// step) and the null pairs are merged back into the output. Converged means
/// every retained Ritz pair has explicit residual
/// |L v - lambda v| <= tol * max(1, lambda). Deterministic in `seed`.
///
/// Degenerate positive eigenvalues surface one copy per Krylov block; extra
/// copies appear through breakdown restarts, so heavily symmetric graphs at
/// small n are better served by the dense path.
pub fn smallest_eigenpairs_lanczos(
    l: &LaplacianMatrix,
    m: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = l.n_vertices();
    if m < 1 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if m > n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "Lanczos path requires m <= n - 1 (got m = {m}, n = {n})"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }

    let null_basis = null_space_basis(l);
    let c = null_basis.len();
    if m <= c {
        let evals = vec![0.0; m];
        let evecs: Vec<Vec<f64>> = null_basis[..m]
            .iter()
            .map(|v| {
                let mut v = v.clone();
                fix_sign(&mut v);
                v
            })
            .collect();
        return Ok((evals, evecs));
    }
    let want = m - c;
    let jmax = max_iter.min(n - c);
    if jmax < want {
        return Err(Error::InvalidParameter(format!(
            "max_iter = {max_iter} cannot produce {want} Ritz pairs"
        )));
    }

    let scale = l.eigenvalue_upper_bound().max(1.0);
    let breakdown_tol = 1e-12 * scale;
    let mut rng = crate::dataset::seeded_rng(seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = random_deflated_unit(&mut rng, &null_basis, &basis)
        .expect("the positive-spectrum complement admits a start vector");
    let mut w = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;

    loop {
        basis.push(std::mem::take(&mut v));
        let j = basis.len();
        l.mul_vec(&basis[j - 1], &mut w);
        let alpha = dot(&basis[j - 1], &w);
        alphas.push(alpha);
        if j >= 2 {
            let b = betas[j - 2];
            axpy(&mut w, -b, &basis[j - 2]);
        }
        axpy(&mut w, -alpha, &basis[j - 1]);
        reorthogonalize(&mut w, &null_basis, &basis);
        let beta = norm(&w);
        let breakdown = beta <= breakdown_tol;

        let scheduled = j >= want && (j % 16 == 0 || j == jmax || breakdown);
        if scheduled {
            if let Some(result) = try_extract(
                l,
                &null_basis,
                &basis,
                &alphas,
                &betas,
                beta,
                want,
                tol,
                &mut best,
            )? {
                return Ok(result);
            }
        }
        if j == jmax {
            break;
        }

        if breakdown {
            // Invariant subspace found; continue in a fresh random direction.
            // The zero coupling keeps the projected matrix block tridiagonal.
            match random_deflated_unit(&mut rng, &null_basis, &basis) {
                Some(fresh) => {
                    v = fresh;
                    betas.push(0.0);
                }
                None => break,
            }
        } else {
            v = w.iter().map(|x| x / beta).collect();
            betas.push(beta);
        }
    }

    let (worst, residuals) = best
        .map(|(w, r)| (w, r))
        .unwrap_or((f64::INFINITY, Vec::new()));
    Err(Error::NonConvergence {
        worst,
        tol,
        residuals,
    })
}

/// Orthonormal basis of the Laplacian null space: the global constant first,
/// then one Gram-Schmidt-orthogonalized component indicator per remaining
/// connected component, in component-id order.
fn null_space_basis(l: &LaplacianMatrix) -> Vec<Vec<f64>> {
    let n = l.n_vertices();
    let components = laplacian_components(l);
    let c = components.iter().copied().max().unwrap_or(0) + 1;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(c);
    basis.push(vec![1.0 / (n as f64).sqrt(); n]);
    for t in 1..c {
        let mut v: Vec<f64> = components
            .iter()
            .map(|&id| if id == t { 1.0 } else { 0.0 })
            .collect();
        for prev in &basis {
            let coeff = dot(&v, prev);
            axpy(&mut v, -coeff, prev);
        }
        let len = norm(&v);
        for value in v.iter_mut() {
            *value /= len;
        }
        basis.push(v);
    }
    basis
}

/// Convergence check and Ritz extraction for the Lanczos loop. Returns the
/// merged eigenpairs (known null pairs included) once every retained pair
/// passes the explicit residual test.
#[allow(clippy::too_many_arguments)]
fn try_extract(
    l: &LaplacianMatrix,
    null_basis: &[Vec<f64>],
    basis: &[Vec<f64>],
    alphas: &[f64],
    betas: &[f64],
    beta_current: f64,
    want: usize,
    tol: f64,
    best: &mut Option<(f64, Vec<f64>)>,
) -> Result<Option<(Vec<f64>, Vec<Vec<f64>>)>> {
    let j = alphas.len();

    // Cheap screen: residual bound |beta_j| * |last component of s_i|,
    // tracking only the bottom row of the tridiagonal eigenvector matrix.
    let mut d = alphas.to_vec();
    let mut e = padded_offdiag(betas, j);
    let mut last_row = vec![vec![0.0; j]];
    last_row[0][j - 1] = 1.0;
    tridiag_ql(&mut d, &mut e, &mut last_row)?;
    let passes_bound = (0..want).all(|i| {
        let bound = beta_current * last_row[0][i].abs();
        bound <= tol * d[i].max(1.0)
    });
    if !passes_bound {
        return Ok(None);
    }

    // Full extraction: eigenvectors of the projected matrix, then Ritz
    // vectors in the original space with explicit residual verification.
    let mut d = alphas.to_vec();
    let mut e = padded_offdiag(betas, j);
    let mut z: Vec<Vec<f64>> = (0..j)
        .map(|rowi| {
            let mut row = vec![0.0; j];
            row[rowi] = 1.0;
            row
        })
        .collect();
    tridiag_ql(&mut d, &mut e, &mut z)?;

    let n = l.n_vertices();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(want);
    let mut worst = 0.0f64;
    let mut residuals = Vec::with_capacity(want);
    let mut ly = vec![0.0; n];
    for i in 0..want {
        let mut y = vec![0.0; n];
        for (r, base) in basis.iter().enumerate() {
            let s = z[r][i];
            if s != 0.0 {
                axpy(&mut y, s, base);
            }
        }
        let len = norm(&y);
        for value in y.iter_mut() {
            *value /= len;
        }
        l.mul_vec(&y, &mut ly);
        let theta = dot(&y, &ly);
        let mut res_sq = 0.0;
        for (a, b) in ly.iter().zip(&y) {
            let r = a - theta * b;
            res_sq += r * r;
        }
        let res = res_sq.sqrt();
        residuals.push(res);
        worst = worst.max(res / d[i].max(1.0));
        pairs.push((theta, y));
    }

    if worst > tol {
        let replace = best.as_ref().map_or(true, |(bw, _)| worst < *bw);
        if replace {
            *best = Some((worst, residuals));
        }
        return Ok(None);
    }

    let mut merged: Vec<(f64, Vec<f64>)> = Vec::with_capacity(want + null_basis.len());
    for null_vec in null_basis {
        merged.push((0.0, null_vec.clone()));
    }
    merged.extend(pairs);
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut evals = Vec::with_capacity(want + 1);
    let mut evecs = Vec::with_capacity(want + 1);
    for (theta, mut y) in merged {
        fix_sign(&mut y);
        evals.push(theta);
        evecs.push(y);
    }
    Ok(Some((evals, evecs)))
}

fn padded_offdiag(betas: &[f64], j: usize) -> Vec<f64> {
    let mut e = vec![0.0; j];
    e[..j - 1].copy_from_slice(&betas[..j - 1]);
    e
}

/// Random unit vector orthogonal to the null basis and the Krylov basis
/// built so far; `None` once the complement is exhausted.
fn random_deflated_unit(
    rng: &mut impl Rng,
    null_basis: &[Vec<f64>],
    basis: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let n = null_basis[0].len();
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        reorthogonalize(&mut v, null_basis, basis);
        let len = norm(&v);
        if len > 1e-8 {
            for value in v.iter_mut() {
                *value /= len;
            }
            return Some(v);
        }
    }
    None
}

/// One or two passes of classical Gram-Schmidt against the null basis and
/// every Krylov basis vector; the second pass runs when cancellation ate too
/// much of the vector's length.
fn reorthogonalize(w: &mut [f64], null_basis: &[Vec<f64>], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        let before = norm(w);
        for b in null_basis.iter().chain(basis) {
            let c = dot(w, b);
            axpy(w, -c, b);
        }
        if norm(w) > 0.7 * before {
            break;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips a vector so its largest-magnitude entry is positive (ties resolved
/// to the lowest index); makes eigenvectors comparable across solvers.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, value) in v.iter().enumerate() {
        if value.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for value in v.iter_mut() {
            *value = -*value;
        }
    }
}

/// Eigendecomposition of a symmetric tridiagonal matrix by the implicit-shift
/// QL algorithm. `d` holds the diagonal, `e[..n-1]` the subdiagonal (`e[n-1]`
/// is scratch). The accumulated rotations are applied to each row in
/// `z_rows`; passing the identity yields the full eigenvector matrix, whose
/// column c (entries `z_rows[r][c]`) pairs with eigenvalue `d[c]`.
/// Eigenvalues come out ascending.
fn tridiag_ql(d: &mut [f64], e: &mut [f64], z_rows: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::NonConvergence {
                    worst: e[l].abs(),
                    tol: f64::EPSILON,
                    residuals: vec![e[l].abs()],
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z_rows.iter_mut() {
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Ascending order, stable for ties; permute the tracked rows to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)));
    let sorted_d: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted_d);
    for row in z_rows.iter_mut() {
        let sorted_row: Vec<f64> = order.iter().map(|&i| row[i]).collect();
        row.copy_from_slice(&sorted_row);
    }
    Ok(())
}

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix (row-major).
/// Returns all eigenpairs ascending, eigenvectors sign-fixed.
fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n > 1 {
        let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let stop = (1e-14 * frob).max(f64::MIN_POSITIVE);
        let mut converged = false;
        for sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            let off = off.sqrt();
            if off <= stop {
                converged = true;
                break;
            }
            // Skip tiny rotations early; sweep everything later.
            let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= threshold {
                        continue;
                    }
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    a[p * n + p] = app - t * apq;
                    a[q * n + q] = aqq + t * apq;
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for i in 0..n {
                        if i != p && i != q {
                            let aip = a[i * n + p];
                            let aiq = a[i * n + q];
                            a[i * n + p] = c * aip - s * aiq;
                            a[i * n + q] = s * aip + c * aiq;
                            a[p * n + i] = a[i * n + p];
                            a[q * n + i] = a[i * n + q];
                        }
                        let vip = v[i * n + p];
                        let viq = v[i * n + q];
                        v[i * n + p] = c * vip - s * viq;
                        v[i * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
        if !converged {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off.sqrt() > 1e-9 * frob.max(1.0) {
                return Err(Error::NonConvergence {
                    worst: off.sqrt(),
                    tol: stop,
                    residuals: vec![off.sqrt()],
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        a[x * n + x]
            .partial_cmp(&a[y * n + y])
            .unwrap()
            .then(x.cmp(&y))
    });
    let evals: Vec<f64> = order.iter().map(|&j| a[j * n + j]).collect();
    let evecs: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + j]).collect();
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok((evals, evecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::random_matrix;
    use crate::graph::{build_knn_graph, connected_components, laplacian, SparseGraph, Weighting};

    fn path3() -> LaplacianMatrix {
        laplacian(&SparseGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap())
    }

    fn complete4() -> LaplacianMatrix {
        let mut edges = Vec::new();
        for p in 0..4 {
            for q in (p + 1)..4 {
                edges.push((p, q, 1.0));
            }
        }
        laplacian(&SparseGraph::from_edges(4, &edges).unwrap())
    }

    fn triangle() -> LaplacianMatrix {
        laplacian(
            &SparseGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap(),
        )
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn dense_two_vertex_edge() {
        let l = laplacian(&SparseGraph::from_edges(2, &[(0, 1, 2.0)]).unwrap());
        let (evals, _) = smallest_eigenpairs_dense(&l, 2).unwrap();
        assert_close(&evals, &[0.0, 4.0], 1e-9);
    }

    #[test]
    fn dense_single_vertex() {
        let l = laplacian(&SparseGraph::from_edges(1, &[]).unwrap());
        let (evals, evecs) = smallest_eigenpairs_dense(&l, 1).unwrap();
        assert_close(&evals, &[0.0], 1e-12);
        assert_close(&evecs[0], &[1.0], 1e-12);
    }

    #[test]
    fn dense_triangle_spectrum() {
        let (evals, _) = smallest_eigenpairs_dense(&triangle(), 3).unwrap();
        assert_close(&evals, &[0.0, 3.0, 3.0], 1e-9);
    }

    #[test]
    fn dense_path3_spectrum() {
        let (evals, _) = smallest_eigenpairs_dense(&path3(), 3).unwrap();
        assert_close(&evals, &[0.0, 1.0, 3.0], 1e-9);
    }

    #[test]
    fn dense_complete4_spectrum() {
        let (evals, _) = smallest_eigenpairs_dense(&complete4(), 4).unwrap();
        assert_close(&evals, &[0.0, 4.0, 4.0, 4.0], 1e-9);
    }

    #[test]
    fn embed_path3_drops_trivial() {
        let emb = embed(&path3(), 2, 0).unwrap();
        assert_close(emb.eigenvalues(), &[1.0, 3.0], 1e-9);
    }

    #[test]
    fn embed_complete4() {
        let emb = embed(&complete4(), 3, 1).unwrap();
        assert_close(emb.eigenvalues(), &[4.0, 4.0, 4.0], 1e-9);
    }

    #[test]
    fn embed_r1_orthogonal_to_constant() {
        let data = random_matrix(40, 2, -1.0, 1.0, 3);
        let l = laplacian(&build_knn_graph(&data, 4, Weighting::Gaussian).unwrap());
        let emb = embed(&l, 1, 5).unwrap();
        let sum: f64 = (0..40).map(|u| emb.point(u)[0]).sum();
        assert!(sum.abs() < 1e-6 * (40f64).sqrt());
    }

    #[test]
    fn embed_rejects_r_too_large() {
        assert!(embed(&path3(), 3, 0).is_err());
        // Three isolated vertices: zero nontrivial pairs available.
        let l = laplacian(&SparseGraph::from_edges(3, &[]).unwrap());
        let err = embed(&l, 1, 0).unwrap_err();
        assert!(err.to_string().contains("deficit"));
    }

    #[test]
    fn lanczos_rejects_m_equal_n() {
        assert!(smallest_eigenpairs_lanczos(&path3(), 3, 1e-8, 100, 0).is_err());
    }

    #[test]
    fn lanczos_matches_dense_on_knn_graphs() {
        for (seed, n, k) in [(0u64, 50usize, 4usize), (1, 120, 6), (2, 230, 8)] {
            let data = random_matrix(n, 3, -1.0, 1.0, seed);
            let l = laplacian(&build_knn_graph(&data, k, Weighting::Gaussian).unwrap());
            let m = 8.min(n - 1);
            let (dl, _) = smallest_eigenpairs_dense(&l, m).unwrap();
            let (ll, lv) = smallest_eigenpairs_lanczos(&l, m, 1e-8, n - 1, seed).unwrap();
            assert_close(&ll, &dl, 1e-6);
            // Explicit residuals within the embedding invariant.
            let mut ly = vec![0.0; n];
            for (lambda, y) in ll.iter().zip(&lv) {
                l.mul_vec(y, &mut ly);
                let res: f64 = ly
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-6 * lambda.max(1.0), "residual {res}");
            }
            // Orthonormality of the returned vectors.
            for i in 0..lv.len() {
                for j in i..lv.len() {
                    let d = dot(&lv[i], &lv[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn lanczos_deterministic() {
        let data = random_matrix(80, 2, -1.0, 1.0, 7);
        let l = laplacian(&build_knn_graph(&data, 5, Weighting::Gaussian).unwrap());
        let a = smallest_eigenpairs_lanczos(&l, 6, 1e-8, 79, 42).unwrap();
        let b = smallest_eigenpairs_lanczos(&l, 6, 1e-8, 79, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn zero_multiplicity_counts_components() {
        // Two clusters far apart with a small k stay disconnected.
        let mut rows = Vec::new();
        let blob_a = random_matrix(30, 2, -1.0, 1.0, 11);
        let blob_b = random_matrix(30, 2, 99.0, 101.0, 12);
        rows.extend(blob_a.rows().map(|r| r.to_vec()));
        rows.extend(blob_b.rows().map(|r| r.to_vec()));
        let data = crate::dataset::DataMatrix::from_rows(&rows).unwrap();
        let g = build_knn_graph(&data, 3, Weighting::Gaussian).unwrap();
        let comps = connected_components(&g);
        let n_comp = comps.iter().copied().max().unwrap() + 1;
        assert!(n_comp >= 2);
        let l = laplacian(&g);
        let (evals, _) = smallest_eigenpairs_dense(&l, 60).unwrap();
        let threshold = 1e-8 * l.eigenvalue_upper_bound();
        let zeros = evals.iter().filter(|&&v| v < threshold).count();
        assert_eq!(zeros, n_comp);

        let (lvals, _) =
            smallest_eigenpairs_lanczos(&l, (n_comp + 4).min(59), 1e-8, 59, 3).unwrap();
        let lzeros = lvals.iter().filter(|&&v| v < threshold).count();
        assert_eq!(lzeros, n_comp);
    }

    #[test]
    fn tridiag_ql_matches_jacobi() {
        let mut rng = crate::dataset::seeded_rng(19);
        for _ in 0..10 {
            let n = rng.gen_range(2..12usize);
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut dense = vec![0.0; n * n];
            for i in 0..n {
                dense[i * n + i] = diag[i];
                if i + 1 < n {
                    dense[i * n + i + 1] = off[i];
                    dense[(i + 1) * n + i] = off[i];
                }
            }
            let (jac_vals, _) = jacobi_eigen(dense, n).unwrap();

            let mut d = diag.clone();
            let mut e = vec![0.0; n];
            e[..n - 1].copy_from_slice(&off);
            let mut z: Vec<Vec<f64>> = (0..n)
                .map(|r| {
                    let mut row = vec![0.0; n];
                    row[r] = 1.0;
                    row
                })
                .collect();
            tridiag_ql(&mut d, &mut e, &mut z).unwrap();
            assert_close(&d, &jac_vals, 1e-9);

            // Eigenvector columns reproduce T s = lambda s.
            for c in 0..n {
                for r in 0..n {
                    let mut t_s = diag[r] * z[r][c];
                    if r > 0 {
                        t_s += off[r - 1] * z[r - 1][c];
                    }
                    if r + 1 < n {
                        t_s += off[r] * z[r + 1][c];
                    }
                    assert!((t_s - d[c] * z[r][c]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn embedding_csv_has_17_digits() {
        let emb = embed(&path3(), 1, 0).unwrap();
        let mut buf = Vec::new();
        emb.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let first = text.lines().next().unwrap();
        let mantissa = first.split('e').next().unwrap();
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
        assert_eq!(digits, 17);
    }
}
