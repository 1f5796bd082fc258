//! Dense symmetric eigendecomposition and target-overlap extraction.
//!
//! The solver is the classic Householder tridiagonalization followed by
//! implicit-shift QL iteration (EISPACK `tred2`/`tql2` lineage), run entirely
//! in the working scalar type. It is deterministic: a fixed input always
//! produces the same spectrum, eigenvector basis included.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::SearchOperator;
use crate::scalar::Scalar;

/// Relative gap below which adjacent eigenvalues merge into one level.
///
/// Perturbed families (Erdős–Rényi, joined complete) have near-degenerate
/// clusters that must stay separate; pass `0` there to disable merging.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Maximum QL sweeps per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 50;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("QL iteration failed to converge for eigenvalue {index} after {iterations} sweeps (off-diagonal residual {residual})")]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("target vertex {target} out of range for dimension {n}")]
    TargetOutOfRange { target: usize, n: usize },
}

/// Eigendecomposition of a real symmetric operator.
///
/// Eigenvalues ascend; column `z` of `eigenvectors` is the eigenvector of
/// `eigenvalues[z]`. `shift_applied` is the total constant already subtracted
/// from the operator's diagonal (operator shift plus any ground shift):
/// `original eigenvalue = eigenvalues[z] + shift_applied`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum<T: Scalar> {
    pub eigenvalues: Array1<T>,
    pub eigenvectors: Array2<T>,
    pub shift_applied: T,
}

impl<T: Scalar> Spectrum<T> {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Overlap `t_z = <t|z>` of basis vertex `target` with eigenvector `z`.
    pub fn target_component(&self, target: usize, z: usize) -> T {
        self.eigenvectors[(target, z)]
    }

    /// Subtracts the ground energy from every eigenvalue and records it in
    /// `shift_applied`. Eigenvectors are untouched; the dynamics generated by
    /// the shifted operator differs only by a global phase.
    pub fn ground_shift(&self) -> Spectrum<T> {
        if self.eigenvalues.is_empty() {
            return self.clone();
        }
        let e0 = self.eigenvalues[0];
        Spectrum {
            eigenvalues: self.eigenvalues.mapv(|e| e - e0),
            eigenvectors: self.eigenvectors.clone(),
            shift_applied: self.shift_applied + e0,
        }
    }
}

/// One group of (near-)degenerate eigenvalues with the target's aggregated
/// squared overlap on the group's eigenspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Level<T> {
    /// Representative eigenvalue (mean over the group).
    pub value: T,
    /// Number of eigenvalues in the group.
    pub mult: usize,
    /// Squared norm of the target's projection onto the group's eigenspace.
    pub weight: T,
    /// First index of the group in the ascending spectrum.
    pub z_start: usize,
    /// One past the last index of the group.
    pub z_end: usize,
}

/// Distinct eigenvalues with aggregated squared target overlaps per level.
///
/// Level weights are squared projection norms onto whole eigenspaces, so they
/// are invariant under basis rotations inside each degenerate group; no
/// eigenvector sign or degenerate-basis convention leaks downstream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapProfile<T: Scalar> {
    pub target: usize,
    pub n: usize,
    pub levels: Vec<Level<T>>,
}

impl<T: Scalar> OverlapProfile<T> {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Total squared overlap; 1 up to eigenbasis completeness error.
    pub fn total_weight(&self) -> T {
        self.levels.iter().map(|l| l.weight).sum()
    }
}

/// Eigendecomposition of a search operator, carrying its shift through.
pub fn eig_sym<T: Scalar>(op: &SearchOperator<T>) -> Result<Spectrum<T>, SpectralError> {
    let (eigenvalues, eigenvectors) = eigh(op.matrix.view())?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        shift_applied: op.shift_applied,
    })
}

/// Groups the spectrum into levels and aggregates the target's squared
/// overlap per level. Adjacent eigenvalues merge when
/// `|E_i - E_j| <= tol_degeneracy * max(1, |E_i|, |E_j|)`.
pub fn target_overlaps<T: Scalar>(
    spectrum: &Spectrum<T>,
    target: usize,
    tol_degeneracy: T,
) -> Result<OverlapProfile<T>, SpectralError> {
    let n = spectrum.n();
    if target >= n {
        return Err(SpectralError::TargetOutOfRange { target, n });
    }
    let ev = &spectrum.eigenvalues;
    let mut levels = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n {
            let a = ev[end - 1];
            let b = ev[end];
            let scale = T::one().max(a.abs()).max(b.abs());
            if (b - a).abs() <= tol_degeneracy * scale {
                end += 1;
            } else {
                break;
            }
        }
        let mut sum = T::zero();
        let mut weight = T::zero();
        for z in start..end {
            sum += ev[z];
            let tz = spectrum.eigenvectors[(target, z)];
            weight += tz * tz;
        }
        levels.push(Level {
            value: sum / T::from_count(end - start),
            mult: end - start,
            weight,
            z_start: start,
            z_end: end,
        });
        start = end;
    }
    Ok(OverlapProfile { target, n, levels })
}

/// Eigendecomposition of a raw symmetric matrix: ascending eigenvalues plus
/// orthonormal eigenvectors as columns.
pub fn eigh<T: Scalar>(a: ArrayView2<T>) -> Result<(Array1<T>, Array2<T>), SpectralError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh requires a square matrix");
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }

    // Flat row-major working copy.
    let mut m: Vec<T> = Vec::with_capacity(n * n);
    for row in a.rows() {
        m.extend(row.iter().copied());
    }

    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    let hs = householder_tridiag(&mut m, n, &mut d, &mut e);

    // w accumulates the transposed transform: row j of w is the j-th column
    // of the orthogonal reduction matrix. Row layout keeps both the
    // accumulation and the QL Givens updates on contiguous memory.
    let mut w = vec![T::zero(); n * n];
    for i in 0..n {
        w[i * n + i] = T::one();
    }
    accumulate_transposed(&m, &hs, n, &mut w);

    // Couplings renumbered so e2[i] links d[i] and d[i+1].
    let mut e2 = vec![T::zero(); n];
    for i in 1..n {
        e2[i - 1] = e[i];
    }
    ql_implicit(&mut d, &mut e2, &mut w, n)?;

    // Sort ascending, permuting eigenvector rows accordingly.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-finite eigenvalue"));

    let eigenvalues = Array1::from_iter(order.iter().map(|&i| d[i]));
    let mut vectors = Array2::zeros((n, n));
    for (z, &src) in order.iter().enumerate() {
        let row = &w[src * n..(src + 1) * n];
        for (i, &value) in row.iter().enumerate() {
            vectors[(i, z)] = value;
        }
    }
    Ok((eigenvalues, vectors))
}

/// Householder reduction of the full symmetric matrix to tridiagonal form.
///
/// On exit `d` holds the diagonal, `e[i]` (i >= 1) the coupling between rows
/// `i-1` and `i`, the Householder vectors live in rows of `m` (`m[i][0..i]`),
/// and the returned vector carries each reflection's scalar `h` (0 where the
/// step was skipped).
fn householder_tridiag<T: Scalar>(m: &mut [T], n: usize, d: &mut [T], e: &mut [T]) -> Vec<T> {
    let mut hs = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut u = vec![T::zero(); n];
    let two = T::one() + T::one();

    for i in (1..n).rev() {
        let l = i; // the reflection acts on indices 0..l
        let mut h = T::zero();
        if l > 1 {
            let mut scale = T::zero();
            for k in 0..l {
                scale += m[i * n + k].abs();
            }
            if scale == T::zero() {
                e[i] = m[i * n + (i - 1)];
            } else {
                let inv_scale = T::one() / scale;
                for k in 0..l {
                    let v = m[i * n + k] * inv_scale;
                    m[i * n + k] = v;
                    h += v * v;
                }
                let f = m[i * n + (i - 1)];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                m[i * n + (i - 1)] = f - g;
                u[..l].copy_from_slice(&m[i * n..i * n + l]);

                let inv_h = T::one() / h;
                // p = A u / h over the leading l x l block
                for j in 0..l {
                    let row = &m[j * n..j * n + l];
                    let mut s = T::zero();
                    for (a, b) in row.iter().zip(u[..l].iter()) {
                        s += *a * *b;
                    }
                    p[j] = s * inv_h;
                }
                // w = p - (u.p / 2h) u, then A -= u w^T + w u^T
                let mut up = T::zero();
                for j in 0..l {
                    up += u[j] * p[j];
                }
                let kk = up * inv_h / two;
                for j in 0..l {
                    p[j] -= kk * u[j];
                }
                for j in 0..l {
                    let uj = u[j];
                    let wj = p[j];
                    let row = &mut m[j * n..j * n + l];
                    for (k, rk) in row.iter_mut().enumerate() {
                        *rk = *rk - uj * p[k] - wj * u[k];
                    }
                }
            }
        } else {
            e[i] = m[i * n + (i - 1)];
        }
        hs[i] = h;
    }
    e[0] = T::zero();
    for i in 0..n {
        d[i] = m[i * n + i];
    }
    hs
}

/// Builds the transpose of the orthogonal reduction matrix by right-applying
/// the reflections in ascending order; all row operations are contiguous.
fn accumulate_transposed<T: Scalar>(m: &[T], hs: &[T], n: usize, w: &mut [T]) {
    let mut v = vec![T::zero(); n];
    for i in 1..n {
        let h = hs[i];
        if h == T::zero() {
            continue;
        }
        let inv_h = T::one() / h;
        let u = &m[i * n..i * n + i];
        for (r, vr) in v[..i].iter_mut().enumerate() {
            let row = &w[r * n..r * n + i];
            let mut s = T::zero();
            for (a, b) in row.iter().zip(u.iter()) {
                s += *a * *b;
            }
            *vr = s * inv_h;
        }
        for r in 0..i {
            let vr = v[r];
            if vr != T::zero() {
                let row = &mut w[r * n..r * n + i];
                for (rk, &uk) in row.iter_mut().zip(u.iter()) {
                    *rk = *rk - vr * uk;
                }
            }
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal (d, e2), accumulating the
/// Givens rotations into the rows of `w`.
fn ql_implicit<T: Scalar>(
    d: &mut [T],
    e2: &mut [T],
    w: &mut [T],
    n: usize,
) -> Result<(), SpectralError> {
    let eps = T::epsilon();
    let two = T::one() + T::one();

    for l in 0..n {
        let mut iter = 0;
        loop {
            // First decoupled position at or after l.
            let mut mm = l;
            while mm < n - 1 {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e2[mm].abs() <= eps * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(SpectralError::NoConvergence {
                    index: l,
                    iterations: MAX_QL_SWEEPS,
                    residual: e2[l].to_f64().unwrap_or(f64::NAN),
                });
            }

            // Wilkinson-style shift from the leading 2x2.
            let mut g = (d[l + 1] - d[l]) / (two * e2[l]);
            let mut r = g.hypot(T::one());
            g = d[mm] - d[l] + e2[l] / (g + r.abs().copysign(g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();

            let mut underflow = false;
            for i in (l..mm).rev() {
                let f = s * e2[i];
                let b = c * e2[i];
                r = f.hypot(g);
                e2[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e2[mm] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                rotate_rows(w, n, i, c, s);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e2[l] = g;
            e2[mm] = T::zero();
        }
    }
    Ok(())
}

/// Applies the Givens rotation to rows `i` and `i+1` of `w`.
#[inline]
fn rotate_rows<T: Scalar>(w: &mut [T], n: usize, i: usize, c: T, s: T) {
    let (top, bottom) = w.split_at_mut((i + 1) * n);
    let row_i = &mut top[i * n..];
    let row_j = &mut bottom[..n];
    for (a, b) in row_i.iter_mut().zip(row_j.iter_mut()) {
        let f = *b;
        *b = s * *a + c * f;
        *a = c * *a - s * f;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn residual_ok(a: &Array2<f64>, ev: &Array1<f64>, vecs: &Array2<f64>, tol: f64) {
        let n = a.nrows();
        let norm = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
        for z in 0..n {
            let v = vecs.column(z);
            let av = a.dot(&v);
            let mut err: f64 = 0.0;
            for i in 0..n {
                err = err.max((av[i] - ev[z] * v[i]).abs());
            }
            assert!(err <= tol * norm, "residual {err} at z={z}");
        }
    }

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let a = array![[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let (ev, vecs) = eigh(a.view()).unwrap();
        assert_eq!(ev.to_vec(), vec![-1.0, 2.0, 3.0]);
        residual_ok(&a, &ev, &vecs, 1e-14);
    }

    #[test]
    fn two_by_two_known_values() {
        let a: Array2<f64> = array![[2.0, 1.0], [1.0, 2.0]];
        let (ev, _) = eigh(a.view()).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_symmetric_decomposition_is_accurate() {
        use rand::Rng;
        let mut rng = crate::graphs::seeded_rng(42);
        let n = 60;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x = rng.random_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let (ev, vecs) = eigh(a.view()).unwrap();
        residual_ok(&a, &ev, &vecs, 1e-12);
        // orthonormality
        for y in 0..n {
            for z in y..n {
                let dot = vecs.column(y).dot(&vecs.column(z));
                let expect = if y == z { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-11, "dot({y},{z}) = {dot}");
            }
        }
        // ascending
        for z in 1..n {
            assert!(ev[z] >= ev[z - 1]);
        }
    }

    #[test]
    fn zero_matrix_spectrum() {
        let a = Array2::<f64>::zeros((5, 5));
        let (ev, vecs) = eigh(a.view()).unwrap();
        assert!(ev.iter().all(|&e| e == 0.0));
        for y in 0..5 {
            let dot = vecs.column(y).dot(&vecs.column(y));
            assert!((dot - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_element() {
        let a = array![[7.5]];
        let (ev, vecs) = eigh(a.view()).unwrap();
        assert_eq!(ev[0], 7.5);
        assert_eq!(vecs[(0, 0)], 1.0);
    }
}
