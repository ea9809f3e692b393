//! Dense complex matrix and 3-way tensor primitives.
//!
//! Matrices are `nalgebra` column-major matrices over [`Complex64`]. The
//! [`ComplexTensor3`] type stores its frontal slices contiguously, each one
//! column-major, so that the mode-1 unfolding is the raw buffer read as a
//! `dim1 × (dim2·dim3)` column-major matrix.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Complex 3-way array with entries indexed `(i, j, k)`.
///
/// Entry `(i, j, k)` lives at offset `i + dim1·(j + dim2·k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor3 {
    dims: [usize; 3],
    data: Vec<Complex64>,
}

impl ComplexTensor3 {
    pub fn zeros(dim1: usize, dim2: usize, dim3: usize) -> Self {
        Self {
            dims: [dim1, dim2, dim3],
            data: vec![Complex64::new(0.0, 0.0); dim1 * dim2 * dim3],
        }
    }

    pub fn from_fn(
        dim1: usize,
        dim2: usize,
        dim3: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(dim1 * dim2 * dim3);
        for k in 0..dim3 {
            for j in 0..dim2 {
                for i in 0..dim1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims: [dim1, dim2, dim3],
            data,
        }
    }

    /// Builds a tensor from raw storage laid out as described on the type.
    pub fn from_raw(dims: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::arg(format!(
                "buffer of length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Self { dims, data })
    }

    /// Stacks equally-sized matrices as frontal slices.
    pub fn from_slices(slices: &[ComplexMatrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::arg("cannot build a tensor from zero slices"))?;
        let (rows, cols) = first.shape();
        let mut data = Vec::with_capacity(rows * cols * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (rows, cols) {
                return Err(Error::arg(format!(
                    "slice {k} has shape {:?}, expected {:?}",
                    s.shape(),
                    (rows, cols)
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self {
            dims: [rows, cols, slices.len()],
            data,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        let [d1, d2, d3] = self.dims;
        assert!(i < d1 && j < d2 && k < d3, "index ({i}, {j}, {k}) out of bounds for {:?}", self.dims);
        i + d1 * (j + d2 * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[self.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: Complex64) {
        let at = self.offset(i, j, k);
        self.data[at] = value;
    }

    /// Borrowed view of frontal slice `k` (a `dim1 × dim2` matrix).
    pub fn slice(&self, k: usize) -> DMatrixView<'_, Complex64> {
        let [d1, d2, d3] = self.dims;
        assert!(k < d3, "slice {k} out of bounds for {d3} slices");
        let len = d1 * d2;
        DMatrixView::from_slice(&self.data[k * len..(k + 1) * len], d1, d2)
    }

    pub fn slice_mut(&mut self, k: usize) -> DMatrixViewMut<'_, Complex64> {
        let [d1, d2, d3] = self.dims;
        assert!(k < d3, "slice {k} out of bounds for {d3} slices");
        let len = d1 * d2;
        DMatrixViewMut::from_slice(&mut self.data[k * len..(k + 1) * len], d1, d2)
    }

    pub fn slices(&self) -> impl Iterator<Item = DMatrixView<'_, Complex64>> {
        (0..self.dims[2]).map(move |k| self.slice(k))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Squared Frobenius norm: the sum of squared moduli of all entries.
pub trait FrobeniusNormSq {
    fn frobenius_norm_sq(&self) -> f64;
}

impl FrobeniusNormSq for ComplexMatrix {
    fn frobenius_norm_sq(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl FrobeniusNormSq for DMatrixView<'_, Complex64> {
    fn frobenius_norm_sq(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl FrobeniusNormSq for ComplexTensor3 {
    fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn frobenius_norm_sq<T: FrobeniusNormSq + ?Sized>(a: &T) -> f64 {
    a.frobenius_norm_sq()
}

fn check_mode(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::arg(format!("mode index must be 1, 2 or 3, got {n}")))
    }
}

/// Row and column of entry `(i, j, k)` in the mode-`n` unfolding.
///
/// The remaining indices vary fastest-to-slowest in increasing mode order, so
/// the mode-1 column of `(j, k)` is `k·dim2 + j`.
#[inline]
fn unfold_position(dims: [usize; 3], n: usize, i: usize, j: usize, k: usize) -> (usize, usize) {
    let [d1, d2, _] = dims;
    match n {
        1 => (i, j + d2 * k),
        2 => (j, i + d1 * k),
        _ => (k, i + d1 * j),
    }
}

fn unfold_shape(dims: [usize; 3], n: usize) -> (usize, usize) {
    let [d1, d2, d3] = dims;
    match n {
        1 => (d1, d2 * d3),
        2 => (d2, d1 * d3),
        _ => (d3, d1 * d2),
    }
}

/// Mode-`n` matricization `X_(n)` of `t`, `n ∈ {1, 2, 3}`.
pub fn mode_n_matricize(t: &ComplexTensor3, n: usize) -> Result<ComplexMatrix> {
    check_mode(n)?;
    let dims = t.dims();
    if n == 1 {
        let (r, c) = unfold_shape(dims, 1);
        return Ok(ComplexMatrix::from_column_slice(r, c, t.as_slice()));
    }
    let (rows, cols) = unfold_shape(dims, n);
    let mut out = ComplexMatrix::zeros(rows, cols);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let (r, c) = unfold_position(dims, n, i, j, k);
                out[(r, c)] = t.get(i, j, k);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`mode_n_matricize`] for a tensor of shape `dims`.
pub fn fold(x: &ComplexMatrix, n: usize, dims: [usize; 3]) -> Result<ComplexTensor3> {
    check_mode(n)?;
    let expected = unfold_shape(dims, n);
    if x.shape() != expected {
        return Err(Error::arg(format!(
            "mode-{n} unfolding of {dims:?} must be {expected:?}, got {:?}",
            x.shape()
        )));
    }
    Ok(ComplexTensor3::from_fn(dims[0], dims[1], dims[2], |i, j, k| {
        let (r, c) = unfold_position(dims, n, i, j, k);
        x[(r, c)]
    }))
}

/// Computes `X · (I_m ⊗ P)` block by block without forming the Kronecker
/// product.
pub fn slice_kron_apply(x: &ComplexMatrix, p: &ComplexMatrix, m: usize) -> Result<ComplexMatrix> {
    if !p.is_square() {
        return Err(Error::arg(format!("P must be square, got {:?}", p.shape())));
    }
    let block = p.nrows();
    if x.ncols() != m * block {
        return Err(Error::arg(format!(
            "X has {} columns, expected m·dim(P) = {}",
            x.ncols(),
            m * block
        )));
    }
    let mut out = ComplexMatrix::zeros(x.nrows(), x.ncols());
    for b in 0..m {
        let cols = b * block..(b + 1) * block;
        let prod = x.columns(cols.start, block) * p;
        out.columns_mut(cols.start, block).copy_from(&prod);
    }
    Ok(out)
}

/// Projects every entry onto the circle of radius `scale`, keeping its phase.
///
/// Zero entries map to `scale` (phase taken as 0).
pub fn phase_project(v: &ComplexVector, scale: f64) -> ComplexVector {
    v.map(|z| {
        let r = z.norm();
        if r > 0.0 && r.is_finite() {
            z * (scale / r)
        } else {
            Complex64::new(scale, 0.0)
        }
    })
}

/// Thin singular value decomposition `A = U·diag(S)·V^H`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Singular values are sorted descending, ties kept in column order. Left
/// singular vectors for exactly-zero singular values are completed to an
/// orthonormal set deterministically.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::arg("cannot take the SVD of an empty matrix"));
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::arg("SVD input contains non-finite entries"));
    }
    if a.nrows() < a.ncols() {
        let t = jacobi_svd_tall(&a.adjoint())?;
        return Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    jacobi_svd_tall(a)
}

/// Maximum number of Jacobi sweeps before reporting non-convergence.
pub const SVD_MAX_SWEEPS: usize = 80;

fn jacobi_svd_tall(a: &ComplexMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let mut g: Vec<Complex64> = a.as_slice().to_vec();
    let mut v: Vec<Complex64> = ComplexMatrix::identity(n, n).as_slice().to_vec();
    let tol = f64::EPSILON;

    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (gp, gq) = column_pair(&mut g, m, p, q);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for (x, y) in gp.iter().zip(gq.iter()) {
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let off = gamma.norm();
                if off == 0.0 || off <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / off;
                let zeta = (beta - alpha) / (2.0 * off);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate(gp, gq, c, sn, phase);
                let (vp, vq) = column_pair(&mut v, n, p, q);
                rotate(vp, vq, c, sn, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            iterations: SVD_MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = g.chunks_exact(m).map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let mut u = ComplexMatrix::zeros(m, n);
    let mut vv = ComplexMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        vv.column_mut(dst).copy_from_slice(&v[src * n..(src + 1) * n]);
        if sigma > 0.0 {
            let inv = 1.0 / sigma;
            for (r, z) in g[src * m..(src + 1) * m].iter().enumerate() {
                u[(r, dst)] = z * inv;
            }
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Ok(SvdResult { u, s, v: vv })
}

/// Mutable views of columns `p < q` of a column-major buffer with `rows` rows.
fn column_pair(buf: &mut [Complex64], rows: usize, p: usize, q: usize) -> (&mut [Complex64], &mut [Complex64]) {
    let (head, tail) = buf.split_at_mut(q * rows);
    (&mut head[p * rows..(p + 1) * rows], &mut tail[..rows])
}

/// `[x, y] ← [c·x − s·ē·y, s·x + c·ē·y]` with `e = phase`.
#[inline]
fn rotate(x: &mut [Complex64], y: &mut [Complex64], c: f64, s: f64, phase: Complex64) {
    let pc = phase.conj();
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b * pc;
        *a = xa * c - yb * s;
        *b = xa * s + yb * c;
    }
}

/// Fills the listed (zero) columns of `u` with unit vectors orthogonal to all
/// other columns, by Gram-Schmidt over the standard basis.
fn complete_orthonormal(u: &mut ComplexMatrix, missing: &[usize]) {
    let m = u.nrows();
    let one = Complex64::new(1.0, 0.0);
    for &col in missing {
        let mut best: Option<ComplexVector> = None;
        let mut best_norm = 0.0;
        for basis in 0..m {
            let mut cand = ComplexVector::zeros(m);
            cand[basis] = one;
            // Two passes of classical Gram-Schmidt; unfilled columns are zero.
            for _ in 0..2 {
                for k in 0..u.ncols() {
                    let proj = u.column(k).dotc(&cand);
                    cand.axpy(-proj, &u.column(k), one);
                }
            }
            let norm = cand.norm();
            if norm > best_norm {
                best_norm = norm;
                best = Some(cand);
            }
        }
        if let Some(cand) = best {
            u.set_column(col, &(cand / Complex64::new(best_norm, 0.0)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Small deterministic pseudo-random complex entries (LCG), independent of `rand`.
    fn pseudo(seed: u64) -> impl FnMut() -> Complex64 {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        move || {
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            let re = next();
            let im = next();
            c(re, im)
        }
    }

    fn random_matrix(r: usize, cc: usize, seed: u64) -> ComplexMatrix {
        let mut g = pseudo(seed);
        ComplexMatrix::from_fn(r, cc, |_, _| g())
    }

    fn random_tensor(d: [usize; 3], seed: u64) -> ComplexTensor3 {
        let mut g = pseudo(seed);
        ComplexTensor3::from_fn(d[0], d[1], d[2], |_, _, _| g())
    }

    #[test]
    fn singleton_unfolds_to_itself() {
        let t = ComplexTensor3::from_fn(1, 1, 1, |_, _, _| c(2.0, -1.0));
        for n in 1..=3 {
            let x = mode_n_matricize(&t, n).unwrap();
            assert_eq!(x.shape(), (1, 1));
            assert_eq!(x[(0, 0)], c(2.0, -1.0));
        }
    }

    #[test]
    fn zero_tensor_mode2_is_zero_2x4() {
        let t = ComplexTensor3::zeros(2, 2, 2);
        let x = mode_n_matricize(&t, 2).unwrap();
        assert_eq!(x.shape(), (2, 4));
        assert!(x.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn invalid_mode_is_rejected() {
        let t = ComplexTensor3::zeros(2, 2, 2);
        assert!(matches!(mode_n_matricize(&t, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(mode_n_matricize(&t, 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mode1_column_index_convention() {
        let t = random_tensor([3, 4, 5], 7);
        let x = mode_n_matricize(&t, 1).unwrap();
        for k in 0..5 {
            for j in 0..4 {
                for i in 0..3 {
                    assert_eq!(x[(i, k * 4 + j)], t.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn roundtrip_3x4x5_all_modes() {
        let t = random_tensor([3, 4, 5], 11);
        for n in 1..=3 {
            let x = mode_n_matricize(&t, n).unwrap();
            assert_eq!(fold(&x, n, [3, 4, 5]).unwrap(), t);
        }
    }

    #[test]
    fn frontal_slice_matches_entries() {
        let t = random_tensor([3, 4, 5], 3);
        let s = t.slice(2);
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(s[(i, j)], t.get(i, j, 2));
            }
        }
    }

    fn dense_kron_identity(p: &ComplexMatrix, m: usize) -> ComplexMatrix {
        let b = p.nrows();
        let mut out = ComplexMatrix::zeros(m * b, m * b);
        for blk in 0..m {
            for r in 0..b {
                for cc in 0..b {
                    out[(blk * b + r, blk * b + cc)] = p[(r, cc)];
                }
            }
        }
        out
    }

    #[test]
    fn kron_apply_identity_is_noop() {
        let x = random_matrix(3, 8, 1);
        let p = ComplexMatrix::identity(4, 4);
        assert_eq!(slice_kron_apply(&x, &p, 2).unwrap(), x);
    }

    #[test]
    fn kron_apply_single_block_is_plain_product() {
        let x = random_matrix(3, 4, 2);
        let p = random_matrix(4, 4, 3);
        let got = slice_kron_apply(&x, &p, 1).unwrap();
        assert!((got - &x * &p).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn kron_apply_matches_dense_kronecker() {
        let x = random_matrix(2, 6, 4);
        let p = random_matrix(3, 3, 5);
        let got = slice_kron_apply(&x, &p, 2).unwrap();
        let want = &x * dense_kron_identity(&p, 2);
        let err = (got - &want).frobenius_norm_sq().sqrt();
        assert!(err <= 1e-12 * want.frobenius_norm_sq().sqrt());
    }

    #[test]
    fn kron_apply_rejects_bad_dims() {
        let x = random_matrix(2, 5, 4);
        let p = random_matrix(3, 3, 5);
        assert!(slice_kron_apply(&x, &p, 2).is_err());
        assert!(slice_kron_apply(&x, &random_matrix(3, 2, 1), 2).is_err());
    }

    #[test]
    fn phase_projection_examples() {
        let one = phase_project(&ComplexVector::from_vec(vec![c(1.0, 0.0)]), 1.0);
        assert_eq!(one[0], c(1.0, 0.0));
        let p = phase_project(&ComplexVector::from_vec(vec![c(3.0, 4.0)]), 1.0);
        assert!(close(p[0].re, 0.6, 1e-15) && close(p[0].im, 0.8, 1e-15));
        let z = phase_project(&ComplexVector::from_vec(vec![c(0.0, 0.0)]), 0.5);
        assert_eq!(z[0], c(0.5, 0.0));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(ComplexMatrix::zeros(3, 2).frobenius_norm_sq(), 0.0);
        let m = ComplexMatrix::from_element(1, 1, c(1.0, 1.0));
        assert!(close(frobenius_norm_sq(&m), 2.0, 1e-15));
    }

    #[test]
    fn tensor_norm_is_sum_of_slice_norms() {
        let t = random_tensor([4, 3, 6], 9);
        let by_slice: f64 = t.slices().map(|s| s.frobenius_norm_sq()).sum();
        let by_entry: f64 = (0..6)
            .flat_map(|k| (0..3).flat_map(move |j| (0..4).map(move |i| (i, j, k))))
            .map(|(i, j, k)| t.get(i, j, k).norm_sqr())
            .sum();
        assert!(close(t.frobenius_norm_sq(), by_slice, 1e-12));
        assert!(close(t.frobenius_norm_sq(), by_entry, 1e-12));
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let id = svd(&ComplexMatrix::identity(2, 2)).unwrap();
        assert!(close(id.s[0], 1.0, 1e-15) && close(id.s[1], 1.0, 1e-15));

        let mut d = ComplexMatrix::zeros(2, 2);
        d[(0, 0)] = c(3.0, 0.0);
        let r = svd(&d).unwrap();
        assert!(close(r.s[0], 3.0, 1e-14) && close(r.s[1], 0.0, 1e-14));
        // Leading singular vectors are e1 up to phase.
        assert!(close(r.u[(0, 0)].norm(), 1.0, 1e-14));
        assert!(close(r.v[(0, 0)].norm(), 1.0, 1e-14));
    }

    #[test]
    fn svd_reconstructs_random_4x3() {
        let a = random_matrix(4, 3, 21);
        let r = svd(&a).unwrap();
        assert_eq!(r.u.shape(), (4, 3));
        assert_eq!(r.v.shape(), (3, 3));
        let sigma = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            3,
            r.s.iter().map(|&x| c(x, 0.0)),
        ));
        let rec = &r.u * sigma * r.v.adjoint();
        let err = (rec - &a).frobenius_norm_sq().sqrt() / a.frobenius_norm_sq().sqrt();
        assert!(err < 1e-10, "relative error {err}");
        assert!(r.s.windows(2).all(|w| w[0] >= w[1]));
        let utu = r.u.adjoint() * &r.u;
        let vtv = r.v.adjoint() * &r.v;
        let id = ComplexMatrix::identity(3, 3);
        assert!((utu - &id).iter().all(|z| z.norm() < 1e-10));
        assert!((vtv - &id).iter().all(|z| z.norm() < 1e-10));
    }

    fn check_svd(a: &ComplexMatrix) {
        let r = svd(a).unwrap();
        let k = a.nrows().min(a.ncols());
        assert_eq!(r.s.len(), k);
        assert_eq!(r.u.shape(), (a.nrows(), k));
        assert_eq!(r.v.shape(), (a.ncols(), k));
        assert!(r.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.s.iter().all(|&x| x >= 0.0));
        let sigma = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(k, r.s.iter().map(|&x| c(x, 0.0))));
        let rec = &r.u * sigma * r.v.adjoint();
        let scale = a.frobenius_norm_sq().sqrt().max(1e-300);
        let err = (rec - a).frobenius_norm_sq().sqrt() / scale;
        assert!(err < 1e-12, "relative reconstruction error {err}");
        let id = ComplexMatrix::identity(k, k);
        assert!((r.u.adjoint() * &r.u - &id).iter().all(|z| z.norm() < 1e-12));
        assert!((r.v.adjoint() * &r.v - &id).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn svd_contract_on_many_shapes() {
        let mut seed = 100;
        for (r, cc) in [(1, 1), (1, 5), (5, 1), (2, 2), (4, 4), (7, 3), (3, 7), (16, 16), (64, 4)] {
            for _ in 0..10 {
                seed += 1;
                check_svd(&random_matrix(r, cc, seed));
            }
        }
    }

    #[test]
    fn svd_handles_degenerate_spectra() {
        // Triple singular value: a case where the QR-based backend we tried first
        // returned unconverged factors.
        let q = svd(&random_matrix(4, 4, 5)).unwrap().u;
        let p = svd(&random_matrix(4, 4, 6)).unwrap().v;
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(2.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(0.5, 0.0)]));
        let a = &q * d * p.adjoint();
        check_svd(&a);
        let s = svd(&a).unwrap().s;
        for (got, want) in s.iter().zip([2.0, 2.0, 2.0, 0.5]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn svd_of_rank_deficient_matrices() {
        let x = random_matrix(6, 1, 8);
        let y = random_matrix(5, 1, 9);
        check_svd(&(&x * y.adjoint()));
        check_svd(&ComplexMatrix::zeros(3, 4));
        let r = svd(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(r.s, vec![0.0; 3]);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = random_matrix(2, 2, 1);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert!(svd(&a).is_err());
    }
}
