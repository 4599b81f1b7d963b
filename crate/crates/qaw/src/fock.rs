//! Level-truncated q-Fock space over a [`DeformedSpace`]: q-Gram matrices,
//! creation/annihilation/field operators as dense matrices, the vacuum
//! state, and truncated operator norms.
//!
//! Basis convention: words over the one-particle basis of length `0..=L`,
//! level-major, lexicographic within a level (word of length 0 is the
//! vacuum). A word `(l_0, ..., l_{k-1})` with 0-based letters sits at
//! `offset(k) + sum_i l_i * n^{k-1-i}`.
//!
//! Operators live in these monomial coordinates with an explicit Gram, so
//! creation stays a 0/1 pattern and Wick identities hold exactly;
//! orthonormalization enters only inside [`TruncatedFock::operator_norm`].
//! Creation out of the top level maps to zero, and all exactness claims
//! are for degrees at most the truncation level.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QawError, Result};
use crate::partitions;
use crate::space::DeformedSpace;

type C64 = Complex64;

/// Gram matrices are assembled by the symmetric-group sum, which is only
/// reasonable for small levels; higher levels error out.
pub const GRAM_LEVEL_CAP: usize = 5;
/// Hard cap on Gram matrix entries (64 MiB of complex doubles).
pub const GRAM_ENTRY_CAP: usize = 1 << 22;

/// Default tolerance for exact operator identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Default tolerance for norm comparisons.
pub const NORM_TOL: f64 = 1e-8;

/// A level-truncated q-Fock space. Immutable after construction; Gram
/// matrices and their square roots are cached lazily behind `OnceLock`s,
/// so sharing across threads is safe.
pub struct TruncatedFock {
    space: DeformedSpace,
    q: f64,
    level_cap: usize,
    dim: usize,
    /// `offsets[k]` = index of the first word of level `k`; has
    /// `level_cap + 2` entries so `offsets[L + 1] == dim`.
    offsets: Vec<usize>,
    /// `pows[k] = n^k`.
    pows: Vec<usize>,
    levels: Vec<u32>,
    qpows: Vec<C64>,
    grams: Vec<OnceLock<DMatrix<C64>>>,
    ortho: Vec<OnceLock<(DMatrix<C64>, DMatrix<C64>)>>,
}

impl TruncatedFock {
    /// Builds the truncated Fock space; requires `|q| < 1`.
    pub fn build(space: DeformedSpace, q: f64, level_cap: usize) -> Result<Self> {
        if !(q.abs() < 1.0) {
            return Err(QawError::InvalidArgument(format!(
                "deformation parameter q = {q} must satisfy |q| < 1"
            )));
        }
        let n = space.dim();
        let mut pows = Vec::with_capacity(level_cap + 1);
        let mut offsets = Vec::with_capacity(level_cap + 2);
        let mut dim = 0usize;
        let mut p = 1usize;
        offsets.push(0);
        for _k in 0..=level_cap {
            pows.push(p);
            dim = dim
                .checked_add(p)
                .ok_or_else(|| QawError::InvalidArgument("Fock dimension overflow".into()))?;
            offsets.push(dim);
            p = p.checked_mul(n).unwrap_or(usize::MAX);
        }
        let mut levels = vec![0u32; dim];
        for k in 0..=level_cap {
            for idx in offsets[k]..offsets[k + 1] {
                levels[idx] = k as u32;
            }
        }
        let qpows = (0..=level_cap as i32)
            .map(|j| C64::new(q.powi(j), 0.0))
            .collect();
        Ok(Self {
            space,
            q,
            level_cap,
            dim,
            offsets,
            pows,
            levels,
            qpows,
            grams: (0..=level_cap).map(|_| OnceLock::new()).collect(),
            ortho: (0..=level_cap).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn space(&self) -> &DeformedSpace {
        &self.space
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn level_cap(&self) -> usize {
        self.level_cap
    }

    /// Total dimension `sum_k n^k`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One-particle dimension.
    pub fn n(&self) -> usize {
        self.space.dim()
    }

    /// Index of the first word of level `k`.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Number of words at level `k`.
    pub fn words_at(&self, k: usize) -> usize {
        self.pows[k]
    }

    /// Level of a basis index.
    pub fn level_of(&self, idx: usize) -> usize {
        self.levels[idx] as usize
    }

    /// Letters of the word with the given level and in-level code.
    pub fn word_letters(&self, level: usize, code: usize) -> Vec<usize> {
        let n = self.n();
        (0..level)
            .map(|j| (code / self.pows[level - 1 - j]) % n)
            .collect()
    }

    /// In-level code after deleting the letter at position `j`.
    #[inline]
    fn delete_letter(&self, code: usize, j: usize, level: usize) -> usize {
        let m1 = self.pows[level - 1 - j];
        let s = code % m1;
        ((code / m1) / self.n()) * m1 + s
    }

    /// The vacuum vector.
    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim);
        v[0] = C64::ONE;
        v
    }

    /// Annihilation weights of `xi`: `w_b = <xi | e_b>_U`.
    pub fn annihilation_weights(&self, xi: &DVector<C64>) -> Result<DVector<C64>> {
        if xi.len() != self.n() {
            return Err(QawError::InvalidArgument(format!(
                "vector dimension {} does not match one-particle dimension {}",
                xi.len(),
                self.n()
            )));
        }
        Ok((self.space.metric() * xi).map(|z| z.conj()))
    }

    /// Accumulates `dst += a*(xi) src` over monomial coordinate slices.
    pub(crate) fn apply_creation_into(&self, xi: &DVector<C64>, src: &[C64], dst: &mut [C64]) {
        for a in 0..self.n() {
            let c = xi[a];
            if c == C64::ZERO {
                continue;
            }
            for k in 0..self.level_cap {
                let src_base = self.offsets[k];
                let dst_base = self.offsets[k + 1] + a * self.pows[k];
                for code in 0..self.pows[k] {
                    let v = src[src_base + code];
                    if v != C64::ZERO {
                        dst[dst_base + code] += c * v;
                    }
                }
            }
        }
    }

    /// Accumulates `dst += a(xi) src` where `weights` are the annihilation
    /// weights of `xi`; the letter at position `j` (0-based) contributes
    /// with factor `q^j`.
    pub(crate) fn apply_annihilation_into(&self, weights: &DVector<C64>, src: &[C64], dst: &mut [C64]) {
        let n = self.n();
        for k in 1..=self.level_cap {
            let src_base = self.offsets[k];
            let dst_base = self.offsets[k - 1];
            for code in 0..self.pows[k] {
                let v = src[src_base + code];
                if v == C64::ZERO {
                    continue;
                }
                for j in 0..k {
                    let letter = (code / self.pows[k - 1 - j]) % n;
                    let w = weights[letter];
                    if w == C64::ZERO {
                        continue;
                    }
                    let target = dst_base + self.delete_letter(code, j, k);
                    dst[target] += self.qpows[j] * w * v;
                }
            }
        }
    }

    /// The creation operator `a*(xi)`: prepends `xi` on levels below the
    /// cap and kills the top level.
    pub fn creation(&self, xi: &DVector<C64>) -> Result<FockOperator> {
        if xi.len() != self.n() {
            return Err(QawError::InvalidArgument(format!(
                "vector dimension {} does not match one-particle dimension {}",
                xi.len(),
                self.n()
            )));
        }
        let mut mat = DMatrix::<C64>::zeros(self.dim, self.dim);
        for a in 0..self.n() {
            let c = xi[a];
            if c == C64::ZERO {
                continue;
            }
            for k in 0..self.level_cap {
                for code in 0..self.pows[k] {
                    let row = self.offsets[k + 1] + a * self.pows[k] + code;
                    let col = self.offsets[k] + code;
                    mat[(row, col)] += c;
                }
            }
        }
        Ok(FockOperator { mat })
    }

    /// The annihilation operator `a(xi)`, via the explicit letter sum
    /// `a(xi)(e_{i_1} (.) ... (.) e_{i_k}) = sum_l q^{l-1} <xi|e_{i_l}>_U
    /// (word with the l-th letter removed)`; its adjointness with respect
    /// to the q-Gram is checked by tests, not assumed.
    pub fn annihilation(&self, xi: &DVector<C64>) -> Result<FockOperator> {
        let weights = self.annihilation_weights(xi)?;
        let n = self.n();
        let mut mat = DMatrix::<C64>::zeros(self.dim, self.dim);
        for k in 1..=self.level_cap {
            for code in 0..self.pows[k] {
                let col = self.offsets[k] + code;
                for j in 0..k {
                    let letter = (code / self.pows[k - 1 - j]) % n;
                    let w = weights[letter];
                    if w == C64::ZERO {
                        continue;
                    }
                    let row = self.offsets[k - 1] + self.delete_letter(code, j, k);
                    mat[(row, col)] += self.qpows[j] * w;
                }
            }
        }
        Ok(FockOperator { mat })
    }

    /// The field operator `s_q(xi) = a*(xi) + a(xi)` for real `xi`.
    pub fn field(&self, xi: &DVector<C64>) -> Result<FockOperator> {
        let max_im = xi.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-14 {
            return Err(QawError::InvalidArgument(format!(
                "field vectors must be fixed by the conjugation; imaginary part {max_im:.3e}"
            )));
        }
        Ok(&self.creation(xi)? + &self.annihilation(xi)?)
    }

    /// The identity operator.
    pub fn identity_op(&self) -> FockOperator {
        FockOperator {
            mat: DMatrix::identity(self.dim, self.dim),
        }
    }

    /// Levelwise tensor power of a one-particle matrix,
    /// `e_1 (.) ... (.) e_k  |->  T e_1 (.) ... (.) T e_k`.
    /// No contraction check; see `quantization::first_quantization` for
    /// the checked entry point.
    pub fn levelwise_power(&self, t: &DMatrix<C64>) -> Result<FockOperator> {
        if t.nrows() != self.n() || t.ncols() != self.n() {
            return Err(QawError::InvalidArgument(format!(
                "matrix is {}x{}, expected {0}x{0} with dimension {}",
                t.nrows(),
                t.ncols(),
                self.n()
            )));
        }
        let mut mat = DMatrix::<C64>::zeros(self.dim, self.dim);
        mat[(0, 0)] = C64::ONE;
        let mut block = DMatrix::<C64>::identity(1, 1);
        for k in 1..=self.level_cap {
            block = t.kronecker(&block);
            let off = self.offsets[k];
            mat.view_mut((off, off), (self.pows[k], self.pows[k]))
                .copy_from(&block);
        }
        Ok(FockOperator { mat })
    }

    /// The q-Gram matrix `G_k` of level `k` in monomial coordinates:
    /// `G_k[u, v] = sum_{s in S_k} q^{i(s)} prod_l <e_{u_l} | e_{v_{s(l)}}>_U`.
    pub fn gram(&self, k: usize) -> Result<&DMatrix<C64>> {
        if k > self.level_cap {
            return Err(QawError::TruncationExceeded {
                degree: k,
                level_cap: self.level_cap,
            });
        }
        if k > GRAM_LEVEL_CAP {
            return Err(QawError::GramLevelCap {
                level: k,
                cap: GRAM_LEVEL_CAP,
            });
        }
        let entries = self.pows[k].saturating_mul(self.pows[k]);
        if entries > GRAM_ENTRY_CAP {
            return Err(QawError::MemoryBudget {
                cells: entries,
                cap: GRAM_ENTRY_CAP,
            });
        }
        Ok(self.grams[k].get_or_init(|| self.assemble_gram(k)))
    }

    fn assemble_gram(&self, k: usize) -> DMatrix<C64> {
        let size = self.pows[k];
        let mut g = DMatrix::<C64>::zeros(size, size);
        if k == 0 {
            g[(0, 0)] = C64::ONE;
            return g;
        }
        let d = self.space.metric();
        let n = self.n();
        // Fixed enumeration order of S_k keeps assembly bit-identical.
        let perms = permutations(k);
        for u in 0..size {
            let uw = self.word_letters(k, u);
            for v in 0..size {
                let vw = self.word_letters(k, v);
                let mut acc = C64::ZERO;
                for (perm, inv) in &perms {
                    let mut prod = C64::new(self.q.powi(*inv as i32), 0.0);
                    for l in 0..k {
                        prod *= d[(uw[l], vw[perm[l]])];
                        if prod == C64::ZERO {
                            break;
                        }
                    }
                    acc += prod;
                }
                g[(u, v)] = acc;
                let _ = n;
            }
        }
        g
    }

    /// `(G_k^{1/2}, G_k^{-1/2})` through a Hermitian eigendecomposition.
    pub fn gram_sqrt(&self, k: usize) -> Result<&(DMatrix<C64>, DMatrix<C64>)> {
        let gram = self.gram(k)?.clone();
        if let Some(pair) = self.ortho[k].get() {
            return Ok(pair);
        }
        let eig = nalgebra::SymmetricEigen::new(gram);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(QawError::InvalidArgument(format!(
                "Gram at level {k} is not positive definite (min eigenvalue {min:.3e})"
            )));
        }
        let q = &eig.eigenvectors;
        let size = q.nrows();
        let mut half = DMatrix::<C64>::zeros(size, size);
        let mut inv_half = DMatrix::<C64>::zeros(size, size);
        for j in 0..size {
            let s = eig.eigenvalues[j].sqrt();
            half[(j, j)] = C64::new(s, 0.0);
            inv_half[(j, j)] = C64::new(1.0 / s, 0.0);
        }
        let pair = (q * half * q.adjoint(), q * inv_half * q.adjoint());
        let _ = self.ortho[k].set(pair);
        Ok(self.ortho[k].get().expect("just set"))
    }

    /// Minimum eigenvalue of `G_k`, for positivity reports.
    pub fn gram_min_eigenvalue(&self, k: usize) -> Result<f64> {
        let eig = nalgebra::SymmetricEigen::new(self.gram(k)?.clone());
        Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// q-inner product of two full Fock vectors, `sum_k <u_k, G_k v_k>`.
    pub fn gram_inner(&self, u: &DVector<C64>, v: &DVector<C64>) -> Result<C64> {
        if u.len() != self.dim || v.len() != self.dim {
            return Err(QawError::InvalidArgument(
                "vector does not match Fock dimension".into(),
            ));
        }
        let mut acc = C64::ZERO;
        for k in 0..=self.level_cap {
            let g = self.gram(k)?;
            let off = self.offsets[k];
            let size = self.pows[k];
            for a in 0..size {
                let ua = u[off + a].conj();
                if ua == C64::ZERO {
                    continue;
                }
                let mut row = C64::ZERO;
                for b in 0..size {
                    row += g[(a, b)] * v[off + b];
                }
                acc += ua * row;
            }
        }
        Ok(acc)
    }

    /// Conjugates an operator into orthonormal coordinates:
    /// `(+)_k G_k^{1/2} . M . (+)_k G_k^{-1/2}`.
    pub fn orthonormalize(&self, x: &FockOperator) -> Result<DMatrix<C64>> {
        let mut m = x.mat.clone();
        for k in 0..=self.level_cap {
            let (_, inv_half) = self.gram_sqrt(k)?;
            let off = self.offsets[k];
            let size = self.pows[k];
            let cols = m.view((0, off), (self.dim, size)) * inv_half;
            m.view_mut((0, off), (self.dim, size)).copy_from(&cols);
        }
        for k in 0..=self.level_cap {
            let (half, _) = self.gram_sqrt(k)?;
            let off = self.offsets[k];
            let size = self.pows[k];
            let rows = half * m.view((off, 0), (size, self.dim));
            m.view_mut((off, 0), (size, self.dim)).copy_from(&rows);
        }
        Ok(m)
    }

    /// Operator norm on the truncated space: the largest singular value in
    /// orthonormalized coordinates. A lower bound of the untruncated norm.
    pub fn operator_norm(&self, x: &FockOperator) -> Result<f64> {
        Ok(spectral_norm(&self.orthonormalize(x)?))
    }

    /// Norm of an `n_amp`-amplified operator (matrix of `n_amp^2` Fock
    /// blocks) in orthonormalized coordinates.
    pub fn amplified_operator_norm(&self, n_amp: usize, big: &DMatrix<C64>) -> Result<f64> {
        let expected = n_amp * self.dim;
        if big.nrows() != expected || big.ncols() != expected {
            return Err(QawError::InvalidArgument(format!(
                "amplified operator is {}x{}, expected {expected}",
                big.nrows(),
                big.ncols()
            )));
        }
        let mut m = big.clone();
        for bi in 0..n_amp {
            for bj in 0..n_amp {
                let block = FockOperator {
                    mat: big
                        .view((bi * self.dim, bj * self.dim), (self.dim, self.dim))
                        .into_owned(),
                };
                m.view_mut((bi * self.dim, bj * self.dim), (self.dim, self.dim))
                    .copy_from(&self.orthonormalize(&block)?);
            }
        }
        Ok(spectral_norm(&m))
    }
}

/// All permutations of `[k]` (0-based images) with their inversion counts,
/// in a fixed deterministic order.
pub(crate) fn permutations(k: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    fn heap(v: &mut Vec<usize>, size: usize, out: &mut Vec<(Vec<usize>, usize)>) {
        if size == 1 {
            let inv = partitions::inversions(&v.iter().map(|&x| x + 1).collect::<Vec<_>>());
            out.push((v.clone(), inv));
            return;
        }
        for i in 0..size {
            heap(v, size - 1, out);
            if size % 2 == 1 {
                v.swap(0, size - 1);
            } else {
                v.swap(i, size - 1);
            }
        }
    }
    if k == 0 {
        out.push((Vec::new(), 0));
        return out;
    }
    heap(&mut cur, k, &mut out);
    out.sort();
    out
}

/// Largest singular value through a Hermitian eigendecomposition of
/// `M^* M`; more robust than a full SVD for our sizes.
pub(crate) fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    let h = m.adjoint() * m;
    let eig = nalgebra::SymmetricEigen::new(h);
    eig.eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

/// A dense operator on a [`TruncatedFock`], in monomial coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    mat: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// The q-quasi-free (vacuum) state: the `(vacuum, vacuum)` entry.
    /// Exact for products of at most `level_cap` creation/annihilation
    /// factors.
    pub fn vacuum_expectation(&self) -> C64 {
        self.mat[(0, 0)]
    }

    /// Applies the operator to a vector of monomial coefficients.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.mat * v
    }

    pub fn scale(&self, c: C64) -> FockOperator {
        FockOperator {
            mat: &self.mat * c,
        }
    }

    /// Max absolute entry difference; the comparison used by the exact
    /// operator identities.
    pub fn max_abs_diff(&self, other: &FockOperator) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Max absolute entry difference restricted to columns of level at
    /// most `max_level`. Identities that rearrange operator products hold
    /// on the truncated space only on columns low enough that no
    /// intermediate crosses the cap.
    pub fn max_abs_diff_on_levels(
        &self,
        fock: &TruncatedFock,
        other: &FockOperator,
        max_level: usize,
    ) -> f64 {
        let hi = fock.offset(max_level + 1).min(self.mat.ncols());
        let mut worst = 0.0f64;
        for col in 0..hi {
            for row in 0..self.mat.nrows() {
                let d = (self.mat[(row, col)] - other.mat[(row, col)]).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        FockOperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        FockOperator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        FockOperator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::BlockSpec;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn basis(n: usize, i: usize) -> DVector<C64> {
        let mut v = DVector::zeros(n);
        v[i] = C64::ONE;
        v
    }

    fn tracial_fock(n: usize, q: f64, level: usize) -> TruncatedFock {
        let sp = DeformedSpace::build(&BlockSpec::tracial(n)).unwrap();
        TruncatedFock::build(sp, q, level).unwrap()
    }

    fn deformed_fock(s: f64, fixed: usize, q: f64, level: usize) -> TruncatedFock {
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![s],
            fixed_count: fixed,
        })
        .unwrap();
        TruncatedFock::build(sp, q, level).unwrap()
    }

    #[test]
    fn rejects_bad_q() {
        let sp = DeformedSpace::build(&BlockSpec::tracial(2)).unwrap();
        assert!(TruncatedFock::build(sp.clone(), 1.0, 3).is_err());
        assert!(TruncatedFock::build(sp, -1.3, 3).is_err());
    }

    #[test]
    fn explicit_tracial_gram_at_level_two() {
        let f = tracial_fock(2, 0.37, 3);
        let q = 0.37;
        let g2 = f.gram(2).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(1.0 + q),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(1.0),
                c(q),
                c(0.0),
                c(0.0),
                c(q),
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(1.0 + q),
            ],
        );
        assert!((g2 - want).norm() < 1e-12);
    }

    #[test]
    fn gram_level_one_is_metric() {
        let f = deformed_fock(0.7, 1, 0.5, 2);
        let g1 = f.gram(1).unwrap();
        assert!((g1 - f.space().metric()).norm() < 1e-12);
    }

    #[test]
    fn gram_at_q_zero_is_metric_power() {
        let f = deformed_fock(0.7, 0, 0.0, 3);
        let d = f.space().metric();
        let want = d.kronecker(&d.kronecker(d));
        assert!((f.gram(3).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn gram_positivity_over_q_grid() {
        for n in [2usize, 3] {
            for qq in [-0.9, -0.5, -0.1, 0.0, 0.3, 0.7, 0.9] {
                let f = tracial_fock(n, qq, 4);
                for k in 0..=4 {
                    assert!(
                        f.gram_min_eigenvalue(k).unwrap() > 0.0,
                        "gram level {k} not positive at q={qq}, n={n}"
                    );
                }
            }
        }
        // Explicit minimum at n=2, k=2: eigenvalues {1-q, 1+q, 1+q}.
        let q = 0.63;
        let f = tracial_fock(2, q, 2);
        let min = f.gram_min_eigenvalue(2).unwrap();
        assert!((min - (1.0 - q)).abs() < 1e-12);
    }

    #[test]
    fn gram_level_cap_is_enforced() {
        let f = tracial_fock(2, 0.4, 7);
        assert!(matches!(
            f.gram(6),
            Err(QawError::GramLevelCap { level: 6, cap: 5 })
        ));
    }

    #[test]
    fn creation_examples() {
        let f = tracial_fock(2, 0.5, 3);
        let a_star = f.creation(&basis(2, 0)).unwrap();
        // a*(e_1) vacuum = e_1.
        let v = a_star.apply(&f.vacuum());
        assert!((v[f.offset(1)] - C64::ONE).norm() < 1e-15);
        // Top level maps to zero.
        let mut top = DVector::zeros(f.dim());
        top[f.offset(3)] = C64::ONE;
        assert!(a_star.apply(&top).norm() < 1e-15);
        // <a*(xi) vacuum, a*(xi) vacuum>_q = <xi|xi>_U.
        let f = deformed_fock(0.7, 0, 0.5, 3);
        let xi = DVector::from_vec(vec![C64::new(0.3, 0.2), C64::new(-0.4, 0.8)]);
        let v = f.creation(&xi).unwrap().apply(&f.vacuum());
        let lhs = f.gram_inner(&v, &v).unwrap();
        let rhs = f.space().deformed_inner(&xi, &xi).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn annihilation_examples() {
        let f = deformed_fock(0.4, 1, 0.3, 3);
        let xi = DVector::from_vec(vec![C64::new(0.2, 0.5), C64::new(1.0, 0.0), C64::ONE]);
        let a = f.annihilation(&xi).unwrap();
        // a(xi) vacuum = 0.
        assert!(a.apply(&f.vacuum()).norm() < 1e-15);
        // a(xi) eta = <xi|eta>_U vacuum at level one.
        let eta = DVector::from_vec(vec![C64::new(-0.1, 0.9), C64::new(0.4, 0.2), C64::ZERO]);
        let mut lvl1 = DVector::zeros(f.dim());
        for i in 0..3 {
            lvl1[f.offset(1) + i] = eta[i];
        }
        let out = a.apply(&lvl1);
        let want = f.space().deformed_inner(&xi, &eta).unwrap();
        assert!((out[0] - want).norm() < 1e-12);
        assert!(out.rows(1, f.dim() - 1).norm() < 1e-15);
    }

    /// Orthogonal-family contraction: if `<I w | v_j>_U = 0` for all
    /// `j != l`, then `a(I w)` picks out the l-th slot with weight
    /// `q^{l-1} <I w | v_l>_U`.
    #[test]
    fn annihilation_orthogonal_family() {
        let q = 0.45;
        let f = tracial_fock(3, q, 4);
        // w = e_3, family (v_1, v_2, v_3) = (e_1, e_3, e_2): only l = 2 hits.
        let (e1, e2, e3) = (basis(3, 0), basis(3, 1), basis(3, 2));
        let mut word = DVector::zeros(f.dim());
        // v_1 (.) v_2 (.) v_3 = e_1 (.) e_3 (.) e_2 -> letters (0, 2, 1).
        let code = 0 * 9 + 2 * 3 + 1;
        word[f.offset(3) + code] = C64::ONE;
        let out = f.annihilation(&e3).unwrap().apply(&word);
        // Expect q^{2-1} * 1 * e_1 (.) e_2 at level 2.
        let expect_code = 0 * 3 + 1;
        let mut want = DVector::zeros(f.dim());
        want[f.offset(2) + expect_code] = c(q);
        assert!((&out - &want).norm() < 1e-12);
        let _ = (e1, e2);
    }

    #[test]
    fn adjointness_of_creation_and_annihilation() {
        for f in [tracial_fock(2, 0.5, 3), deformed_fock(0.7, 1, -0.4, 3)] {
            let n = f.n();
            let xi = DVector::from_fn(n, |i, _| C64::new(0.3 + i as f64, 0.1 - i as f64 * 0.2));
            let a_star = f.creation(&xi).unwrap();
            let a = f.annihilation(&xi).unwrap();
            // <a*(xi) u, v>_q = <u, a(xi) v>_q over all basis pairs below the cap.
            for uc in 0..f.dim() {
                let mut u = DVector::zeros(f.dim());
                u[uc] = C64::ONE;
                if f.level_of(uc) >= f.level_cap() {
                    continue;
                }
                let au = a_star.apply(&u);
                for vc in 0..f.dim() {
                    let mut v = DVector::zeros(f.dim());
                    v[vc] = C64::ONE;
                    let lhs = f.gram_inner(&au, &v).unwrap();
                    let rhs = f.gram_inner(&u, &a.apply(&v)).unwrap();
                    assert!(
                        (lhs - rhs).norm() < 1e-10,
                        "adjointness fails at ({uc}, {vc}): {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn q_commutation_below_top_level() {
        for f in [tracial_fock(2, 0.6, 3), deformed_fock(0.5, 0, -0.3, 3)] {
            let n = f.n();
            let xi = DVector::from_fn(n, |i, _| C64::new(1.0 - 0.3 * i as f64, 0.2 * i as f64));
            let eta = DVector::from_fn(n, |i, _| C64::new(0.4 * i as f64, 1.0 - i as f64));
            let a = f.annihilation(&xi).unwrap();
            let c_op = f.creation(&eta).unwrap();
            let lhs = &(&a * &c_op) - &(&c_op * &a).scale(c(f.q()));
            let scalar = f.space().deformed_inner(&xi, &eta).unwrap();
            let want = f.identity_op().scale(scalar);
            // Rows at the top level are truncation-polluted; compare the rest.
            let rows_ok = f.offset(f.level_cap());
            let diff = (&lhs - &want).into_matrix();
            let max = diff
                .view((0, 0), (rows_ok, f.dim()))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(max < 1e-10, "q-commutation residual {max}");
        }
    }

    #[test]
    fn field_rejects_complex_vectors() {
        let f = tracial_fock(2, 0.2, 2);
        let bad = DVector::from_vec(vec![C64::new(0.0, 1.0), C64::ZERO]);
        assert!(f.field(&bad).is_err());
    }

    #[test]
    fn field_moment_examples() {
        let q = 0.37;
        let f = tracial_fock(2, q, 4);
        let e = basis(2, 0);
        let s = f.field(&e).unwrap();
        // s(e) vacuum = e.
        let v = s.apply(&f.vacuum());
        assert!((v[f.offset(1)] - C64::ONE).norm() < 1e-15);
        // chi(s(e)^2) = 1.
        let s2 = &s * &s;
        assert!((s2.vacuum_expectation() - C64::ONE).norm() < 1e-12);
        // chi(s(e)^4) = 2 + q: two non-crossing pairings and one crossing.
        let s4 = &s2 * &s2;
        assert!((s4.vacuum_expectation() - c(2.0 + q)).norm() < 1e-12);
        // Orthogonal vectors decouple: chi(s(e_1) s(e_2)) = 0.
        let t = f.field(&basis(2, 1)).unwrap();
        assert!((&s * &t).vacuum_expectation().norm() < 1e-15);
        // Odd products vanish.
        let s3 = &s2 * &s;
        assert!(s3.vacuum_expectation().norm() < 1e-15);
        assert!((f.identity_op().vacuum_expectation() - C64::ONE).norm() < 1e-15);
    }

    #[test]
    fn moments_are_truncation_stable() {
        let q = -0.41;
        let word = [0usize, 1, 1, 0];
        let mut values = Vec::new();
        for level in 4..=6 {
            let f = tracial_fock(2, q, level);
            let ops: Vec<FockOperator> = (0..2).map(|i| f.field(&basis(2, i)).unwrap()).collect();
            let mut v = f.vacuum();
            for &i in word.iter().rev() {
                v = ops[i].apply(&v);
            }
            values.push(v[0]);
        }
        for w in values.windows(2) {
            assert!((w[0] - w[1]).norm() < 1e-13);
        }
    }

    #[test]
    fn operator_norm_examples() {
        let f = tracial_fock(2, 0.5, 4);
        assert!((f.operator_norm(&f.identity_op()).unwrap() - 1.0).abs() < 1e-10);

        // Truncated creation norms increase toward (1-q)^{-1/2} ||xi|| for
        // q > 0 and stay at ||xi|| for q <= 0.
        let xi = basis(2, 0);
        let mut prev = 0.0;
        for level in 1..=5 {
            let f = tracial_fock(2, 0.5, level);
            let norm = f.operator_norm(&f.creation(&xi).unwrap()).unwrap();
            assert!(norm >= prev - 1e-12);
            assert!(norm <= (1.0f64 - 0.5).powf(-0.5) + 1e-8);
            prev = norm;
        }
        assert!((prev - std::f64::consts::SQRT_2).abs() < 0.08);

        for q in [0.0, -0.3, -0.8] {
            let f = tracial_fock(2, q, 5);
            let norm = f.operator_norm(&f.creation(&xi).unwrap()).unwrap();
            assert!(norm <= 1.0 + 1e-8, "q={q} gave {norm}");
        }
    }

    #[test]
    fn levelwise_power_scales_levels() {
        let f = tracial_fock(2, 0.3, 3);
        let t = DMatrix::<C64>::identity(2, 2) * c(0.5f64.exp().recip());
        let gamma = f.levelwise_power(&t).unwrap();
        let mut v = DVector::zeros(f.dim());
        v[f.offset(2)] = C64::ONE;
        let out = gamma.apply(&v);
        assert!((out[f.offset(2)] - c((-1.0f64).exp())).norm() < 1e-12);
    }

    /// KMS identity at one-particle level: chi(W(xi) W(eta)) equals
    /// chi(W(eta) W(A^{-1} xi)), with W(z) = a*(z) + a(I z).
    #[test]
    fn kms_identity_for_one_particle_wick_words() {
        let f = deformed_fock(0.8, 1, 0.4, 3);
        let w = |z: &DVector<C64>| -> FockOperator {
            let created = f.creation(z).unwrap();
            let annih = f.annihilation(&f.space().conjugate(z)).unwrap();
            &created + &annih
        };
        let xi = DVector::from_vec(vec![C64::new(0.3, 0.7), C64::new(-0.2, 0.1), C64::ONE]);
        let eta = DVector::from_vec(vec![C64::new(0.9, -0.4), C64::new(0.5, 0.6), C64::ZERO]);
        let lhs = (&w(&xi) * &w(&eta)).vacuum_expectation();
        let rotated = f.space().apply_power(C64::new(0.0, -1.0), &xi);
        let rhs = (&w(&eta) * &w(&rotated)).vacuum_expectation();
        assert!((lhs - rhs).norm() < 1e-10, "KMS residual {}", (lhs - rhs).norm());
    }
}
