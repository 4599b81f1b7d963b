//! Wick words (two independent constructions), pair-partition moments,
//! Wick decomposition of polynomial operators, and radial multipliers.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QawError, Result};
use crate::fock::{FockOperator, TruncatedFock};
use crate::legop::LegOp;
use crate::partitions::{crossings, enumerate_pair_partitions};

type C64 = Complex64;

/// A coefficient array over degree-`degree` monomials of a
/// `dim`-dimensional one-particle space, stored lexicographically
/// (big-endian in the letters).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dim: usize,
    degree: usize,
    data: Vec<C64>,
}

impl Tensor {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            data: vec![C64::ZERO; dim.pow(degree as u32)],
        }
    }

    /// The scalar tensor of degree zero.
    pub fn scalar(dim: usize, value: C64) -> Self {
        Self {
            dim,
            degree: 0,
            data: vec![value],
        }
    }

    /// Unit coefficient on a single basis word (0-based letters).
    pub fn basis_word(dim: usize, letters: &[usize]) -> Self {
        let mut t = Self::zeros(dim, letters.len());
        let mut code = 0usize;
        for &l in letters {
            assert!(l < dim, "letter out of range");
            code = code * dim + l;
        }
        t.data[code] = C64::ONE;
        t
    }

    /// Outer product of one-particle vectors.
    pub fn simple(vectors: &[DVector<C64>]) -> Self {
        assert!(!vectors.is_empty(), "use Tensor::scalar for degree zero");
        let dim = vectors[0].len();
        let degree = vectors.len();
        let mut t = Self::zeros(dim, degree);
        for code in 0..t.data.len() {
            let mut prod = C64::ONE;
            let mut c = code;
            for pos in (0..degree).rev() {
                prod *= vectors[pos][c % dim];
                c /= dim;
            }
            t.data[code] = prod;
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Letters of the word at `code`.
    pub fn letters(&self, code: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.degree];
        let mut c = code;
        for pos in (0..self.degree).rev() {
            out[pos] = c % self.dim;
            c /= self.dim;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Applies a one-particle matrix to every slot: `T^{(x) degree}`.
    pub fn apply_levelwise(&self, t: &DMatrix<C64>) -> Tensor {
        assert_eq!(t.nrows(), self.dim);
        let mut cur = self.data.clone();
        let n = self.dim;
        for pos in 0..self.degree {
            let stride = n.pow((self.degree - 1 - pos) as u32);
            let mut next = vec![C64::ZERO; cur.len()];
            for (code, &v) in cur.iter().enumerate() {
                if v == C64::ZERO {
                    continue;
                }
                let letter = (code / stride) % n;
                let base = code - letter * stride;
                for out_letter in 0..n {
                    let c = t[(out_letter, letter)];
                    if c != C64::ZERO {
                        next[base + out_letter * stride] += c * v;
                    }
                }
            }
            cur = next;
        }
        Tensor {
            dim: self.dim,
            degree: self.degree,
            data: cur,
        }
    }
}

/// Degree-graded coefficient tensors representing an element of the
/// algebra of Wick words.
#[derive(Debug, Clone)]
pub struct WickDecomposition {
    dim: usize,
    components: BTreeMap<usize, Tensor>,
}

impl WickDecomposition {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            components: BTreeMap::new(),
        }
    }

    pub fn from_components(dim: usize, components: Vec<Tensor>) -> Result<Self> {
        let mut out = Self::new(dim);
        for t in components {
            if t.dim() != dim {
                return Err(QawError::InvalidArgument(
                    "component dimension mismatch".into(),
                ));
            }
            out.components.insert(t.degree(), t);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &BTreeMap<usize, Tensor> {
        &self.components
    }

    pub fn max_degree(&self) -> usize {
        self.components.keys().next_back().copied().unwrap_or(0)
    }
}

/// A bounded symbol on the degree grading.
#[derive(Clone)]
pub struct RadialSymbol {
    f: Arc<dyn Fn(usize) -> C64 + Send + Sync>,
}

impl RadialSymbol {
    pub fn from_fn(f: impl Fn(usize) -> C64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// The constant symbol; `constant(1)` is the identity multiplier.
    pub fn constant(c: C64) -> Self {
        Self::from_fn(move |_| c)
    }

    /// Kronecker delta at `n`: the projection `P_n` onto Wick words of
    /// length `n`.
    pub fn delta(n: usize) -> Self {
        Self::from_fn(move |d| if d == n { C64::ONE } else { C64::ZERO })
    }

    /// Indicator of `{0, ..., n}`: the projection `Q_n`.
    pub fn up_to(n: usize) -> Self {
        Self::from_fn(move |d| if d <= n { C64::ONE } else { C64::ZERO })
    }

    pub fn eval(&self, degree: usize) -> C64 {
        (self.f)(degree)
    }
}

fn check_degree(fock: &TruncatedFock, degree: usize) -> Result<()> {
    if degree > fock.level_cap() {
        return Err(QawError::TruncationExceeded {
            degree,
            level_cap: fock.level_cap(),
        });
    }
    Ok(())
}

/// The Wick word of a coefficient tensor through the split-sum formula:
/// for each monomial `e_1 (.) ... (.) e_p`, the sum over splittings of
/// `[p]` of `a*(e_{i_1}) ... a*(e_{i_{p-k}}) a(I e_{j_{p-k+1}}) ... a(I e_{j_p})`
/// weighted by `q^{i(I1, I2)}`, extended linearly to the whole tensor.
pub fn wick_direct(fock: &TruncatedFock, xi: &Tensor) -> Result<FockOperator> {
    if xi.dim() != fock.n() {
        return Err(QawError::InvalidArgument(
            "tensor dimension does not match the one-particle space".into(),
        ));
    }
    check_degree(fock, xi.degree())?;
    let dim = fock.dim();
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    let mut unit = vec![C64::ZERO; dim];
    let (mut buf_a, mut buf_b) = (Vec::new(), Vec::new());
    for code in 0..xi.data().len() {
        let coeff = xi.data()[code];
        if coeff == C64::ZERO {
            continue;
        }
        let letters = xi.letters(code);
        let vectors: Vec<DVector<C64>> = letters
            .iter()
            .map(|&l| {
                let mut v = DVector::zeros(fock.n());
                v[l] = C64::ONE;
                v
            })
            .collect();
        let op = LegOp::wick_word(fock, &vectors)?.scale(coeff);
        let slice = mat.as_mut_slice();
        for col in 0..dim {
            unit[col] = C64::ONE;
            op.apply_slice(
                fock,
                &unit,
                &mut slice[col * dim..(col + 1) * dim],
                &mut buf_a,
                &mut buf_b,
            );
            unit[col] = C64::ZERO;
        }
    }
    Ok(FockOperator::from_matrix(mat))
}

/// The degree-one Wick word `W(xi) = a*(xi) + a(I xi)` for a possibly
/// complex one-particle vector.
pub fn one_particle_wick(fock: &TruncatedFock, xi: &DVector<C64>) -> Result<FockOperator> {
    let created = fock.creation(xi)?;
    let annih = fock.annihilation(&fock.space().conjugate(xi))?;
    Ok(&created + &annih)
}

/// The Wick word of a simple tensor built by the contraction recursion
/// `W(v_0 (.) rest) = W(v_0) W(rest) - sum_l q^{l-1} <I v_0 | v_l>_U
/// W(rest with slot l removed)`, memoized over subsequences.
pub fn wick_recursive(fock: &TruncatedFock, vectors: &[DVector<C64>]) -> Result<FockOperator> {
    check_degree(fock, vectors.len())?;
    if vectors.len() > 32 {
        return Err(QawError::InvalidArgument("tensor degree too large".into()));
    }
    for v in vectors {
        if v.len() != fock.n() {
            return Err(QawError::InvalidArgument(
                "vector dimension does not match the one-particle space".into(),
            ));
        }
    }
    let mut memo: HashMap<u32, FockOperator> = HashMap::new();
    let full: u32 = if vectors.is_empty() {
        0
    } else {
        (1u32 << vectors.len()) - 1
    };
    build_recursive(fock, vectors, full, &mut memo)
}

fn build_recursive(
    fock: &TruncatedFock,
    vectors: &[DVector<C64>],
    mask: u32,
    memo: &mut HashMap<u32, FockOperator>,
) -> Result<FockOperator> {
    if mask == 0 {
        return Ok(fock.identity_op());
    }
    if let Some(hit) = memo.get(&mask) {
        return Ok(hit.clone());
    }
    let first = mask.trailing_zeros() as usize;
    let rest = mask & !(1u32 << first);
    let tail = build_recursive(fock, vectors, rest, memo)?;
    // W(v_first) applied structurally: two elementary factors per column.
    let head = LegOp::one_particle_wick(fock, &vectors[first])?;
    let dim = fock.dim();
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    {
        let src = tail.matrix().as_slice();
        let dst = mat.as_mut_slice();
        let (mut buf_a, mut buf_b) = (Vec::new(), Vec::new());
        for col in 0..dim {
            head.apply_slice(
                fock,
                &src[col * dim..(col + 1) * dim],
                &mut dst[col * dim..(col + 1) * dim],
                &mut buf_a,
                &mut buf_b,
            );
        }
    }
    let mut acc = FockOperator::from_matrix(mat);
    let mut pos = 0i32;
    for l in (first + 1)..vectors.len() {
        if rest & (1u32 << l) == 0 {
            continue;
        }
        let coeff = fock.space().wick_pairing(&vectors[first], &vectors[l])?
            * C64::new(fock.q().powi(pos), 0.0);
        if coeff != C64::ZERO {
            let shorter = build_recursive(fock, vectors, rest & !(1u32 << l), memo)?;
            acc = &acc - &shorter.scale(coeff);
        }
        pos += 1;
    }
    memo.insert(mask, acc.clone());
    Ok(acc)
}

/// Joint moment of field operators through the pair-partition sum:
/// `sum_{sigma in P_2(d)} q^{crossings(sigma)} prod_{(r,t)} <e_r|e_t>_U`,
/// zero for odd `d`. Purely combinatorial; no Fock matrices involved.
pub fn moment(fock: &TruncatedFock, vectors: &[DVector<C64>]) -> Result<C64> {
    for v in vectors {
        let max_im = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-14 {
            return Err(QawError::InvalidArgument(
                "moment vectors must be real".into(),
            ));
        }
    }
    let d = vectors.len();
    if d % 2 == 1 {
        return Ok(C64::ZERO);
    }
    let mut acc = C64::ZERO;
    for sigma in enumerate_pair_partitions(d) {
        let mut term = C64::new(fock.q().powi(crossings(&sigma) as i32), 0.0);
        for &(r, t) in sigma.pairs() {
            term *= fock
                .space()
                .deformed_inner(&vectors[r - 1], &vectors[t - 1])?;
            if term == C64::ZERO {
                break;
            }
        }
        acc += term;
    }
    Ok(acc)
}

/// Relative tolerance for deciding Wick-span membership by reassembly.
pub const WICK_SPAN_TOL: f64 = 1e-8;

/// Inverts `W` through the vacuum: the degree-`d` component is the
/// level-`d` block of `x * vacuum`. The reassembled operator must match
/// `x` on all columns low enough that truncation cannot pollute them
/// (levels up to `level_cap - max component degree`); otherwise the
/// operator is not in the span of Wick words and an error is returned.
pub fn wick_decompose(fock: &TruncatedFock, x: &FockOperator) -> Result<WickDecomposition> {
    let column = x.apply(&fock.vacuum());
    let scale = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut decomposition = WickDecomposition::new(fock.n());
    for d in 0..=fock.level_cap() {
        let mut t = Tensor::zeros(fock.n(), d);
        let off = fock.offset(d);
        let mut nonzero = false;
        for c in 0..fock.words_at(d) {
            let v = column[off + c];
            if v.norm() > 1e-14 * (1.0 + scale) {
                nonzero = true;
            }
            t.data_mut()[c] = v;
        }
        if nonzero {
            decomposition.components.insert(d, t);
        }
    }
    let rebuilt = reassemble(fock, &decomposition)?;
    let max_level = fock.level_cap() - decomposition.max_degree();
    let residual = rebuilt.max_abs_diff_on_levels(fock, x, max_level);
    let rel = residual / (1.0 + scale);
    if rel > WICK_SPAN_TOL {
        return Err(QawError::NotInWickSpan { residual: rel });
    }
    Ok(decomposition)
}

/// `sum_d W(xi_d)` over the components of a decomposition.
pub fn reassemble(fock: &TruncatedFock, x: &WickDecomposition) -> Result<FockOperator> {
    let mut acc = fock.identity_op().scale(C64::ZERO);
    for t in x.components().values() {
        acc = &acc + &wick_direct(fock, t)?;
    }
    Ok(acc)
}

/// The radial multiplier `m_phi`: scales the degree-`d` Wick component by
/// `phi(d)`. Refuses operators whose decomposition reaches the truncation
/// level, where a genuine component is indistinguishable from truncation
/// loss.
pub fn radial_apply(
    fock: &TruncatedFock,
    phi: &RadialSymbol,
    x: &FockOperator,
) -> Result<FockOperator> {
    let decomposition = wick_decompose(fock, x)?;
    if decomposition.components().contains_key(&fock.level_cap()) {
        return Err(QawError::TruncationExceeded {
            degree: fock.level_cap(),
            level_cap: fock.level_cap(),
        });
    }
    let mut acc = fock.identity_op().scale(C64::ZERO);
    for (&d, t) in decomposition.components() {
        let c = phi.eval(d);
        if c != C64::ZERO {
            acc = &acc + &wick_direct(fock, t)?.scale(c);
        }
    }
    Ok(acc)
}

/// A Wick component with `n_amp x n_amp` matrix coefficients per monomial.
#[derive(Debug, Clone)]
pub struct AmpTensor {
    dim: usize,
    degree: usize,
    n_amp: usize,
    blocks: Vec<DMatrix<C64>>,
}

impl AmpTensor {
    pub fn zeros(dim: usize, degree: usize, n_amp: usize) -> Self {
        Self {
            dim,
            degree,
            n_amp,
            blocks: vec![DMatrix::zeros(n_amp, n_amp); dim.pow(degree as u32)],
        }
    }

    /// Embeds a scalar tensor as `B_w = data[w] * identity`.
    pub fn from_scalar(t: &Tensor, n_amp: usize) -> Self {
        let mut out = Self::zeros(t.dim(), t.degree(), n_amp);
        for (w, &c) in t.data().iter().enumerate() {
            out.blocks[w] = DMatrix::identity(n_amp, n_amp) * c;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_amp(&self) -> usize {
        self.n_amp
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [DMatrix<C64>] {
        &mut self.blocks
    }

    pub fn scale(&mut self, c: C64) {
        for b in &mut self.blocks {
            *b *= c;
        }
    }
}

/// A matrix-amplified element of the algebra of Wick words.
#[derive(Debug, Clone)]
pub struct AmpWick {
    dim: usize,
    n_amp: usize,
    components: BTreeMap<usize, AmpTensor>,
}

impl AmpWick {
    pub fn new(dim: usize, n_amp: usize) -> Self {
        Self {
            dim,
            n_amp,
            components: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, t: AmpTensor) -> Result<()> {
        if t.dim() != self.dim || t.n_amp() != self.n_amp {
            return Err(QawError::InvalidArgument(
                "amplified component does not match".into(),
            ));
        }
        self.components.insert(t.degree(), t);
        Ok(())
    }

    pub fn n_amp(&self) -> usize {
        self.n_amp
    }

    pub fn components(&self) -> &BTreeMap<usize, AmpTensor> {
        &self.components
    }

    /// Applies a radial symbol to the grading.
    pub fn apply_symbol(&self, phi: &RadialSymbol) -> AmpWick {
        let mut out = self.clone();
        for (&d, t) in &mut out.components {
            t.scale(phi.eval(d));
        }
        out
    }
}

/// Dense `n_amp * dim(F)` matrix of an amplified Wick element:
/// `sum_{d, w} B_{d,w} (x) W(e_w)`.
pub fn amplified_matrix(fock: &TruncatedFock, x: &AmpWick) -> Result<DMatrix<C64>> {
    if x.dim != fock.n() {
        return Err(QawError::InvalidArgument(
            "amplified element does not match the one-particle space".into(),
        ));
    }
    let dim = fock.dim();
    let n_amp = x.n_amp;
    let mut big = DMatrix::<C64>::zeros(n_amp * dim, n_amp * dim);
    for (&d, t) in &x.components {
        check_degree(fock, d)?;
        for (code, block) in t.blocks().iter().enumerate() {
            if block.iter().all(|z| *z == C64::ZERO) {
                continue;
            }
            let letters = Tensor::zeros(fock.n(), d).letters(code);
            let wmat = wick_direct(fock, &Tensor::basis_word(fock.n(), &letters))?;
            for bi in 0..n_amp {
                for bj in 0..n_amp {
                    let c = block[(bi, bj)];
                    if c == C64::ZERO {
                        continue;
                    }
                    let mut view = big.view_mut((bi * dim, bj * dim), (dim, dim));
                    for col in 0..dim {
                        for row in 0..dim {
                            view[(row, col)] += c * wmat.matrix()[(row, col)];
                        }
                    }
                }
            }
        }
    }
    Ok(big)
}

/// Deterministic sample set for multiplier-norm experiments: all basis
/// Wick words up to degree `min(max_degree, 4)` with identity matrix
/// coefficients, plus `n_random` pseudo-random amplified elements drawn
/// from a ChaCha8 stream seeded with `seed`.
pub fn multiplier_samples(
    fock: &TruncatedFock,
    n_amp: usize,
    max_degree: usize,
    n_random: usize,
    seed: u64,
) -> Result<Vec<AmpWick>> {
    check_degree(fock, max_degree)?;
    let n = fock.n();
    let mut out = Vec::new();
    for d in 0..=max_degree.min(4) {
        for code in 0..n.pow(d as u32) {
            let letters = Tensor::zeros(n, d).letters(code);
            let t = Tensor::basis_word(n, &letters);
            let mut x = AmpWick::new(n, n_amp);
            x.insert(AmpTensor::from_scalar(&t, n_amp))?;
            out.push(x);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let mut x = AmpWick::new(n, n_amp);
        for d in 0..=max_degree {
            let mut t = AmpTensor::zeros(n, d, n_amp);
            for block in t.blocks_mut() {
                for entry in block.iter_mut() {
                    *entry = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
            x.insert(t)?;
        }
        out.push(x);
    }
    Ok(out)
}

/// Maximum over samples of `||(id (x) m_phi)(x)|| / ||x||` in truncated
/// orthonormalized coordinates. Samples are Wick-coefficient data, so the
/// multiplier acts exactly on the grading; only the norms are truncated.
pub fn sampled_multiplier_ratio(
    fock: &TruncatedFock,
    phi: &RadialSymbol,
    samples: &[AmpWick],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in samples {
        let denom = fock.amplified_operator_norm(x.n_amp(), &amplified_matrix(fock, x)?)?;
        if denom < 1e-12 {
            continue;
        }
        let mapped = x.apply_symbol(phi);
        let numer = fock.amplified_operator_norm(x.n_amp(), &amplified_matrix(fock, &mapped)?)?;
        worst = worst.max(numer / denom);
    }
    Ok(worst)
}
