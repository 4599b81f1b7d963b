//! Structural operators on a truncated Fock space: finite sums of scalar
//! multiples of products of elementary creation/annihilation factors.
//!
//! Dense matrices work fine for a single small Fock space, but operators
//! on tensor products of two Fock spaces must never be materialized; this
//! representation applies them leg by leg. Adjoints with respect to the
//! q-Gram are structural (swap creation and annihilation, reverse the
//! factors), which stays exact under truncation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Result;
use crate::fock::{FockOperator, TruncatedFock};
use crate::partitions::{split_inversions, SplitIndex};

type C64 = Complex64;

/// One elementary factor. `Annihilate` carries both the argument vector
/// (for adjoints) and its precomputed weights `<xi|e_b>_U`.
#[derive(Clone, Debug)]
pub(crate) enum Elem {
    Create(DVector<C64>),
    Annihilate {
        xi: DVector<C64>,
        weights: DVector<C64>,
    },
}

impl Elem {
    pub(crate) fn create(xi: DVector<C64>) -> Self {
        Elem::Create(xi)
    }

    pub(crate) fn annihilate(fock: &TruncatedFock, xi: DVector<C64>) -> Result<Self> {
        let weights = fock.annihilation_weights(&xi)?;
        Ok(Elem::Annihilate { xi, weights })
    }

    fn adjoint(&self, fock: &TruncatedFock) -> Result<Self> {
        match self {
            Elem::Create(xi) => Elem::annihilate(fock, xi.clone()),
            Elem::Annihilate { xi, .. } => Ok(Elem::Create(xi.clone())),
        }
    }

    /// Accumulates `dst += factor * src` on monomial coordinate slices.
    pub(crate) fn apply_into(&self, fock: &TruncatedFock, src: &[C64], dst: &mut [C64]) {
        match self {
            Elem::Create(xi) => fock.apply_creation_into(xi, src, dst),
            Elem::Annihilate { weights, .. } => fock.apply_annihilation_into(weights, src, dst),
        }
    }
}

/// A scalar multiple of a product of elementary factors; `factors[0]` is
/// the leftmost (applied last).
#[derive(Clone, Debug)]
pub(crate) struct ElemWord {
    pub coeff: C64,
    pub factors: Vec<Elem>,
}

/// A finite sum of [`ElemWord`]s: the structural form of every operator
/// this crate builds on a single Fock leg.
#[derive(Clone, Debug)]
pub(crate) struct LegOp {
    pub words: Vec<ElemWord>,
}

impl LegOp {
    pub(crate) fn identity() -> Self {
        LegOp {
            words: vec![ElemWord {
                coeff: C64::ONE,
                factors: Vec::new(),
            }],
        }
    }

    /// The degree-one Wick word `W(xi) = a*(xi) + a(I xi)`.
    pub(crate) fn one_particle_wick(fock: &TruncatedFock, xi: &DVector<C64>) -> Result<Self> {
        let conj = fock.space().conjugate(xi);
        Ok(LegOp {
            words: vec![
                ElemWord {
                    coeff: C64::ONE,
                    factors: vec![Elem::create(xi.clone())],
                },
                ElemWord {
                    coeff: C64::ONE,
                    factors: vec![Elem::annihilate(fock, conj)?],
                },
            ],
        })
    }

    /// The Wick word of a simple tensor `v_1 (.) ... (.) v_p`, expanded
    /// over the `2^p` splittings: creation factors from the left part,
    /// conjugated annihilation factors from the right part, weighted by
    /// `q^{i(I1, I2)}`.
    pub(crate) fn wick_word(fock: &TruncatedFock, vectors: &[DVector<C64>]) -> Result<Self> {
        let p = vectors.len();
        let q = fock.q();
        let mut words = Vec::with_capacity(1 << p);
        for mask in 0u32..(1u32 << p) {
            let left: Vec<usize> = (1..=p).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let split = SplitIndex::new(p, left)?;
            let weight = q.powi(split_inversions(&split) as i32);
            let mut factors = Vec::with_capacity(p);
            for &i in split.left() {
                factors.push(Elem::create(vectors[i - 1].clone()));
            }
            for &j in split.right() {
                factors.push(Elem::annihilate(
                    fock,
                    fock.space().conjugate(&vectors[j - 1]),
                )?);
            }
            words.push(ElemWord {
                coeff: C64::new(weight, 0.0),
                factors,
            });
        }
        Ok(LegOp { words })
    }

    /// Expanded product; `ops[0]` acts last.
    pub(crate) fn product(ops: &[&LegOp]) -> Self {
        let mut acc = LegOp::identity();
        for op in ops {
            let mut words = Vec::with_capacity(acc.words.len() * op.words.len());
            for a in &acc.words {
                for b in &op.words {
                    let mut factors = a.factors.clone();
                    factors.extend(b.factors.iter().cloned());
                    words.push(ElemWord {
                        coeff: a.coeff * b.coeff,
                        factors,
                    });
                }
            }
            acc = LegOp { words };
        }
        acc
    }

    pub(crate) fn scale(mut self, c: C64) -> Self {
        for w in &mut self.words {
            w.coeff *= c;
        }
        self
    }

    /// q-Gram adjoint: reverse each product, swap creation/annihilation,
    /// conjugate coefficients. Exact on the truncated space.
    pub(crate) fn adjoint(&self, fock: &TruncatedFock) -> Result<Self> {
        let mut words = Vec::with_capacity(self.words.len());
        for w in &self.words {
            let mut factors = Vec::with_capacity(w.factors.len());
            for fac in w.factors.iter().rev() {
                factors.push(fac.adjoint(fock)?);
            }
            words.push(ElemWord {
                coeff: w.coeff.conj(),
                factors,
            });
        }
        Ok(LegOp { words })
    }

    /// Accumulates `dst += op * src` over coordinate slices, using two
    /// scratch buffers of Fock dimension.
    pub(crate) fn apply_slice(
        &self,
        fock: &TruncatedFock,
        src: &[C64],
        dst: &mut [C64],
        buf_a: &mut Vec<C64>,
        buf_b: &mut Vec<C64>,
    ) {
        let dim = fock.dim();
        buf_a.resize(dim, C64::ZERO);
        buf_b.resize(dim, C64::ZERO);
        for word in &self.words {
            if word.factors.is_empty() {
                for i in 0..dim {
                    dst[i] += word.coeff * src[i];
                }
                continue;
            }
            for (step, fac) in word.factors.iter().rev().enumerate() {
                if step == 0 {
                    buf_a.iter_mut().for_each(|z| *z = C64::ZERO);
                    fac.apply_into(fock, src, buf_a);
                } else if step % 2 == 1 {
                    buf_b.iter_mut().for_each(|z| *z = C64::ZERO);
                    fac.apply_into(fock, buf_a, buf_b);
                } else {
                    buf_a.iter_mut().for_each(|z| *z = C64::ZERO);
                    fac.apply_into(fock, buf_b, buf_a);
                }
            }
            let cur: &[C64] = if word.factors.len() % 2 == 1 {
                buf_a
            } else {
                buf_b
            };
            for i in 0..dim {
                dst[i] += word.coeff * cur[i];
            }
        }
    }

    /// Dense materialization on a single Fock space.
    pub(crate) fn to_operator(&self, fock: &TruncatedFock) -> FockOperator {
        let dim = fock.dim();
        let mut mat = DMatrix::<C64>::zeros(dim, dim);
        let mut unit = vec![C64::ZERO; dim];
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let slice = mat.as_mut_slice();
        for col in 0..dim {
            unit[col] = C64::ONE;
            self.apply_slice(fock, &unit, &mut slice[col * dim..(col + 1) * dim], &mut a, &mut b);
            unit[col] = C64::ZERO;
        }
        FockOperator::from_matrix(mat)
    }
}
