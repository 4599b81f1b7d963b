//! The one-particle space: a finite-dimensional complexified real Hilbert
//! space carrying a positive generator `A`, the entrywise conjugation `I`,
//! and the deformed inner product `<xi|eta>_U = <xi, 2A(1+A)^{-1} eta>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QawError, Result};

type C64 = Complex64;

/// Concrete parameterization of the generator: each rotation parameter
/// `s != 0` contributes a 2x2 block with spectrum `{e^s, e^{-s}}`, and
/// `fixed_count` appends 1x1 identity blocks. Building from blocks keeps
/// `conj(A) * A = 1` exact, which encodes that every `A^{it}` preserves
/// the real subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    /// Rotation parameters, one 2x2 block each.
    #[serde(default)]
    pub rotation_params: Vec<f64>,
    /// Number of trailing 1x1 identity blocks.
    #[serde(default)]
    pub fixed_count: usize,
}

impl BlockSpec {
    /// Purely tracial spec: `A = 1` on an `n`-dimensional space.
    pub fn tracial(n: usize) -> Self {
        Self {
            rotation_params: Vec::new(),
            fixed_count: n,
        }
    }

    /// Complex dimension of the resulting space.
    pub fn dim(&self) -> usize {
        2 * self.rotation_params.len() + self.fixed_count
    }
}

/// The one-particle space, immutable after construction. Vectors are held
/// in the undeformed standard coordinates; the deformed geometry enters
/// only through the metric `D = 2A(1+A)^{-1}` and the Gram matrices built
/// downstream.
#[derive(Debug, Clone)]
pub struct DeformedSpace {
    dim: usize,
    generator: DMatrix<C64>,
    metric: DMatrix<C64>,
    /// Unitary eigenbasis of `A` (columns) and the positive eigenvalues;
    /// cached because powers `A^{-iz}` are taken for many `z` per run.
    eigvecs: DMatrix<C64>,
    eigvals: DVector<f64>,
    tracial: bool,
}

fn metric_of_eigenvalue(lambda: f64) -> f64 {
    2.0 * lambda / (1.0 + lambda)
}

impl DeformedSpace {
    /// Realizes the pair (real space, orthogonal group) described by a
    /// [`BlockSpec`]; the generator is block-diagonal with blocks
    /// `[[cosh s, i sinh s], [-i sinh s, cosh s]]`.
    pub fn build(spec: &BlockSpec) -> Result<Self> {
        let n = spec.dim();
        if n == 0 {
            return Err(QawError::InvalidArgument(
                "block spec describes a zero-dimensional space".into(),
            ));
        }
        for &s in &spec.rotation_params {
            if s == 0.0 || !s.is_finite() {
                return Err(QawError::InvalidArgument(format!(
                    "rotation parameter {s} must be finite and nonzero"
                )));
            }
        }
        let mut a = DMatrix::<C64>::zeros(n, n);
        let mut q = DMatrix::<C64>::zeros(n, n);
        let mut lambda = DVector::<f64>::zeros(n);
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let i = C64::new(0.0, 1.0);
        for (b, &s) in spec.rotation_params.iter().enumerate() {
            let (c, sh) = (s.cosh(), s.sinh());
            let off = 2 * b;
            a[(off, off)] = C64::new(c, 0.0);
            a[(off, off + 1)] = i * sh;
            a[(off + 1, off)] = -i * sh;
            a[(off + 1, off + 1)] = C64::new(c, 0.0);
            // Eigenpairs: (1, -i)/sqrt(2) for e^s and (1, i)/sqrt(2) for e^{-s}.
            q[(off, off)] = inv_sqrt2;
            q[(off + 1, off)] = -i * inv_sqrt2;
            lambda[off] = s.exp();
            q[(off, off + 1)] = inv_sqrt2;
            q[(off + 1, off + 1)] = i * inv_sqrt2;
            lambda[off + 1] = (-s).exp();
        }
        let fixed_off = 2 * spec.rotation_params.len();
        for j in 0..spec.fixed_count {
            a[(fixed_off + j, fixed_off + j)] = C64::ONE;
            q[(fixed_off + j, fixed_off + j)] = C64::ONE;
            lambda[fixed_off + j] = 1.0;
        }
        let metric = Self::function_of_generator(&q, &lambda, metric_of_eigenvalue);
        Ok(Self {
            dim: n,
            generator: a,
            metric,
            eigvecs: q,
            eigvals: lambda,
            tracial: spec.rotation_params.is_empty(),
        })
    }

    /// Tensors with a trivial `m`-dimensional leg: the generator becomes
    /// `A (x) 1_m` and basis index `a * m + k` holds the pair `(a, k)`.
    pub fn tensor_with_trivial(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(QawError::InvalidArgument("tensor leg must be nonzero".into()));
        }
        let eye = DMatrix::<C64>::identity(m, m);
        let mut eigvals = DVector::<f64>::zeros(self.dim * m);
        for a in 0..self.dim {
            for k in 0..m {
                eigvals[a * m + k] = self.eigvals[a];
            }
        }
        Ok(Self {
            dim: self.dim * m,
            generator: self.generator.kronecker(&eye),
            metric: self.metric.kronecker(&eye),
            eigvecs: self.eigvecs.kronecker(&eye),
            eigvals,
            tracial: self.tracial,
        })
    }

    fn function_of_generator(
        q: &DMatrix<C64>,
        lambda: &DVector<f64>,
        f: impl Fn(f64) -> f64,
    ) -> DMatrix<C64> {
        let n = q.nrows();
        let diag = DMatrix::<C64>::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(f(lambda[r]), 0.0)
            } else {
                C64::ZERO
            }
        });
        q * diag * q.adjoint()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The analytic generator `A`.
    pub fn generator(&self) -> &DMatrix<C64> {
        &self.generator
    }

    /// The metric `D = 2A(1+A)^{-1}` of the deformed inner product.
    pub fn metric(&self) -> &DMatrix<C64> {
        &self.metric
    }

    /// `D^{1/2}`, used for deformed-norm checks on contractions.
    pub fn metric_sqrt(&self) -> DMatrix<C64> {
        Self::function_of_generator(&self.eigvecs, &self.eigvals, |l| {
            metric_of_eigenvalue(l).sqrt()
        })
    }

    /// Whether `A = 1` (the tracial q-Gaussian case).
    pub fn is_tracial(&self) -> bool {
        self.tracial
    }

    /// Deformed inner product `<xi | eta>_U = xi^* D eta`, conjugate-linear
    /// in the left variable.
    pub fn deformed_inner(&self, xi: &DVector<C64>, eta: &DVector<C64>) -> Result<C64> {
        if xi.len() != self.dim || eta.len() != self.dim {
            return Err(QawError::InvalidArgument(format!(
                "vector dimensions {} / {} do not match space dimension {}",
                xi.len(),
                eta.len(),
                self.dim
            )));
        }
        Ok((xi.adjoint() * &self.metric * eta)[(0, 0)])
    }

    /// The bilinear pairing `<I xi | eta>_U = xi^T D eta` that appears as
    /// the contraction coefficient in the Wick recursion; linear in both
    /// arguments.
    pub fn wick_pairing(&self, xi: &DVector<C64>, eta: &DVector<C64>) -> Result<C64> {
        self.deformed_inner(&self.conjugate(xi), eta)
    }

    /// Entrywise conjugation `I` in the standard basis.
    pub fn conjugate(&self, xi: &DVector<C64>) -> DVector<C64> {
        xi.map(|z| z.conj())
    }

    /// `A^{-iz} xi` through the cached eigendecomposition; `z = 0` is the
    /// identity and `z = -i` gives `A^{-1} xi`.
    pub fn apply_power(&self, z: C64, xi: &DVector<C64>) -> DVector<C64> {
        let mut coords = self.eigvecs.adjoint() * xi;
        let minus_iz = C64::new(0.0, -1.0) * z;
        for j in 0..self.dim {
            let phase = (minus_iz * self.eigvals[j].ln()).exp();
            coords[j] *= phase;
        }
        &self.eigvecs * coords
    }

    /// `A^{-iz}` as a matrix, for levelwise quantization of the dynamics.
    pub fn power_matrix(&self, z: C64) -> DMatrix<C64> {
        let n = self.dim;
        let minus_iz = C64::new(0.0, -1.0) * z;
        let diag = DMatrix::<C64>::from_fn(n, n, |r, c| {
            if r == c {
                (minus_iz * self.eigvals[r].ln()).exp()
            } else {
                C64::ZERO
            }
        });
        &self.eigvecs * diag * self.eigvecs.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn cv(xs: &[f64]) -> DVector<C64> {
        DVector::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0)))
    }

    #[test]
    fn tracial_build_is_identity() {
        let sp = DeformedSpace::build(&BlockSpec::tracial(3)).unwrap();
        assert!(sp.is_tracial());
        assert!((sp.generator() - DMatrix::<C64>::identity(3, 3)).norm() < TOL);
        assert!((sp.metric() - DMatrix::<C64>::identity(3, 3)).norm() < TOL);
    }

    #[test]
    fn single_block_spectrum() {
        let s = 0.7;
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![s],
            fixed_count: 0,
        })
        .unwrap();
        // Eigenvalues of A are {e^s, e^{-s}}: check A v = lambda v on the
        // cached eigenvectors and the trace/determinant independently.
        let a = sp.generator();
        let tr = a[(0, 0)] + a[(1, 1)];
        assert!((tr.re - 2.0 * s.cosh()).abs() < TOL && tr.im.abs() < TOL);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((det - C64::ONE).norm() < TOL);
        let mut eig: Vec<f64> = sp.eigvals.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - (-s).exp()).abs() < TOL);
        assert!((eig[1] - s.exp()).abs() < TOL);
        for j in 0..2 {
            let v = DVector::from_iterator(2, sp.eigvecs.column(j).iter().copied());
            let diff = a * &v - &v * C64::new(sp.eigvals[j], 0.0);
            assert!(diff.norm() < TOL);
        }
    }

    #[test]
    fn conjugate_of_generator_is_inverse() {
        for spec in [
            BlockSpec::tracial(2),
            BlockSpec {
                rotation_params: vec![0.7],
                fixed_count: 1,
            },
            BlockSpec {
                rotation_params: vec![0.4, -1.1],
                fixed_count: 2,
            },
        ] {
            let sp = DeformedSpace::build(&spec).unwrap();
            let conj_a = sp.generator().map(|z| z.conj());
            let prod = conj_a * sp.generator();
            let eye = DMatrix::<C64>::identity(sp.dim(), sp.dim());
            assert!((prod - eye).norm() < 1e-12);
        }
    }

    #[test]
    fn deformed_inner_examples() {
        // Identity generator: the standard inner product.
        let sp = DeformedSpace::build(&BlockSpec::tracial(2)).unwrap();
        let x = cv(&[1.0, 2.0]);
        let y = cv(&[3.0, -1.0]);
        let v = sp.deformed_inner(&x, &y).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < TOL);

        // Eigenvector of a single block: <v+|v+>_U = 2 e^s / (1 + e^s).
        let s = 0.7;
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![s],
            fixed_count: 0,
        })
        .unwrap();
        let vplus = DVector::from_vec(vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2),
        ]);
        let got = sp.deformed_inner(&vplus, &vplus).unwrap();
        let want = 2.0 * s.exp() / (1.0 + s.exp());
        assert!((got - C64::new(want, 0.0)).norm() < TOL);

        // Real unit vectors keep norm one in the deformed product.
        let e0 = cv(&[1.0, 0.0]);
        let got = sp.deformed_inner(&e0, &e0).unwrap();
        assert!((got - C64::ONE).norm() < TOL);

        assert!(sp.deformed_inner(&cv(&[1.0]), &e0).is_err());
    }

    #[test]
    fn apply_power_examples() {
        let s = 0.9;
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![s],
            fixed_count: 1,
        })
        .unwrap();
        let xi = DVector::from_vec(vec![
            C64::new(0.3, 0.1),
            C64::new(-1.0, 0.2),
            C64::new(0.5, 0.0),
        ]);
        // z = 0 is the identity.
        let same = sp.apply_power(C64::ZERO, &xi);
        assert!((&same - &xi).norm() < TOL);

        // Tracial space: any z acts as the identity.
        let tr = DeformedSpace::build(&BlockSpec::tracial(3)).unwrap();
        let moved = tr.apply_power(C64::new(0.3, -0.7), &xi);
        assert!((&moved - &xi).norm() < TOL);

        // Real t on a real vector stays real: U_t preserves the real span.
        let real = cv(&[0.2, -0.4, 1.0]);
        let rotated = sp.apply_power(C64::new(0.37, 0.0), &real);
        let max_im = rotated.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-12);

        // z = -i gives A^{-1}.
        let inv = sp.apply_power(C64::new(0.0, -1.0), &xi);
        let back = sp.generator() * inv;
        assert!((back - &xi).norm() < 1e-12);
    }

    #[test]
    fn metric_commutes_and_spectrum_in_range() {
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![0.7, 1.3],
            fixed_count: 1,
        })
        .unwrap();
        let comm = sp.metric() * sp.generator() - sp.generator() * sp.metric();
        assert!(comm.norm() < 1e-12);
        for j in 0..sp.dim() {
            let d = metric_of_eigenvalue(sp.eigvals[j]);
            assert!(d > 0.0 && d < 2.0);
        }
    }

    #[test]
    fn real_powers_are_deformed_unitaries() {
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![0.7],
            fixed_count: 1,
        })
        .unwrap();
        let x = DVector::from_vec(vec![
            C64::new(0.3, 0.4),
            C64::new(-0.2, 0.9),
            C64::new(1.1, -0.5),
        ]);
        let y = DVector::from_vec(vec![
            C64::new(-0.6, 0.2),
            C64::new(0.8, 0.1),
            C64::new(0.0, 0.7),
        ]);
        let before = sp.deformed_inner(&x, &y).unwrap();
        for t in [0.3, -1.2, 2.5] {
            let xt = sp.apply_power(C64::new(t, 0.0), &x);
            let yt = sp.apply_power(C64::new(t, 0.0), &y);
            let after = sp.deformed_inner(&xt, &yt).unwrap();
            assert!((after - before).norm() < 1e-12);
        }
    }

    #[test]
    fn wick_pairing_matches_direct_evaluation() {
        let sp = DeformedSpace::build(&BlockSpec {
            rotation_params: vec![0.7],
            fixed_count: 0,
        })
        .unwrap();
        let x = DVector::from_vec(vec![C64::new(0.3, 0.4), C64::new(-0.2, 0.9)]);
        let y = DVector::from_vec(vec![C64::new(-0.6, 0.2), C64::new(0.8, 0.1)]);
        // <I x | y>_U should be x^T D y: linear in x, not conjugate-linear.
        let direct = (x.transpose() * sp.metric() * &y)[(0, 0)];
        let got = sp.wick_pairing(&x, &y).unwrap();
        assert!((got - direct).norm() < TOL);
    }

    #[test]
    fn block_spec_serde() {
        let spec = BlockSpec {
            rotation_params: vec![0.7, -0.3],
            fixed_count: 1,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: BlockSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let defaulted: BlockSpec = serde_json::from_str("{\"fixed_count\":2}").unwrap();
        assert_eq!(defaulted, BlockSpec::tracial(2));
    }
}
