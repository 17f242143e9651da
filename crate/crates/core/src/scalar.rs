//! Scalar fields: real (`f64`) by default, complex (`Complex64`) on request.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Real,
    Complex,
}

impl std::fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalarMode::Real => "real",
            ScalarMode::Complex => "complex",
        })
    }
}

/// Wire representation of a flat list of scalars: plain numbers for real
/// data, `[re, im]` pairs for complex data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeffs {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Zero
    + One
    + 'static
{
    const MODE: ScalarMode;

    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn scale(self, k: f64) -> Self;
    /// `z / |z|`, with the convention `phase(0) = 1`.
    fn phase(self) -> Self;
    /// Standard gaussian; circularly symmetric with unit variance in complex mode.
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Uniform on the unit "sphere" of the field: `±1` or `e^{iθ}`.
    fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn encode(values: &[Self]) -> Coeffs;
    fn decode(coeffs: Coeffs) -> Result<Vec<Self>>;

    /// Largest eigenpair of the Gram matrix `A^H A` of a row-major `n x n`
    /// matrix, as `(eigenvalue, unit eigenvector)`.
    fn gram_top_eigenpair(a: &[Self], n: usize) -> (f64, Vec<Self>);
}

fn gram_top<T>(a: &[T], n: usize) -> (f64, Vec<T>)
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
{
    let mat = nalgebra::DMatrix::from_row_slice(n, n, a);
    let gram = mat.adjoint() * &mat;
    let eig = gram.symmetric_eigen();
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold(None::<(usize, &f64)>, |best, (i, v)| match best {
            Some((_, b)) if *b >= *v => best,
            _ => Some((i, v)),
        })
        .expect("non-empty spectrum");
    let v = eig.eigenvectors.column(idx).iter().copied().collect();
    (lambda.max(0.0), v)
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Real;

    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn phase(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        }
    }
    fn encode(values: &[Self]) -> Coeffs {
        Coeffs::Real(values.to_vec())
    }
    fn decode(coeffs: Coeffs) -> Result<Vec<Self>> {
        match coeffs {
            Coeffs::Real(v) => Ok(v),
            Coeffs::Complex(_) => Err(Error::InvalidInput(
                "complex coefficients supplied for a real form".into(),
            )),
        }
    }
    fn gram_top_eigenpair(a: &[Self], n: usize) -> (f64, Vec<Self>) {
        gram_top(a, n)
    }
}

impl Scalar for Complex64 {
    const MODE: ScalarMode = ScalarMode::Complex;

    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn phase(self) -> Self {
        let r = self.norm();
        if r == 0.0 {
            Complex64::one()
        } else {
            self / r
        }
    }
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
    fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        Complex64::from_polar(1.0, theta)
    }
    fn encode(values: &[Self]) -> Coeffs {
        Coeffs::Complex(values.iter().map(|z| [z.re, z.im]).collect())
    }
    fn decode(coeffs: Coeffs) -> Result<Vec<Self>> {
        Ok(match coeffs {
            Coeffs::Real(v) => v.into_iter().map(Complex64::from).collect(),
            Coeffs::Complex(v) => v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
        })
    }
    fn gram_top_eigenpair(a: &[Self], n: usize) -> (f64, Vec<Self>) {
        gram_top(a, n)
    }
}
