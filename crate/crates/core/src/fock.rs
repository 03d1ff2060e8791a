//! Dense operators on truncated bosonic Fock spaces.
//!
//! The two-mode product space is ordered field-major: |n⟩|m⟩ sits at index
//! `n * (m_max + 1) + m`. Every composite operator in the crate relies on
//! this ordering.

use std::fmt;
use std::ops::{Add, Bound, Mul, RangeBounds, Sub};

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Which Hilbert space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Field { dim: usize },
    Mech { dim: usize },
    Product { field: usize, mech: usize },
}

impl Space {
    pub fn dim(&self) -> usize {
        match *self {
            Space::Field { dim } | Space::Mech { dim } => dim,
            Space::Product { field, mech } => field * mech,
        }
    }
}

/// Dense complex square matrix tagged with its space.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix {
    space: Space,
    data: Mat<C64>,
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorMatrix {{ space: {:?}, max_abs: {:e} }}", self.space, self.max_abs())
    }
}

impl OperatorMatrix {
    pub fn from_fn(space: Space, f: impl FnMut(usize, usize) -> C64) -> Self {
        let d = space.dim();
        OperatorMatrix { space, data: Mat::from_fn(d, d, f) }
    }

    pub fn from_real_fn(space: Space, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(space, |i, j| C64::new(f(i, j), 0.0))
    }

    pub fn zeros(space: Space) -> Self {
        let d = space.dim();
        OperatorMatrix { space, data: Mat::zeros(d, d) }
    }

    pub fn identity(space: Space) -> Self {
        Self::diagonal(space, |_| 1.0)
    }

    pub fn diagonal(space: Space, mut f: impl FnMut(usize) -> f64) -> Self {
        Self::from_real_fn(space, |i, j| if i == j { f(i) } else { 0.0 })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub(crate) fn mat(&self) -> &Mat<C64> {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { space: self.space, data: self.data.adjoint().to_owned() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    pub fn scale_complex(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, mut f: impl FnMut(C64) -> C64) -> Self {
        let d = self.dim();
        OperatorMatrix { space: self.space, data: Mat::from_fn(d, d, |i, j| f(self.data[(i, j)])) }
    }

    /// `self` plus `c` times the identity.
    pub fn shift(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.data[(i, i)] += c;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                m = m.max(self.data[(i, j)].norm());
            }
        }
        m
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.space, other.space, "space mismatch");
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                m = m.max((self.data[(i, j)] - other.data[(i, j)]).norm());
            }
        }
        m
    }

    /// max|M − M†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                m = m.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        m
    }

    /// max|M − M†| ≤ 1e-12·max|M|.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= 1e-12 * self.max_abs()
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        let d = self.dim();
        (0..d).all(|j| (0..d).all(|i| self.data[(i, j)].im == 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// M·ψ.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        assert_eq!(psi.len(), self.dim());
        let d = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            let pj = psi[j];
            if pj == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                out[i] += self.data[(i, j)] * pj;
            }
        }
        out
    }

    /// ⟨ψ|M|ψ⟩ (ψ is not renormalised).
    pub fn expect(&self, psi: &[C64]) -> C64 {
        let m_psi = self.apply(psi);
        psi.iter().zip(&m_psi).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "space mismatch in operator sum");
        OperatorMatrix { space: self.space, data: &self.data + &rhs.data }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "space mismatch in operator difference");
        OperatorMatrix { space: self.space, data: &self.data - &rhs.data }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "space mismatch in operator product");
        OperatorMatrix { space: self.space, data: &self.data * &rhs.data }
    }
}

/// Ladder matrix with ⟨k−1|a|k⟩ = √k on a `dim`-level truncation.
fn ladder(space: Space) -> OperatorMatrix {
    OperatorMatrix::from_real_fn(space, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Field annihilation operator on `d` Fock levels (photons 0..d−1).
pub fn annihilation(d: usize) -> Result<OperatorMatrix> {
    if d < 2 {
        return Err(Error::Domain(format!("ladder operators need at least 2 levels, got {d}")));
    }
    Ok(ladder(Space::Field { dim: d }))
}

/// Mechanical annihilation operator b on phonons 0..=m_max.
pub fn mech_annihilation(m_max: usize) -> Result<OperatorMatrix> {
    if m_max < 1 {
        return Err(Error::Domain(format!("m_max must be at least 1, got {m_max}")));
    }
    Ok(ladder(Space::Mech { dim: m_max + 1 }))
}

/// Photon number a†a on `d` levels.
pub fn number(d: usize) -> Result<OperatorMatrix> {
    annihilation(d)?;
    Ok(OperatorMatrix::diagonal(Space::Field { dim: d }, |k| k as f64))
}

/// x̂ = x_zpf (b + b†) with x_zpf = 1/√(2Ω).
pub fn mech_position(m_max: usize, omega: f64) -> Result<OperatorMatrix> {
    let b = mech_annihilation(m_max)?;
    let x_zpf = 1.0 / (2.0 * omega).sqrt();
    Ok((&b + &b.adjoint()).scale(x_zpf))
}

/// p̂ = i √(Ω/2) (b† − b).
pub fn mech_momentum(m_max: usize, omega: f64) -> Result<OperatorMatrix> {
    let b = mech_annihilation(m_max)?;
    Ok((&b.adjoint() - &b).scale_complex(C64::new(0.0, (omega / 2.0).sqrt())))
}

fn describe(guard: &impl RangeBounds<f64>) -> String {
    let lo = match guard.start_bound() {
        Bound::Included(v) => format!("[{v:e}"),
        Bound::Excluded(v) => format!("({v:e}"),
        Bound::Unbounded => "(-inf".to_string(),
    };
    let hi = match guard.end_bound() {
        Bound::Included(v) => format!("{v:e}]"),
        Bound::Excluded(v) => format!("{v:e})"),
        Bound::Unbounded => "+inf)".to_string(),
    };
    format!("{lo}, {hi}")
}

/// Spectral eigendecomposition M = V·D·V† of a Hermitian matrix, ascending.
pub(crate) fn hermitian_decomposition(m: &OperatorMatrix) -> Result<(Vec<f64>, Mat<C64>)> {
    let d = m.dim();
    let failed = |e: faer::linalg::evd::EvdError| Error::Numerical(format!("eigendecomposition failed: {e:?}"));
    if m.is_real() {
        let re = Mat::<f64>::from_fn(d, d, |i, j| m.data[(i, j)].re);
        let evd = re.self_adjoint_eigen(Side::Lower).map_err(failed)?;
        let vals = (0..d).map(|k| evd.S()[k]).collect();
        let u = evd.U();
        Ok((vals, Mat::from_fn(d, d, |i, j| C64::new(u[(i, j)], 0.0))))
    } else {
        let evd = m.data.self_adjoint_eigen(Side::Lower).map_err(failed)?;
        let vals = (0..d).map(|k| evd.S()[k].re).collect();
        Ok((vals, evd.U().to_owned()))
    }
}

/// f(M) = V·f(D)·V† for Hermitian `m`, refusing eigenvalues outside `guard`.
pub fn apply_scalar_function(
    m: &OperatorMatrix,
    f: impl Fn(f64) -> f64,
    guard: impl RangeBounds<f64>,
) -> Result<OperatorMatrix> {
    if !m.is_hermitian() {
        return Err(Error::Precondition("scalar functions need a Hermitian argument".into()));
    }
    let (vals, v) = hermitian_decomposition(m)?;
    if let Some(&bad) = vals.iter().find(|l| !guard.contains(*l)) {
        return Err(Error::Singularity { eigenvalue: bad, domain: describe(&guard) });
    }
    let fv: Vec<f64> = vals.iter().map(|&l| f(l)).collect();
    let d = m.dim();
    // entrywise sum keeps (i,j) and (j,i) exact conjugates
    let out = Mat::from_fn(d, d, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..d {
            acc += v[(i, k)] * v[(j, k)].conj() * fv[k];
        }
        acc
    });
    Ok(OperatorMatrix { space: m.space, data: out })
}

/// Kronecker product field ⊗ mech in field-major order.
pub fn tensor(field_op: &OperatorMatrix, mech_op: &OperatorMatrix) -> Result<OperatorMatrix> {
    let (nf, nm) = match (field_op.space, mech_op.space) {
        (Space::Field { dim: a }, Space::Mech { dim: b }) => (a, b),
        (f, m) => {
            return Err(Error::Domain(format!("tensor expects (field, mech) operators, got ({f:?}, {m:?})")))
        }
    };
    let space = Space::Product { field: nf, mech: nm };
    Ok(OperatorMatrix::from_fn(space, |i, j| {
        field_op.data[(i / nm, j / nm)] * mech_op.data[(i % nm, j % nm)]
    }))
}
