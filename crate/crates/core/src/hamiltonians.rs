//! Truncated matrices of the seven model Hamiltonians.
//!
//! Every model is stored split as H = D + C, where D is the exact bare
//! diagonal ω0(a†a+½) + Ω(b†b+½) and C collects the radiation-pressure
//! couplings. C is small compared with D, so energy offsets from the bare
//! levels can be resolved far below the rounding scale of ω0·n_max.
//!
//! The bare mechanical term p̂²/2 + Ω²x̂²/2 is taken as Ω(b†b+½), which equals
//! the product form on the truncated space except at the last phonon level.

use std::fmt;
use std::str::FromStr;

use crate::analytic;
use crate::error::{Error, Result};
use crate::fock::{self, apply_scalar_function, tensor, OperatorMatrix, Space};
use crate::params::{ModelParams, TruncationSpec};

/// Relative distance from x = −L below which ω(x̂) is refused.
pub const SINGULARITY_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// Linear model, ω(x) ≈ ω0 − Gx.
    Lin,
    /// Quadratic model, ω(x) ≈ ω0 − Gx + β²x²/2.
    Quad,
    /// Photon-controlled harmonic oscillator.
    NHat,
    /// Phenomenological model with the exact ω(x̂).
    Phen,
    /// First-order microscopic model (linear model plus counter-rotating term).
    Mic1,
    /// Second-order microscopic model.
    Mic2,
    /// Two-mode Law model, the benchmark.
    Mic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Lin,
        ModelKind::Quad,
        ModelKind::NHat,
        ModelKind::Phen,
        ModelKind::Mic1,
        ModelKind::Mic2,
        ModelKind::Mic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Lin => "lin",
            ModelKind::Quad => "quad",
            ModelKind::NHat => "nhat",
            ModelKind::Phen => "phen",
            ModelKind::Mic1 => "mic1",
            ModelKind::Mic2 => "mic2",
            ModelKind::Mic => "mic",
        }
    }

    /// Whether the model commutes with a†a.
    pub fn conserves_photon_number(&self) -> bool {
        matches!(self, ModelKind::Lin | ModelKind::Quad | ModelKind::NHat | ModelKind::Phen)
    }

    /// The closed-form solver for this model, if there is one.
    pub fn analytic(&self) -> Option<analytic::AnalyticModel> {
        match self {
            ModelKind::Lin => Some(analytic::AnalyticModel::Lin),
            ModelKind::Quad => Some(analytic::AnalyticModel::Quad),
            ModelKind::NHat => Some(analytic::AnalyticModel::NHat),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Domain(format!("unknown model '{s}' (expected one of lin, quad, nhat, phen, mic1, mic2, mic)")))
    }
}

/// A model Hamiltonian split into its bare diagonal and its coupling.
#[derive(Debug, Clone)]
pub struct ModelHamiltonian {
    kind: ModelKind,
    params: ModelParams,
    truncation: TruncationSpec,
    coupling: OperatorMatrix,
}

impl ModelHamiltonian {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn truncation(&self) -> TruncationSpec {
        self.truncation
    }

    /// C = H − D.
    pub fn coupling(&self) -> &OperatorMatrix {
        &self.coupling
    }

    /// Bare level (n+½)ω0 + (m+½)Ω.
    pub fn bare_level(&self, n: usize, m: usize) -> f64 {
        (n as f64 + 0.5) * self.params.omega0() + (m as f64 + 0.5) * self.params.omega()
    }

    /// D at product index `i` minus the bare level of |n⟩|m⟩, exactly.
    pub fn bare_offset(&self, i: usize, n: usize, m: usize) -> f64 {
        let (ni, mi) = self.truncation.split(i);
        (ni as f64 - n as f64) * self.params.omega0() + (mi as f64 - m as f64) * self.params.omega()
    }

    /// The full Hermitian matrix D + C.
    pub fn matrix(&self) -> OperatorMatrix {
        let t = self.truncation;
        let mut h = self.coupling.clone();
        let bare = OperatorMatrix::diagonal(self.coupling.space(), |i| {
            let (n, m) = t.split(i);
            self.bare_level(n, m)
        });
        h = &h + &bare;
        h
    }
}

/// Shared single-mode building blocks for one truncation.
struct Blocks {
    x: OperatorMatrix,
    x2: OperatorMatrix,
    half_number: OperatorMatrix,
    counter_rotating: OperatorMatrix,
    mech_id: OperatorMatrix,
}

impl Blocks {
    fn new(p: &ModelParams, t: TruncationSpec) -> Result<Self> {
        let x = fock::mech_position(t.m_max(), p.omega())?;
        let x2 = &x * &x;
        let a = fock::annihilation(t.field_dim())?;
        let half_number = fock::number(t.field_dim())?.shift(0.5);
        let a2 = &a * &a;
        let counter_rotating = &a2 + &a2.adjoint();
        let mech_id = OperatorMatrix::identity(x.space());
        Ok(Blocks { x, x2, half_number, counter_rotating, mech_id })
    }

    /// Coupling of the linear model: −G x̂ (a†a+½).
    fn linear(&self, p: &ModelParams) -> Result<OperatorMatrix> {
        tensor(&self.half_number, &self.x.scale(-p.g()))
    }

    /// Coupling of the quadratic model: (−G x̂ + β²x̂²/2)(a†a+½).
    fn quadratic(&self, p: &ModelParams) -> Result<OperatorMatrix> {
        let shift = &self.x.scale(-p.g()) + &self.x2.scale(0.5 * p.beta2());
        tensor(&self.half_number, &shift)
    }

    /// −(G x̂/2)(a² + a†²).
    fn first_order_counter_rotating(&self, p: &ModelParams) -> Result<OperatorMatrix> {
        tensor(&self.counter_rotating, &self.x.scale(-0.5 * p.g()))
    }
}

fn position_guard(p: &ModelParams) -> std::ops::RangeFrom<f64> {
    -p.length() * (1.0 - SINGULARITY_GUARD)..
}

/// δω(x̂) = ω(x̂) − ω0 = −ω0 u/(1+u) with u = x/L.
pub fn frequency_shift_operator(p: &ModelParams, x: &OperatorMatrix) -> Result<OperatorMatrix> {
    if p.is_uncoupled() {
        return Ok(OperatorMatrix::zeros(x.space()));
    }
    let w0 = p.omega0();
    apply_scalar_function(
        x,
        |v| {
            let u = p.relative_displacement(v);
            -w0 * u / (1.0 + u)
        },
        position_guard(p),
    )
}

/// λ(x̂) = (ω(x̂)² − ω0²)/(2ω0) = −ω0 u(2+u)/(2(1+u)²); ν(x̂) = ω0 + λ(x̂).
pub fn squeezing_operator(p: &ModelParams, x: &OperatorMatrix) -> Result<OperatorMatrix> {
    if p.is_uncoupled() {
        return Ok(OperatorMatrix::zeros(x.space()));
    }
    let w0 = p.omega0();
    apply_scalar_function(
        x,
        |v| {
            let u = p.relative_displacement(v);
            -w0 * u * (2.0 + u) / (2.0 * (1.0 + u) * (1.0 + u))
        },
        position_guard(p),
    )
}

fn nhat_coupling(p: &ModelParams, t: TruncationSpec, b: &Blocks) -> Result<OperatorMatrix> {
    let d = t.mech_dim();
    let space = Space::Product { field: t.field_dim(), mech: d };
    let omega2 = p.omega() * p.omega();
    let mut blocks = Vec::with_capacity(t.field_dim());
    for n in 0..t.field_dim() {
        // p²/2 + Ω_n²(x − x̄)²/2 + V_n(x̄) − bare
        let (x_bar, omega_n2, potential_shift) = analytic::nhat_sector(n as u64, p)?;
        let block = &(&b.x2.scale(0.5 * (omega_n2 - omega2)) - &b.x.scale(omega_n2 * x_bar))
            + &b.mech_id.scale(0.5 * omega_n2 * x_bar * x_bar + potential_shift);
        blocks.push(block);
    }
    Ok(OperatorMatrix::from_fn(space, |i, j| {
        let (ni, mi) = (i / d, i % d);
        let (nj, mj) = (j / d, j % d);
        if ni == nj {
            blocks[ni].get(mi, mj)
        } else {
            Default::default()
        }
    }))
}

/// Builds the split Hamiltonian of `kind`.
pub fn build_parts(kind: ModelKind, p: &ModelParams, t: TruncationSpec) -> Result<ModelHamiltonian> {
    let b = Blocks::new(p, t)?;
    let coupling = match kind {
        ModelKind::Lin => b.linear(p)?,
        ModelKind::Quad => b.quadratic(p)?,
        ModelKind::NHat => nhat_coupling(p, t, &b)?,
        ModelKind::Phen => tensor(&b.half_number, &frequency_shift_operator(p, &b.x)?)?,
        ModelKind::Mic1 => &b.linear(p)? + &b.first_order_counter_rotating(p)?,
        ModelKind::Mic2 => {
            let extra_detuning = tensor(&b.half_number, &b.x2.scale(0.25 * p.beta2()))?;
            &(&b.quadratic(p)? + &extra_detuning) + &b.first_order_counter_rotating(p)?
        }
        ModelKind::Mic => {
            // λ(x̂)(a†a+½) + λ(x̂)(a²+a†²)/2
            let field = &b.half_number + &b.counter_rotating.scale(0.5);
            tensor(&field, &squeezing_operator(p, &b.x)?)?
        }
    };
    Ok(ModelHamiltonian { kind, params: *p, truncation: t, coupling })
}

/// Hermitian matrix of `kind` on the product space.
pub fn build(kind: ModelKind, p: &ModelParams, t: TruncationSpec) -> Result<OperatorMatrix> {
    Ok(build_parts(kind, p, t)?.matrix())
}

/// Product-space operators used to measure states.
#[derive(Debug, Clone)]
pub struct Observables {
    pub truncation: TruncationSpec,
    /// x̂ ⊗ 1 acting on the mirror.
    pub position: OperatorMatrix,
    pub position_sq: OperatorMatrix,
    /// a ⊗ 1 of the fixed-frequency Fock basis.
    pub field: OperatorMatrix,
    pub number: OperatorMatrix,
}

impl Observables {
    pub fn new(p: &ModelParams, t: TruncationSpec) -> Result<Self> {
        let x = fock::mech_position(t.m_max(), p.omega())?;
        let field_id = OperatorMatrix::identity(Space::Field { dim: t.field_dim() });
        let mech_id = OperatorMatrix::identity(x.space());
        let position = tensor(&field_id, &x)?;
        let position_sq = tensor(&field_id, &(&x * &x))?;
        let field = tensor(&fock::annihilation(t.field_dim())?, &mech_id)?;
        let number = tensor(&fock::number(t.field_dim())?, &mech_id)?;
        Ok(Observables { truncation: t, position, position_sq, field, number })
    }
}
