//! Physical constants of the two-mode system and the run configuration.
//!
//! Everything is expressed in natural units: ħ = 1, unit effective mass and
//! a bare mechanical frequency Ω = 1. Energies are therefore in units of Ω
//! and the bare zero-point length is x_zpf = 1/√2.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonians::ModelKind;

/// Default per-mode cap on Fock truncations.
pub const DEFAULT_TRUNCATION_CAP: usize = 200;

/// Constants of an optomechanical setup with ω(x) = ω0 / (1 + x/L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    omega0: f64,
    omega: f64,
    g0: f64,
    x_zpf: f64,
    g: f64,
    length: f64,
    beta2: f64,
    hierarchy_violated: bool,
}

/// Derives every model constant from ω0/Ω and g0/Ω, with Ω = 1.
///
/// The hierarchy ω0 > Ω > g0 is only checked, never enforced.
pub fn derive_params(omega0_over_omega: f64, g0_over_omega: f64) -> Result<ModelParams> {
    if !(omega0_over_omega > 0.0 && omega0_over_omega.is_finite()) {
        return Err(Error::Domain(format!(
            "omega0/Omega must be positive and finite, got {omega0_over_omega}"
        )));
    }
    if !(g0_over_omega > 0.0 && g0_over_omega.is_finite()) {
        return Err(Error::Domain(format!(
            "g0/Omega must be positive and finite, got {g0_over_omega} \
             (use ModelParams::uncoupled for zero coupling)"
        )));
    }
    let omega = 1.0;
    let omega0 = omega0_over_omega * omega;
    let g0 = g0_over_omega * omega;
    let x_zpf = 1.0 / (2.0 * omega).sqrt();
    let g = g0 / x_zpf;
    let length = omega0 / g;
    let beta2 = 2.0 * g * g / omega0;
    let hierarchy_violated = !(omega0 > omega && omega > g0);
    if hierarchy_violated {
        warn!(
            "parameter hierarchy omega0 > Omega > g0 violated \
             (omega0 = {omega0}, Omega = {omega}, g0 = {g0})"
        );
    }
    Ok(ModelParams { omega0, omega, g0, x_zpf, g, length, beta2, hierarchy_violated })
}

impl ModelParams {
    /// Zero-coupling switch: G = 0 exactly, L = ∞, β² = 0.
    pub fn uncoupled(omega0_over_omega: f64) -> Result<Self> {
        if !(omega0_over_omega > 0.0 && omega0_over_omega.is_finite()) {
            return Err(Error::Domain(format!(
                "omega0/Omega must be positive and finite, got {omega0_over_omega}"
            )));
        }
        let omega = 1.0;
        Ok(ModelParams {
            omega0: omega0_over_omega,
            omega,
            g0: 0.0,
            x_zpf: 1.0 / (2.0 * omega).sqrt(),
            g: 0.0,
            length: f64::INFINITY,
            beta2: 0.0,
            hierarchy_violated: !(omega0_over_omega > omega),
        })
    }

    /// Bare cavity frequency ω0.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Bare mechanical frequency Ω (always 1).
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Vacuum coupling g0 = G·x_zpf.
    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn x_zpf(&self) -> f64 {
        self.x_zpf
    }

    /// Frequency pull parameter G = -ω'(0).
    pub fn g(&self) -> f64 {
        self.g
    }

    /// Bare cavity length L = ω0/G (infinite when uncoupled).
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Curvature constant β² = 2G²/ω0 = ω''(0).
    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn hierarchy_violated(&self) -> bool {
        self.hierarchy_violated
    }

    pub fn is_uncoupled(&self) -> bool {
        self.g == 0.0
    }

    /// x/L, evaluated as x·G/ω0 so that the uncoupled case gives exactly 0.
    pub fn relative_displacement(&self, x: f64) -> f64 {
        x * self.g / self.omega0
    }

    /// Cavity frequency ω(x) = ω0 / (1 + x/L).
    pub fn cavity_frequency(&self, x: f64) -> f64 {
        self.omega0 / (1.0 + self.relative_displacement(x))
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "omega0={} Omega={} g0={} x_zpf={} G={} L={} beta2={}",
            self.omega0, self.omega, self.g0, self.x_zpf, self.g, self.length, self.beta2
        )
    }
}

/// Fock-space truncation: photons 0..=n_max, phonons 0..=m_max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncationSpec {
    n_max: usize,
    m_max: usize,
}

impl TruncationSpec {
    pub fn new(n_max: usize, m_max: usize) -> Result<Self> {
        Self::with_cap(n_max, m_max, DEFAULT_TRUNCATION_CAP)
    }

    pub fn with_cap(n_max: usize, m_max: usize, cap: usize) -> Result<Self> {
        if n_max < 1 || m_max < 1 {
            return Err(Error::Domain(format!(
                "truncation indices must be at least 1, got n_max={n_max}, m_max={m_max}"
            )));
        }
        if n_max > cap || m_max > cap {
            return Err(Error::Resource(format!(
                "truncation ({n_max}, {m_max}) exceeds the per-mode cap {cap}"
            )));
        }
        Ok(TruncationSpec { n_max, m_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn mech_dim(&self) -> usize {
        self.m_max + 1
    }

    pub fn dim(&self) -> usize {
        self.field_dim() * self.mech_dim()
    }

    /// Product-space index of |n⟩|m⟩ in field-major order.
    pub fn index(&self, n: usize, m: usize) -> usize {
        debug_assert!(n <= self.n_max && m <= self.m_max);
        n * self.mech_dim() + m
    }

    /// Inverse of [`Self::index`].
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.mech_dim(), index % self.mech_dim())
    }
}

impl fmt::Display for TruncationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_max, self.m_max)
    }
}

impl FromStr for TruncationSpec {
    type Err = Error;

    /// Parses `"20x30"`.
    fn from_str(s: &str) -> Result<Self> {
        let (n, m) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Domain(format!("truncation '{s}' is not of the form NxM")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Domain(format!("truncation '{s}': {e}")))
        };
        TruncationSpec::new(parse(n)?, parse(m)?)
    }
}

/// Contents of a `key = value` run configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega0_over_omega: f64,
    pub g0_over_omega: f64,
    pub n_max: usize,
    pub m_max: usize,
    pub alpha: C64,
    pub t_max_periods: f64,
    pub t_steps: usize,
    pub models: Vec<ModelKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega0_over_omega: 100.0,
            g0_over_omega: 0.01,
            n_max: 20,
            m_max: 30,
            alpha: C64::new(2.0, 0.0),
            t_max_periods: 3.0,
            t_steps: 600,
            models: ModelKind::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn params(&self) -> Result<ModelParams> {
        derive_params(self.omega0_over_omega, self.g0_over_omega)
    }

    pub fn truncation(&self) -> Result<TruncationSpec> {
        TruncationSpec::new(self.n_max, self.m_max)
    }

    /// Uniform time grid over `t_max_periods` bare mechanical periods,
    /// both end points included.
    pub fn times(&self) -> Vec<f64> {
        let t_max = self.t_max_periods * 2.0 * std::f64::consts::PI;
        match self.t_steps {
            0 => Vec::new(),
            1 => vec![0.0],
            k => (0..k).map(|i| t_max * i as f64 / (k - 1) as f64).collect(),
        }
    }

    /// Canonical `key = value` rendering, also used for CSV metadata.
    pub fn to_config_string(&self) -> String {
        let models: Vec<&str> = self.models.iter().map(|m| m.name()).collect();
        format!(
            "omega0_over_Omega = {}\ng0_over_Omega = {}\nn_max = {}\nm_max = {}\n\
             alpha_re = {}\nalpha_im = {}\nt_max_periods = {}\nt_steps = {}\nmodels = {}\n",
            self.omega0_over_omega,
            self.g0_over_omega,
            self.n_max,
            self.m_max,
            self.alpha.re,
            self.alpha.im,
            self.t_max_periods,
            self.t_steps,
            models.join(","),
        )
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Config { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let real = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| bad(format!("{key}: cannot parse '{v}' as a number: {e}")))
            };
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| bad(format!("{key}: cannot parse '{v}' as an integer: {e}")))
            };
            match key {
                "omega0_over_Omega" => cfg.omega0_over_omega = real(value)?,
                "g0_over_Omega" => cfg.g0_over_omega = real(value)?,
                "n_max" => cfg.n_max = int(value)?,
                "m_max" => cfg.m_max = int(value)?,
                "alpha_re" => cfg.alpha.re = real(value)?,
                "alpha_im" => cfg.alpha.im = real(value)?,
                "t_max_periods" => cfg.t_max_periods = real(value)?,
                "t_steps" => cfg.t_steps = int(value)?,
                "models" => {
                    cfg.models = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<ModelKind>().map_err(|e| bad(e.to_string())))
                        .collect::<Result<_>>()?;
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }
}
