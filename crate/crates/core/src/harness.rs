//! Model-versus-benchmark comparisons, truncation convergence scans and CSV
//! rendering.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::analytic;
use crate::error::{Error, Result};
use crate::hamiltonians::{build_parts, ModelKind, Observables};
use crate::params::{ModelParams, RunConfig, TruncationSpec};
use crate::solver::{self, coherent_vacuum_state, eigh, label_sectors, TimeSeries, SECTOR_MARGIN};

pub const BENCHMARK: ModelKind = ModelKind::Mic;
pub const DEFAULT_N_KEEP: usize = 10;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_CHECKPOINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    EnergyN0,
    XMean,
    XStd,
    XOfT,
    AOfT,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::EnergyN0 => "E_n0",
            Quantity::XMean => "x_mean",
            Quantity::XStd => "x_std",
            Quantity::XOfT => "x_of_t",
            Quantity::AOfT => "a_of_t",
        }
    }
}

/// Largest sector count the truncation can report, capped at the default.
pub fn n_keep_for(t: TruncationSpec) -> Result<usize> {
    t.n_max()
        .checked_sub(SECTOR_MARGIN)
        .map(|n| n.min(DEFAULT_N_KEEP))
        .ok_or_else(|| Error::Precondition(format!("truncation {t} is too small to report any photon sector")))
}

/// Lowest state of one photon sector, from a closed form or a diagonalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorRecord {
    pub n: usize,
    pub energy: f64,
    /// energy − [(n+½)ω0 + Ω/2]
    pub energy_shift: f64,
    pub x_mean: f64,
    pub x_std: f64,
    pub n_bar: f64,
    pub confidence: f64,
}

/// Sectors 0..=n_keep by numerical diagonalization of the truncated matrix.
pub fn numeric_spectrum(kind: ModelKind, p: &ModelParams, t: TruncationSpec, n_keep: usize) -> Result<Vec<SectorRecord>> {
    let h = build_parts(kind, p, t)?;
    let es = eigh(&h.matrix())?;
    let obs = Observables::new(p, t)?;
    Ok(label_sectors(&es, &h, &obs, n_keep)?
        .into_iter()
        .map(|s| SectorRecord {
            n: s.n,
            energy: s.e_n0,
            energy_shift: s.energy_shift,
            x_mean: s.x_mean,
            x_std: s.x_std,
            n_bar: s.n_bar,
            confidence: s.confidence,
        })
        .collect())
}

/// Sectors 0..=n_keep, using closed forms where the model has them.
pub fn model_spectrum(kind: ModelKind, p: &ModelParams, t: TruncationSpec, n_keep: usize) -> Result<Vec<SectorRecord>> {
    let Some(model) = kind.analytic() else {
        return numeric_spectrum(kind, p, t, n_keep);
    };
    if n_keep + SECTOR_MARGIN > t.n_max() {
        return Err(Error::Precondition(format!("n_keep {n_keep} exceeds the sector margin of truncation {t}")));
    }
    (0..=n_keep)
        .map(|n| {
            let d = analytic::spectrum(model, n as u64, 0, p)?;
            Ok(SectorRecord {
                n,
                energy: d.energy,
                energy_shift: d.energy_shift,
                x_mean: d.x_bar,
                x_std: d.delta_x,
                n_bar: n as f64,
                confidence: 0.0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub model: ModelKind,
    /// Photon sector or time-sample index.
    pub index: usize,
    pub error: f64,
}

/// |A − A_benchmark| per model and index; the benchmark has no rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub quantity: Quantity,
    pub benchmark: ModelKind,
    pub rows: Vec<ErrorRow>,
    pub params: ModelParams,
    pub truncation: TruncationSpec,
}

impl ErrorTable {
    fn new(quantity: Quantity, benchmark: ModelKind, p: &ModelParams, t: TruncationSpec) -> Self {
        ErrorTable { quantity, benchmark, rows: Vec::new(), params: *p, truncation: t }
    }

    pub fn models(&self) -> Vec<ModelKind> {
        let mut out: Vec<ModelKind> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model) {
                out.push(r.model);
            }
        }
        out
    }

    /// Errors of `model` in index order.
    pub fn errors(&self, model: ModelKind) -> Vec<f64> {
        self.rows.iter().filter(|r| r.model == model).map(|r| r.error).collect()
    }

    pub fn error(&self, model: ModelKind, index: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.model == model && r.index == index).map(|r| r.error)
    }

    /// Mean error of `model` over its rows; on a uniform time grid this is
    /// the time average.
    pub fn mean_error(&self, model: ModelKind) -> Option<f64> {
        let e = self.errors(model);
        (!e.is_empty()).then(|| e.iter().sum::<f64>() / e.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub energy: ErrorTable,
    pub x_mean: ErrorTable,
    pub x_std: ErrorTable,
}

/// Sector-wise errors of every model in `models` against the Law model.
pub fn compare_spectra(models: &[ModelKind], p: &ModelParams, t: TruncationSpec, n_keep: usize) -> Result<SpectrumComparison> {
    compare_spectra_against(models, BENCHMARK, p, t, n_keep)
}

pub fn compare_spectra_against(
    models: &[ModelKind],
    benchmark: ModelKind,
    p: &ModelParams,
    t: TruncationSpec,
    n_keep: usize,
) -> Result<SpectrumComparison> {
    let reference = model_spectrum(benchmark, p, t, n_keep)?;
    let mut out = SpectrumComparison {
        energy: ErrorTable::new(Quantity::EnergyN0, benchmark, p, t),
        x_mean: ErrorTable::new(Quantity::XMean, benchmark, p, t),
        x_std: ErrorTable::new(Quantity::XStd, benchmark, p, t),
    };
    for &kind in models.iter().filter(|k| **k != benchmark) {
        let records = model_spectrum(kind, p, t, n_keep)?;
        for (a, b) in records.iter().zip(&reference) {
            let row = |error| ErrorRow { model: kind, index: a.n, error };
            // shifts share the exact bare level, so their difference is the
            // energy difference without its rounding
            out.energy.rows.push(row((a.energy_shift - b.energy_shift).abs()));
            out.x_mean.rows.push(row((a.x_mean - b.x_mean).abs()));
            out.x_std.rows.push(row((a.x_std - b.x_std).abs()));
        }
    }
    Ok(out)
}

/// Evolution of |α⟩|0⟩ under one model.
#[derive(Debug, Clone)]
pub struct DynamicsRun {
    pub kind: ModelKind,
    pub series: TimeSeries,
    pub norm_deviation: Vec<f64>,
    pub tail_mass: f64,
}

pub fn run_dynamics(kind: ModelKind, p: &ModelParams, t: TruncationSpec, alpha: C64, times: &[f64]) -> Result<DynamicsRun> {
    let psi = coherent_vacuum_state(alpha, t)?;
    let h = build_parts(kind, p, t)?;
    let es = eigh(&h.matrix())?;
    let obs = Observables::new(p, t)?;
    let traj = solver::propagate(&es, &psi.amplitudes, times)?;
    let series = TimeSeries {
        times: traj.times().to_vec(),
        x_mean: traj.expectation(&obs.position).into_iter().map(|z| z.re).collect(),
        a_mean: traj.expectation(&obs.field),
        norm_drift: traj.norm_drift(),
    };
    Ok(DynamicsRun { kind, series, norm_deviation: traj.norm_deviation().to_vec(), tail_mass: psi.tail_mass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsComparison {
    pub times: Vec<f64>,
    pub x_of_t: ErrorTable,
    pub a_of_t: ErrorTable,
}

impl DynamicsComparison {
    pub fn time_averaged(&self, model: ModelKind, quantity: Quantity) -> Option<f64> {
        match quantity {
            Quantity::XOfT => self.x_of_t.mean_error(model),
            Quantity::AOfT => self.a_of_t.mean_error(model),
            _ => None,
        }
    }
}

/// Per-sample |⟨x(t)⟩ − ⟨x(t)⟩_mic| and |⟨a(t)⟩ − ⟨a(t)⟩_mic|.
pub fn compare_dynamics(
    models: &[ModelKind],
    p: &ModelParams,
    t: TruncationSpec,
    alpha: C64,
    times: &[f64],
) -> Result<DynamicsComparison> {
    let reference = run_dynamics(BENCHMARK, p, t, alpha, times)?.series;
    let mut out = DynamicsComparison {
        times: times.to_vec(),
        x_of_t: ErrorTable::new(Quantity::XOfT, BENCHMARK, p, t),
        a_of_t: ErrorTable::new(Quantity::AOfT, BENCHMARK, p, t),
    };
    for &kind in models.iter().filter(|k| **k != BENCHMARK) {
        let s = run_dynamics(kind, p, t, alpha, times)?.series;
        for j in 0..times.len() {
            let row = |error| ErrorRow { model: kind, index: j, error };
            out.x_of_t.rows.push(row((s.x_mean[j] - reference.x_mean[j]).abs()));
            out.a_of_t.rows.push(row((s.a_mean[j] - reference.a_mean[j]).norm()));
        }
    }
    Ok(out)
}

/// What a convergence scan compares between truncation rungs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanQuantity {
    /// Relative change of E_{n,0} for n = 0..=n_keep.
    Energies { n_keep: usize },
    /// Absolute change of ⟨x(t)⟩ at evenly spaced checkpoints on [0, t_max].
    Position { t_max: f64, checkpoints: usize },
}

impl ScanQuantity {
    pub fn name(&self) -> &'static str {
        match self {
            ScanQuantity::Energies { .. } => Quantity::EnergyN0.name(),
            ScanQuantity::Position { .. } => Quantity::XOfT.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStep {
    pub from: TruncationSpec,
    pub to: TruncationSpec,
    /// Largest change; +∞ when a rung cannot represent the quantity.
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub kind: ModelKind,
    pub quantity: ScanQuantity,
    pub ladder: Vec<TruncationSpec>,
    pub steps: Vec<ConvergenceStep>,
    pub tolerance: f64,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn max_change(&self) -> f64 {
        self.steps.iter().map(|s| s.change).fold(0.0, f64::max)
    }
}

enum RungValues {
    Energies(Vec<SectorRecord>),
    Position(Vec<f64>),
}

fn rung_values(kind: ModelKind, p: &ModelParams, alpha: C64, q: ScanQuantity, t: TruncationSpec) -> Result<Option<RungValues>> {
    let result = match q {
        ScanQuantity::Energies { n_keep } => numeric_spectrum(kind, p, t, n_keep).map(RungValues::Energies),
        ScanQuantity::Position { t_max, checkpoints } => {
            let times = checkpoint_times(t_max, checkpoints);
            run_dynamics(kind, p, t, alpha, &times).map(|r| RungValues::Position(r.series.x_mean))
        }
    };
    match result {
        Ok(v) => Ok(Some(v)),
        // the rung is too small for the requested sectors or state
        Err(Error::Precondition(msg)) | Err(Error::Labeling(msg)) => {
            log::warn!("{kind} at {t}: {msg}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn checkpoint_times(t_max: f64, checkpoints: usize) -> Vec<f64> {
    match checkpoints {
        0 => Vec::new(),
        1 => vec![0.0],
        k => (0..k).map(|i| t_max * i as f64 / (k - 1) as f64).collect(),
    }
}

/// Parses a ladder such as "20x30,30x45,40x60".
pub fn parse_ladder(s: &str) -> Result<Vec<TruncationSpec>> {
    s.split(',').map(|r| r.trim().parse()).collect()
}

/// Changes of `quantity` between consecutive truncation rungs.
pub fn convergence_scan(
    kind: ModelKind,
    p: &ModelParams,
    alpha: C64,
    quantity: ScanQuantity,
    ladder: &[TruncationSpec],
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if ladder.len() < 2 {
        return Err(Error::Precondition("a convergence ladder needs at least two rungs".into()));
    }
    if ladder.windows(2).any(|w| w[1].n_max() <= w[0].n_max() || w[1].m_max() <= w[0].m_max()) {
        return Err(Error::Precondition("ladder rungs must increase in both n_max and m_max".into()));
    }
    let values: Vec<Option<RungValues>> =
        ladder.iter().map(|&t| rung_values(kind, p, alpha, quantity, t)).collect::<Result<_>>()?;
    let steps: Vec<ConvergenceStep> = ladder
        .windows(2)
        .zip(values.windows(2))
        .map(|(rungs, v)| {
            let change = match (&v[0], &v[1]) {
                (Some(RungValues::Energies(a)), Some(RungValues::Energies(b))) => a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x.energy_shift - y.energy_shift).abs() / y.energy.abs())
                    .fold(0.0, f64::max),
                (Some(RungValues::Position(a)), Some(RungValues::Position(b))) => {
                    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
                }
                _ => f64::INFINITY,
            };
            ConvergenceStep { from: rungs[0], to: rungs[1], change }
        })
        .collect();
    let converged = steps.iter().all(|s| s.change < tolerance);
    Ok(ConvergenceReport { kind, quantity, ladder: ladder.to_vec(), steps, tolerance, converged })
}

/// CSV text with `#` metadata lines. Floats carry 17 significant digits.
pub mod csv {
    use super::*;

    pub fn float(x: f64) -> String {
        format!("{x:.16e}")
    }

    fn header(cfg: &RunConfig, extra: &[(&str, String)]) -> String {
        let mut out = format!("# {} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
        for line in cfg.to_config_string().lines() {
            let _ = writeln!(out, "# {line}");
        }
        if let Ok(p) = cfg.params() {
            let _ = writeln!(out, "# G = {}", float(p.g()));
            let _ = writeln!(out, "# L = {}", float(p.length()));
            let _ = writeln!(out, "# beta2 = {}", float(p.beta2()));
        }
        for (k, v) in extra {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    pub fn spectrum(cfg: &RunConfig, kind: ModelKind, records: &[SectorRecord]) -> String {
        let mut out = header(cfg, &[("model", kind.name().to_string())]);
        out.push_str("n,m,energy,x_mean,x_std,n_bar,confidence\n");
        for r in records {
            let _ = writeln!(
                out,
                "{},0,{},{},{},{},{}",
                r.n,
                float(r.energy),
                float(r.x_mean),
                float(r.x_std),
                float(r.n_bar),
                float(r.confidence)
            );
        }
        out
    }

    pub fn dynamics(cfg: &RunConfig, run: &DynamicsRun) -> String {
        let mut out = header(
            cfg,
            &[("model", run.kind.name().to_string()), ("coherent_tail_mass", float(run.tail_mass))],
        );
        out.push_str("t,x_mean,a_re,a_im,a_abs,norm_drift\n");
        let s = &run.series;
        for j in 0..s.times.len() {
            let a = s.a_mean[j];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                float(s.times[j]),
                float(s.x_mean[j]),
                float(a.re),
                float(a.im),
                float(a.norm()),
                float(run.norm_deviation[j])
            );
        }
        out
    }

    pub fn compare_spectrum(cfg: &RunConfig, cmp: &SpectrumComparison) -> String {
        let mut out = header(cfg, &[("benchmark", cmp.energy.benchmark.name().to_string())]);
        out.push_str("model,n,err_E,err_x,err_dx\n");
        for ((e, x), dx) in cmp.energy.rows.iter().zip(&cmp.x_mean.rows).zip(&cmp.x_std.rows) {
            let _ = writeln!(out, "{},{},{},{},{}", e.model, e.index, float(e.error), float(x.error), float(dx.error));
        }
        out
    }

    pub fn compare_dynamics(cfg: &RunConfig, cmp: &DynamicsComparison) -> String {
        let mut out = header(cfg, &[("benchmark", cmp.x_of_t.benchmark.name().to_string())]);
        for model in cmp.x_of_t.models() {
            let _ = writeln!(
                out,
                "# time_average {model}: err_x = {}, err_a = {}",
                float(cmp.x_of_t.mean_error(model).unwrap_or(f64::NAN)),
                float(cmp.a_of_t.mean_error(model).unwrap_or(f64::NAN))
            );
        }
        out.push_str("model,t,err_x,err_a\n");
        for (x, a) in cmp.x_of_t.rows.iter().zip(&cmp.a_of_t.rows) {
            let _ = writeln!(out, "{},{},{},{}", x.model, float(cmp.times[x.index]), float(x.error), float(a.error));
        }
        out
    }

    pub fn converge(cfg: &RunConfig, reports: &[ConvergenceReport]) -> String {
        let kind = reports.first().map(|r| r.kind.name()).unwrap_or("");
        let mut out = header(cfg, &[("model", kind.to_string())]);
        out.push_str("quantity,from,to,change,tolerance,converged\n");
        for r in reports {
            for s in &r.steps {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.quantity.name(),
                    s.from,
                    s.to,
                    float(s.change),
                    float(r.tolerance),
                    s.change < r.tolerance
                );
            }
        }
        out
    }
}
