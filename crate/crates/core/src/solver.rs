//! Eigensolutions, photon-sector labeling and spectral time evolution.

use faer::Mat;
use log::warn;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{hermitian_decomposition, OperatorMatrix};
use crate::hamiltonians::{ModelHamiltonian, Observables};
use crate::params::TruncationSpec;

/// Residual bound relative to the spectral range.
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
pub const NORM_DRIFT_TOL: f64 = 1e-10;
/// Sectors within this many photons of n_max are never reported.
pub const SECTOR_MARGIN: usize = 5;
pub const CONFIDENCE_WARN: f64 = 0.1;
pub const CONFIDENCE_REJECT: f64 = 0.5;
/// Largest discarded coherent-state weight that is accepted.
pub const COHERENT_TAIL_TOL: f64 = 1e-8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Ascending eigenvalues with orthonormal eigenvectors in the columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    vectors: Mat<C64>,
    /// Same vectors when every component is real, for cheaper products.
    real: Option<Mat<f64>>,
    residual: f64,
    orthonormality: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.vectors[(i, k)]).collect()
    }

    /// max_k ‖H v_k − λ_k v_k‖.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// ‖V†V − I‖_max.
    pub fn orthonormality(&self) -> f64 {
        self.orthonormality
    }

    pub fn spectral_range(&self) -> f64 {
        let (lo, hi) = (self.eigenvalues[0], self.eigenvalues[self.dim() - 1]);
        hi - lo
    }

    /// V†ψ.
    fn project(&self, psi: &[C64]) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .map(|k| (0..d).map(|i| self.vectors[(i, k)].conj() * psi[i]).sum())
            .collect()
    }

    /// V·C for a complex matrix C.
    fn combine(&self, c: &Mat<C64>) -> Mat<C64> {
        match &self.real {
            Some(v) => real_times_complex(v, c),
            None => &self.vectors * c,
        }
    }
}

fn split(c: &Mat<C64>) -> (Mat<f64>, Mat<f64>) {
    (
        Mat::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)].re),
        Mat::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)].im),
    )
}

fn real_times_complex(a: &Mat<f64>, c: &Mat<C64>) -> Mat<C64> {
    let (re, im) = split(c);
    let (pr, pi) = (a * &re, a * &im);
    Mat::from_fn(pr.nrows(), pr.ncols(), |i, j| C64::new(pr[(i, j)], pi[(i, j)]))
}

fn real_matrix(op: &OperatorMatrix) -> Option<Mat<f64>> {
    op.is_real().then(|| Mat::from_fn(op.dim(), op.dim(), |i, j| op.get(i, j).re))
}

/// Full eigendecomposition of a Hermitian operator.
///
/// Eigenvectors follow a fixed phase: the first component with modulus above
/// 1e-12 is real and positive.
pub fn eigh(h: &OperatorMatrix) -> Result<EigenSystem> {
    if !h.is_hermitian() {
        return Err(Error::Precondition(format!(
            "eigh needs a Hermitian matrix (defect {:e})",
            h.hermiticity_defect()
        )));
    }
    let d = h.dim();
    let (vals, raw) = hermitian_decomposition(h)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| vals[k]).collect();

    let phases: Vec<C64> = order
        .iter()
        .map(|&k| {
            (0..d)
                .map(|i| raw[(i, k)])
                .find(|z| z.norm() > 1e-12)
                .map(|z| z.conj() / z.norm())
                .unwrap_or(C64::new(1.0, 0.0))
        })
        .collect();
    let vectors = Mat::from_fn(d, d, |i, j| raw[(i, order[j])] * phases[j]);
    let real = h
        .is_real()
        .then(|| Mat::from_fn(d, d, |i, j| vectors[(i, j)].re))
        .filter(|_| (0..d).all(|j| (0..d).all(|i| vectors[(i, j)].im.abs() <= f64::EPSILON)));

    let (residual, orthonormality) = match (&real, real_matrix(h)) {
        (Some(v), Some(hr)) => {
            let r = &(&hr * v) - &Mat::from_fn(d, d, |i, j| v[(i, j)] * eigenvalues[j]);
            let g = &v.transpose().to_owned() * v;
            let res = (0..d)
                .map(|j| (0..d).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let orth = (0..d)
                .flat_map(|j| (0..d).map(move |i| (i, j)))
                .map(|(i, j)| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max);
            (res, orth)
        }
        _ => {
            let hv = h.mat() * &vectors;
            let g = &vectors.adjoint().to_owned() * &vectors;
            let res = (0..d)
                .map(|j| {
                    (0..d)
                        .map(|i| (hv[(i, j)] - vectors[(i, j)] * eigenvalues[j]).norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            let orth = (0..d)
                .flat_map(|j| (0..d).map(move |i| (i, j)))
                .map(|(i, j)| (g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { ZERO }).norm())
                .fold(0.0, f64::max);
            (res, orth)
        }
    };

    let range = eigenvalues[d - 1] - eigenvalues[0];
    let scale = if range > 0.0 { range } else { eigenvalues.iter().fold(1.0f64, |a, l| a.max(l.abs())) };
    if residual > RESIDUAL_TOL * scale || orthonormality > ORTHONORMALITY_TOL {
        return Err(Error::Numerical(format!(
            "eigensolver accuracy: residual {residual:e} (bound {:e}), orthonormality {orthonormality:e} (bound {ORTHONORMALITY_TOL:e})",
            RESIDUAL_TOL * scale
        )));
    }
    Ok(EigenSystem { eigenvalues, vectors, real, residual, orthonormality })
}

/// Observables of the lowest eigenstate in one effective photon sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorObservables {
    pub n: usize,
    pub e_n0: f64,
    /// E_{n,0} − [(n+½)ω0 + Ω/2], resolved below the rounding scale of E_{n,0}.
    pub energy_shift: f64,
    pub x_mean: f64,
    pub x_std: f64,
    pub n_bar: f64,
    /// |n − n̄|.
    pub confidence: f64,
    /// Index of the eigenvector in the EigenSystem.
    pub index: usize,
}

/// ⟨v|x̂|v⟩ and Δx for a normalized `v`.
pub fn eigenstate_observables(v: &[C64], x_op: &OperatorMatrix, x2_op: &OperatorMatrix) -> Result<(f64, f64)> {
    let mean = x_op.expect(v).re;
    let radicand = x2_op.expect(v).re - mean * mean;
    if radicand < -1e-12 {
        return Err(Error::Numerical(format!("negative position variance {radicand:e}")));
    }
    if radicand < 0.0 {
        warn!("position variance {radicand:e} clipped to zero");
    }
    Ok((mean, radicand.max(0.0).sqrt()))
}

fn photon_mean(v: &[C64], t: TruncationSpec) -> f64 {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    v.iter().enumerate().map(|(i, z)| z.norm_sqr() * t.split(i).0 as f64).sum::<f64>() / norm
}

/// Rayleigh quotient of H − bare(n, 0), computed from the split Hamiltonian.
pub fn energy_shift(h: &ModelHamiltonian, v: &[C64], n: usize) -> f64 {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let bare: f64 = v.iter().enumerate().map(|(i, z)| z.norm_sqr() * h.bare_offset(i, n, 0)).sum();
    (bare + h.coupling().expect(v).re) / norm
}

/// Groups eigenvectors by the integer closest to ⟨a†a⟩ and measures the
/// lowest state of each sector n = 0..=n_keep.
pub fn label_sectors(
    es: &EigenSystem,
    h: &ModelHamiltonian,
    obs: &Observables,
    n_keep: usize,
) -> Result<Vec<SectorObservables>> {
    let t = h.truncation();
    if n_keep + SECTOR_MARGIN > t.n_max() {
        return Err(Error::Precondition(format!(
            "n_keep {n_keep} leaves less than {SECTOR_MARGIN} photons of margin below n_max {}",
            t.n_max()
        )));
    }
    let mut lowest: Vec<Option<(usize, f64)>> = vec![None; n_keep + 1];
    for k in 0..es.dim() {
        if lowest.iter().all(Option::is_some) {
            break;
        }
        let v = es.eigenvector(k);
        let n_bar = photon_mean(&v, t);
        let n = n_bar.round();
        let confidence = (n - n_bar).abs();
        if n < 0.0 || n as usize > n_keep || lowest[n as usize].is_some() {
            continue;
        }
        if confidence >= CONFIDENCE_REJECT {
            warn!("{}: eigenvector {k} has n̄ = {n_bar}, rejected", h.kind());
            continue;
        }
        lowest[n as usize] = Some((k, n_bar));
    }

    let params = h.params();
    let mut out = Vec::with_capacity(n_keep + 1);
    for (n, slot) in lowest.into_iter().enumerate() {
        let (k, n_bar) = slot.ok_or_else(|| {
            Error::Labeling(format!(
                "{}: no eigenvector rounds to photon sector {n} at truncation {t}",
                h.kind()
            ))
        })?;
        let v = es.eigenvector(k);
        let confidence = (n as f64 - n_bar).abs();
        if confidence >= CONFIDENCE_WARN {
            warn!("{}: sector {n} labeled with n̄ = {n_bar}", h.kind());
        }
        let (x_mean, x_std) = eigenstate_observables(&v, &obs.position, &obs.position_sq)?;
        let shift = energy_shift(h, &v, n);
        let bare = (n as f64 + 0.5) * params.omega0() + 0.5 * params.omega();
        out.push(SectorObservables {
            n,
            e_n0: bare + shift,
            energy_shift: shift,
            x_mean,
            x_std,
            n_bar,
            confidence,
            index: k,
        });
    }
    Ok(out)
}

/// Normalized state with the discarded truncation weight.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub amplitudes: Vec<C64>,
    /// Coherent-state probability above n_max, before renormalization.
    pub tail_mass: f64,
}

/// |α⟩ ⊗ |0⟩ on the product space, truncated at n_max and renormalized.
pub fn coherent_vacuum_state(alpha: C64, t: TruncationSpec) -> Result<PreparedState> {
    let a2 = alpha.norm_sqr();
    if !a2.is_finite() || a2 > t.n_max() as f64 / 2.0 {
        return Err(Error::Precondition(format!(
            "|alpha|^2 = {a2} exceeds n_max/2 = {}; increase n_max",
            t.n_max() as f64 / 2.0
        )));
    }
    let mut field = Vec::with_capacity(t.field_dim());
    let mut c = C64::new((-a2 / 2.0).exp(), 0.0);
    for n in 0..t.field_dim() {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        field.push(c);
    }
    // Poisson tail Σ_{k>n_max} e^{-|α|²}|α|^{2k}/k!
    let mut term = field[t.n_max()].norm_sqr();
    let mut tail_mass = 0.0;
    for k in t.field_dim().. {
        term *= a2 / k as f64;
        tail_mass += term;
        if term <= 1e-30 * tail_mass || term == 0.0 {
            break;
        }
    }
    if tail_mass > COHERENT_TAIL_TOL {
        return Err(Error::Precondition(format!(
            "coherent tail above n_max is {tail_mass:e} (> {COHERENT_TAIL_TOL:e}); increase n_max"
        )));
    }
    let norm = field.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut amplitudes = vec![ZERO; t.dim()];
    for (n, z) in field.iter().enumerate() {
        amplitudes[t.index(n, 0)] = z / norm;
    }
    Ok(PreparedState { amplitudes, tail_mass })
}

/// ⟨x̂(t)⟩, ⟨a(t)⟩ and the largest norm deviation along the run.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub a_mean: Vec<C64>,
    pub norm_drift: f64,
}

/// States ψ(t_j) = V e^{−iΛt_j} V†ψ0 as matrix columns.
pub struct Trajectory {
    times: Vec<f64>,
    states: Mat<C64>,
    norm_deviation: Vec<f64>,
    norm_drift: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    /// |‖ψ(t_j)‖ − 1| per sample.
    pub fn norm_deviation(&self) -> &[f64] {
        &self.norm_deviation
    }

    pub fn state(&self, j: usize) -> Vec<C64> {
        (0..self.states.nrows()).map(|i| self.states[(i, j)]).collect()
    }

    /// ⟨ψ(t_j)|O|ψ(t_j)⟩ for every sample.
    pub fn expectation(&self, op: &OperatorMatrix) -> Vec<C64> {
        assert_eq!(op.dim(), self.states.nrows(), "operator and state dimensions differ");
        let applied = match real_matrix(op) {
            Some(o) => real_times_complex(&o, &self.states),
            None => op.mat() * &self.states,
        };
        (0..self.states.ncols())
            .map(|j| (0..self.states.nrows()).map(|i| self.states[(i, j)].conj() * applied[(i, j)]).sum())
            .collect()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Precondition("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Propagates `psi0` with the spectral propagator of `es`.
pub fn propagate(es: &EigenSystem, psi0: &[C64], times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    if psi0.len() != es.dim() {
        return Err(Error::Precondition(format!("state has {} components, expected {}", psi0.len(), es.dim())));
    }
    let norm0 = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm0 - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("initial state norm {norm0} is not 1")));
    }
    let c = es.project(psi0);
    let phases = Mat::from_fn(es.dim(), times.len(), |k, j| {
        c[k] * C64::from_polar(1.0, -es.eigenvalues[k] * times[j])
    });
    let states = es.combine(&phases);
    let norm_deviation: Vec<f64> = (0..times.len())
        .map(|j| ((0..es.dim()).map(|i| states[(i, j)].norm_sqr()).sum::<f64>().sqrt() - 1.0).abs())
        .collect();
    let norm_drift = norm_deviation.iter().copied().fold(0.0, f64::max);
    if norm_drift > NORM_DRIFT_TOL {
        return Err(Error::Numerical(format!("norm drift {norm_drift:e} exceeds {NORM_DRIFT_TOL:e}")));
    }
    Ok(Trajectory { times: times.to_vec(), states, norm_deviation, norm_drift })
}

/// ⟨x̂(t)⟩ and ⟨a(t)⟩ along the spectral propagation of `psi0`.
pub fn evolve(es: &EigenSystem, psi0: &[C64], times: &[f64], obs: &Observables) -> Result<TimeSeries> {
    let traj = propagate(es, psi0, times)?;
    Ok(TimeSeries {
        times: traj.times.clone(),
        x_mean: traj.expectation(&obs.position).into_iter().map(|z| z.re).collect(),
        a_mean: traj.expectation(&obs.field),
        norm_drift: traj.norm_drift,
    })
}

/// Tr ρ_field² of a product-space state.
pub fn field_purity(psi: &[C64], t: TruncationSpec) -> f64 {
    let (nf, nm) = (t.field_dim(), t.mech_dim());
    let rho = Mat::from_fn(nf, nf, |n, k| (0..nm).map(|m| psi[t.index(n, m)] * psi[t.index(k, m)].conj()).sum::<C64>());
    let trace: f64 = (0..nf).map(|n| rho[(n, n)].re).sum();
    let sq: f64 = (0..nf).flat_map(|n| (0..nf).map(move |k| (n, k))).map(|(n, k)| rho[(n, k)].norm_sqr()).sum();
    sq / (trace * trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::fock::Space;
    use crate::hamiltonians::{build_parts, ModelKind};
    use crate::params::{derive_params, ModelParams};

    fn standard() -> ModelParams {
        derive_params(100.0, 0.01).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn diagonal_matrix_sorts_and_permutes() {
        let diag = [3.0, -1.0, 2.0, 0.5];
        let h = OperatorMatrix::diagonal(Space::Mech { dim: 4 }, |i| diag[i]);
        let es = eigh(&h).unwrap();
        assert_eq!(es.eigenvalues(), &[-1.0, 0.5, 2.0, 3.0]);
        let perm = [1, 3, 2, 0];
        for (k, &p) in perm.iter().enumerate() {
            let v = es.eigenvector(k);
            for (i, z) in v.iter().enumerate() {
                assert_eq!(*z, C64::new(if i == p { 1.0 } else { 0.0 }, 0.0));
            }
        }
    }

    #[test]
    fn phase_convention_and_complex_path() {
        // σ_y has complex eigenvectors
        let h = OperatorMatrix::from_fn(Space::Field { dim: 2 }, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => ZERO,
        });
        let es = eigh(&h).unwrap();
        assert!((es.eigenvalues()[0] + 1.0).abs() < 1e-14);
        for k in 0..2 {
            let v = es.eigenvector(k);
            assert!(v[0].im == 0.0 && v[0].re > 0.0);
        }
        assert!(es.residual() < 1e-14 && es.orthonormality() < 1e-14);
    }

    #[test]
    fn non_hermitian_is_refused() {
        let h = OperatorMatrix::from_real_fn(Space::Mech { dim: 2 }, |i, j| (i + 2 * j) as f64);
        assert!(matches!(eigh(&h), Err(Error::Precondition(_))));
    }

    #[test]
    fn lin_lowest_eigenvalues_match_closed_form() {
        let p = standard();
        let t = TruncationSpec::new(20, 30).unwrap();
        let h = build_parts(ModelKind::Lin, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let mut exact: Vec<(f64, u64)> = (0..=20u64)
            .flat_map(|n| (0..=30u64).map(move |m| (n, m)))
            .map(|(n, m)| (analytic::lin_energy(n, m, &p).energy, m))
            .collect();
        exact.sort_by(|a, b| a.0.total_cmp(&b.0));
        // phonon levels at the truncation edge are polluted, like photon sectors
        for &(e, m) in exact.iter().take(50).filter(|(_, m)| *m as usize + SECTOR_MARGIN <= 30) {
            let best = es.eigenvalues().iter().map(|l| rel(*l, e)).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "m={m}: {best:e}");
        }
    }

    #[test]
    fn nhat_matrix_matches_analytic_spectrum() {
        let p = standard();
        let t = TruncationSpec::new(12, 30).unwrap();
        let h = build_parts(ModelKind::NHat, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        for n in 0..=10u64 {
            for m in 0..=10u64 {
                let e = analytic::nhat_spectrum(n, m, &p).unwrap().energy;
                let best = es.eigenvalues().iter().map(|l| rel(*l, e)).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8, "n={n} m={m}: {best:e}");
            }
        }
    }

    #[test]
    fn sectors_of_number_conserving_model_are_exact() {
        let (p, t) = (standard(), TruncationSpec::new(12, 20).unwrap());
        let h = build_parts(ModelKind::Phen, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        let sectors = label_sectors(&es, &h, &obs, 7).unwrap();
        assert_eq!(sectors.len(), 8);
        for s in &sectors {
            assert!(s.confidence < 1e-10, "{s:?}");
            assert!(s.x_std > 0.0);
        }
        // x̄ grows with n while the uncertainty shrinks
        for w in sectors.windows(2) {
            assert!(w[1].x_mean > w[0].x_mean && w[1].x_std < w[0].x_std);
        }
        // Phen n=0 width against the photon-controlled oscillator
        let d = (sectors[0].x_std - analytic::nhat_spectrum(0, 0, &p).unwrap().delta_x).abs();
        assert!(d < 1e-9, "{d:e}");
    }

    #[test]
    fn lin_ground_sector_observables() {
        let p = standard();
        let t = TruncationSpec::new(8, 20).unwrap();
        let h = build_parts(ModelKind::Lin, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        let s = label_sectors(&es, &h, &obs, 3).unwrap();
        assert!((s[0].x_mean - p.g() / 2.0).abs() < 1e-8);
        for n in 0..=3 {
            let want = analytic::lin_energy(n as u64, 0, &p).energy_shift;
            assert!((s[n].energy_shift - want).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn uncoupled_observables() {
        let p = ModelParams::uncoupled(100.0).unwrap();
        let t = TruncationSpec::new(6, 10).unwrap();
        let h = build_parts(ModelKind::Mic, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        let s = label_sectors(&es, &h, &obs, 1).unwrap();
        assert!(s[0].x_mean.abs() < 1e-14);
        assert!((s[0].x_std - p.x_zpf()).abs() < 1e-14);
    }

    #[test]
    fn mic_sectors_are_confident() {
        let p = standard();
        let t = TruncationSpec::new(20, 30).unwrap();
        let h = build_parts(ModelKind::Mic, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        for s in label_sectors(&es, &h, &obs, 10).unwrap() {
            assert!(s.confidence < 0.05, "{s:?}");
        }
    }

    #[test]
    fn margin_and_empty_sectors() {
        let p = standard();
        let t = TruncationSpec::new(8, 6).unwrap();
        let h = build_parts(ModelKind::Lin, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        assert!(matches!(label_sectors(&es, &h, &obs, 4), Err(Error::Precondition(_))));
        assert!(label_sectors(&es, &h, &obs, 3).is_ok());
    }

    fn worst_confidence(omega0: f64) -> Result<f64> {
        let p = derive_params(omega0, 0.1)?;
        let t = TruncationSpec::new(10, 20)?;
        let h = build_parts(ModelKind::Mic, &p, t)?;
        let es = eigh(&h.matrix())?;
        let obs = Observables::new(&p, t)?;
        let s = label_sectors(&es, &h, &obs, 5)?;
        Ok(s.iter().map(|r| r.confidence).fold(0.0, f64::max))
    }

    #[test]
    fn confidence_degrades_as_hierarchy_breaks() {
        let good = worst_confidence(100.0).unwrap();
        assert!(good < 1e-3, "{good:e}");
        match worst_confidence(1.0) {
            Err(Error::Labeling(_)) => {}
            Ok(bad) => assert!(bad > 100.0 * good, "{bad:e} vs {good:e}"),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn coherent_state_examples() {
        let t = TruncationSpec::new(20, 4).unwrap();
        let vac = coherent_vacuum_state(ZERO, t).unwrap();
        assert_eq!(vac.amplitudes[0], C64::new(1.0, 0.0));
        assert_eq!(vac.tail_mass, 0.0);

        let s = coherent_vacuum_state(C64::new(2.0, 0.0), t).unwrap();
        assert!(s.tail_mass > 1e-9 && s.tail_mass < COHERENT_TAIL_TOL, "{:e}", s.tail_mass);
        // independent oracle: 1 − Σ_{n≤20} Poisson(4)
        let mut p = (-4.0f64).exp();
        let mut head = p;
        for n in 1..=20 {
            p *= 4.0 / n as f64;
            head += p;
        }
        assert!((s.tail_mass - (1.0 - head)).abs() < 1e-14);
        let norm: f64 = s.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        assert!((photon_mean(&s.amplitudes, t) - 4.0).abs() < 1e-7);

        assert!(matches!(coherent_vacuum_state(C64::new(4.0, 0.0), t), Err(Error::Precondition(_))));
    }

    fn lin_run(times: &[f64]) -> (TruncationSpec, Trajectory, Observables) {
        let p = standard();
        let t = TruncationSpec::new(20, 30).unwrap();
        let h = build_parts(ModelKind::Lin, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let psi = coherent_vacuum_state(C64::new(2.0, 0.0), t).unwrap();
        (t, propagate(&es, &psi.amplitudes, times).unwrap(), Observables::new(&p, t).unwrap())
    }

    #[test]
    fn lin_dynamics_matches_displaced_oscillator() {
        let pi = std::f64::consts::PI;
        let times: Vec<f64> = (0..=24).map(|k| k as f64 * pi / 8.0).collect();
        let (t, traj, obs) = lin_run(&times);
        let g = standard().g();
        // truncated ⟨a†a⟩ stands in for |α|²
        let n_mean = photon_mean(&traj.state(0), t);
        let x = traj.expectation(&obs.position);
        for (j, tj) in times.iter().enumerate() {
            let want = g * (n_mean + 0.5) * (1.0 - tj.cos());
            assert!((x[j].re - want).abs() < 1e-6, "t={tj}");
        }
        assert!((x[8].re - 0.12728).abs() < 1e-5);
        assert!(traj.norm_drift() <= NORM_DRIFT_TOL);
    }

    #[test]
    fn lin_disentangles_after_one_period() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let (t, traj, _) = lin_run(&[0.0, two_pi / 2.0, two_pi]);
        assert!((field_purity(&traj.state(0), t) - 1.0).abs() < 1e-12);
        assert!(field_purity(&traj.state(1), t) < 1.0 - 1e-6);
        assert!((field_purity(&traj.state(2), t) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn start_time_reproduces_initial_expectations() {
        let p = standard();
        let t = TruncationSpec::new(14, 12).unwrap();
        let h = build_parts(ModelKind::Mic, &p, t).unwrap();
        let es = eigh(&h.matrix()).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        let psi = coherent_vacuum_state(C64::new(1.0, 0.5), t).unwrap();
        let ts = evolve(&es, &psi.amplitudes, &[0.0, 1.0], &obs).unwrap();
        assert!((ts.a_mean[0] - obs.field.expect(&psi.amplitudes)).norm() < 1e-12);
        assert!(ts.x_mean[0].abs() < 1e-12);
    }

    #[test]
    fn photon_number_constancy_dichotomy() {
        let p = standard();
        let t = TruncationSpec::new(18, 16).unwrap();
        let obs = Observables::new(&p, t).unwrap();
        let psi = coherent_vacuum_state(C64::new(1.5, 0.0), t).unwrap();
        let times: Vec<f64> = (0..30).map(|k| 0.3 * k as f64).collect();
        for kind in [ModelKind::Phen, ModelKind::Mic] {
            let h = build_parts(kind, &p, t).unwrap();
            let hm = h.matrix();
            let es = eigh(&hm).unwrap();
            let traj = propagate(&es, &psi.amplitudes, &times).unwrap();
            let n = traj.expectation(&obs.number);
            let e = traj.expectation(&hm);
            let spread = |v: &[C64]| v.iter().map(|z| (z.re - v[0].re).abs()).fold(0.0, f64::max);
            assert!(spread(&e) <= 1e-10 * e[0].re.abs());
            if kind.conserves_photon_number() {
                assert!(spread(&n) <= 1e-10);
            } else {
                assert!(spread(&n) >= 1e-6, "{:e}", spread(&n));
            }
        }
    }

    #[test]
    fn bad_times_are_refused() {
        let h = OperatorMatrix::diagonal(Space::Mech { dim: 2 }, |i| i as f64);
        let es = eigh(&h).unwrap();
        let psi = [C64::new(1.0, 0.0), ZERO];
        assert!(propagate(&es, &psi, &[1.0, 1.0]).is_err());
        assert!(propagate(&es, &psi, &[-1.0]).is_err());
        assert!(propagate(&es, &[C64::new(2.0, 0.0), ZERO], &[0.0]).is_err());
    }
}
