//! Closed-form eigensystems of the number-conserving approximate models.
//!
//! With the photon number n conserved, each model reduces to a harmonic
//! oscillator per photon sector:
//!
//! * `Lin`: frequency Ω, equilibrium x̄_n = G(n+½)/Ω².
//! * `Quad`: Ω_n² = Ω² + (n+½)β², x̄_n = G(n+½)/Ω_n².
//! * `NHat`: x̄_n minimises V_n(x) = ω(x)(n+½) + Ω²x²/2 and Ω_n² = V_n''(x̄_n).
//!
//! Every record also carries `energy_shift`, the offset of E_{n,m} from the
//! bare level (n+½)ω0 + (m+½)Ω, evaluated without cancellation against ω0.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Models with a closed-form (or one-dimensional root-find) eigensystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnalyticModel {
    Lin,
    Quad,
    NHat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticEigenData {
    pub model: AnalyticModel,
    pub n: u64,
    pub m: u64,
    /// E_{n,m} in units of Ω.
    pub energy: f64,
    /// E_{n,m} − (n+½)ω0 − (m+½)Ω.
    pub energy_shift: f64,
    pub x_bar: f64,
    pub omega_n: f64,
    pub delta_x: f64,
}

fn half(n: u64) -> f64 {
    n as f64 + 0.5
}

fn bare_level(n: u64, m: u64, p: &ModelParams) -> f64 {
    half(n) * p.omega0() + half(m) * p.omega()
}

/// Displaced oscillator with frequency² = Ω² + (n+½)·curvature, shared by the
/// linear (curvature 0) and quadratic models.
fn quadratic_family(
    model: AnalyticModel,
    n: u64,
    m: u64,
    p: &ModelParams,
    curvature: f64,
) -> AnalyticEigenData {
    let s = half(n);
    let omega = p.omega();
    let stiffness = s * curvature;
    let omega_n2 = omega * omega + stiffness;
    let omega_n = omega_n2.sqrt();
    // Ω_n − Ω without cancellation
    let omega_gain = stiffness / (omega_n + omega);
    let x_bar = p.g() * s / omega_n2;
    let binding = p.g() * p.g() * s * s / (2.0 * omega_n2);
    let energy_shift = omega_gain * half(m) - binding;
    AnalyticEigenData {
        model,
        n,
        m,
        energy: bare_level(n, m, p) + energy_shift,
        energy_shift,
        x_bar,
        omega_n,
        delta_x: (half(m) / omega_n).sqrt(),
    }
}

/// Linear model eigensystem: the β = 0 case of the quadratic model.
pub fn lin_energy(n: u64, m: u64, p: &ModelParams) -> AnalyticEigenData {
    quadratic_family(AnalyticModel::Lin, n, m, p, 0.0)
}

/// Quadratic-model eigensystem.
pub fn quad_spectrum(n: u64, m: u64, p: &ModelParams) -> AnalyticEigenData {
    quadratic_family(AnalyticModel::Quad, n, m, p, p.beta2())
}

const ROOT_RTOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 400;

/// Solves y(1+y)² = κ for the unique y ≥ 0 with a bracketed Newton/bisection
/// hybrid. Returns y = x̄/L.
fn solve_equilibrium(kappa: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let f = |y: f64| y * (1.0 + y) * (1.0 + y) - kappa;
    let residual_ok = |y: f64| f(y).abs() <= 0.1 * ROOT_RTOL * kappa;

    let mut lo = 0.0;
    let mut hi = kappa.min(kappa.cbrt()).max(f64::MIN_POSITIVE);
    let mut grow = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 2100 {
            return Err(Error::Numerical(format!("no bracket for equilibrium with kappa={kappa}")));
        }
    }
    // initial guess: κ for small κ, κ^{1/3} for large
    let mut y = if kappa < 1.0 { kappa / (1.0 + kappa).powi(2) } else { kappa.cbrt() - 2.0 / 3.0 };
    if !(y > lo && y < hi) {
        y = 0.5 * (lo + hi);
    }
    for _ in 0..ROOT_MAX_ITER {
        let fy = f(y);
        if residual_ok(y) {
            return Ok(y);
        }
        if fy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let slope = (1.0 + y) * (1.0 + 3.0 * y);
        let newton = y - fy / slope;
        y = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    // bracket collapsed to adjacent floats: accept the better end point
    let best = [lo, hi, y].into_iter().min_by(|a, b| f(*a).abs().total_cmp(&f(*b).abs())).unwrap();
    if f(best).abs() <= ROOT_RTOL * kappa {
        Ok(best)
    } else {
        Err(Error::Numerical(format!(
            "equilibrium root did not converge: kappa={kappa}, residual={}",
            f(best).abs() / kappa
        )))
    }
}

/// Dimensionless load κ = (n+½)ω0/(Ω²L²) of the equilibrium condition.
fn load(n: u64, p: &ModelParams) -> f64 {
    half(n) * p.g() * p.g() / (p.omega() * p.omega() * p.omega0())
}

/// Relative residual of Ω²x̄(1+x̄/L)² = (n+½)ω0/L.
pub fn equilibrium_residual(n: u64, x_bar: f64, p: &ModelParams) -> f64 {
    if p.is_uncoupled() {
        return x_bar.abs();
    }
    let y = p.relative_displacement(x_bar);
    let kappa = load(n, p);
    // both sides divided by Ω²L
    (y * (1.0 + y) * (1.0 + y) - kappa).abs() / kappa
}

fn nhat_equilibrium(n: u64, p: &ModelParams) -> Result<(f64, f64)> {
    if p.is_uncoupled() {
        return Ok((0.0, 0.0));
    }
    let y = solve_equilibrium(load(n, p))?;
    Ok((y, y * p.length()))
}

/// Equilibrium position x̄_n of the photon-controlled oscillator.
pub fn nhat_xbar(n: u64, p: &ModelParams) -> Result<f64> {
    Ok(nhat_equilibrium(n, p)?.1)
}

/// Eigensystem of the photon-controlled harmonic oscillator.
pub fn nhat_spectrum(n: u64, m: u64, p: &ModelParams) -> Result<AnalyticEigenData> {
    let (y, x_bar) = nhat_equilibrium(n, p)?;
    let s = half(n);
    let omega = p.omega();
    let stiffening = 2.0 * y / (1.0 + y);
    let omega_n2 = omega * omega * (1.0 + stiffening);
    let omega_n = omega_n2.sqrt();

    // V_n''(x̄) = Ω² + (n+½)·2ω0/(L²(1+y)³)
    let curvature = omega * omega + 2.0 * load(n, p) * omega * omega / (1.0 + y).powi(3);
    if ((curvature - omega_n2) / omega_n2).abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "V_n'' = {curvature} disagrees with Omega_n^2 = {omega_n2} at n={n}"
        )));
    }

    let omega_gain = omega * stiffening / ((1.0 + stiffening).sqrt() + 1.0);
    // V_n(x̄) − (n+½)ω0
    let potential_shift = -s * p.omega0() * y / (1.0 + y) + 0.5 * omega * omega * x_bar * x_bar;
    let energy_shift = potential_shift + omega_gain * half(m);
    Ok(AnalyticEigenData {
        model: AnalyticModel::NHat,
        n,
        m,
        energy: bare_level(n, m, p) + energy_shift,
        energy_shift,
        x_bar,
        omega_n,
        delta_x: (half(m) / omega_n).sqrt(),
    })
}

/// Per-sector constants of the photon-controlled oscillator:
/// (x̄_n, Ω_n², V_n(x̄_n) − (n+½)ω0).
pub(crate) fn nhat_sector(n: u64, p: &ModelParams) -> Result<(f64, f64, f64)> {
    let d = nhat_spectrum(n, 0, p)?;
    let omega = p.omega();
    let omega_gain = d.omega_n - omega;
    Ok((d.x_bar, d.omega_n * d.omega_n, d.energy_shift - 0.5 * omega_gain))
}

/// Photon-dependent mechanical potential V_n(x) = ω(x)(n+½) + Ω²x²/2.
pub fn nhat_potential(n: u64, x: f64, p: &ModelParams) -> f64 {
    p.cavity_frequency(x) * half(n) + 0.5 * p.omega() * p.omega() * x * x
}

/// Dispatches to the closed form of `model`.
pub fn spectrum(model: AnalyticModel, n: u64, m: u64, p: &ModelParams) -> Result<AnalyticEigenData> {
    match model {
        AnalyticModel::Lin => Ok(lin_energy(n, m, p)),
        AnalyticModel::Quad => Ok(quad_spectrum(n, m, p)),
        AnalyticModel::NHat => nhat_spectrum(n, m, p),
    }
}

/// Smallest photon number at which the linear model's E_{n,0} turns negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeEnergyThreshold {
    pub n_star: u64,
    /// E_{n*−1,0}; `None` when n* = 0.
    pub energy_before: Option<f64>,
    pub energy_at: f64,
    /// n* would exceed 2⁶²; `n_star` holds the sentinel 2⁶².
    pub saturated: bool,
}

const THRESHOLD_CAP: u64 = 1 << 62;

pub fn negative_energy_threshold(p: &ModelParams) -> Result<NegativeEnergyThreshold> {
    if !(p.g() > 0.0) {
        return Err(Error::Precondition("the linear model is bounded below when G = 0".into()));
    }
    let e = |n: u64| lin_energy(n, 0, p).energy;
    if e(0) < 0.0 {
        return Ok(NegativeEnergyThreshold { n_star: 0, energy_before: None, energy_at: e(0), saturated: false });
    }
    // a s² − ω0 s − Ω/2 = 0 with a = G²/(2Ω²), s = n + ½
    let a = p.g() * p.g() / (2.0 * p.omega() * p.omega());
    let w0 = p.omega0();
    let disc = (w0 * w0 + 2.0 * a * p.omega()).sqrt();
    let s_root = (w0 + disc) / (2.0 * a);
    let n_root = s_root - 0.5;
    if !(n_root < THRESHOLD_CAP as f64) {
        return Ok(NegativeEnergyThreshold {
            n_star: THRESHOLD_CAP,
            energy_before: None,
            energy_at: f64::NAN,
            saturated: true,
        });
    }
    let mut n_star = (n_root.floor() as u64 + 1).max(1);
    // rounding in the root can misplace the integer by one
    while n_star > 1 && e(n_star - 1) < 0.0 {
        n_star -= 1;
    }
    while e(n_star) >= 0.0 {
        n_star += 1;
    }
    let energy_before = e(n_star - 1);
    Ok(NegativeEnergyThreshold {
        n_star,
        energy_before: Some(energy_before),
        energy_at: e(n_star),
        saturated: false,
    })
}

/// Large-n limits of the equilibrium position and mechanical frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    pub x_bar_limit: f64,
    pub omega_limit: f64,
    /// Log-log slope of Ω_n against n fitted over n ∈ [10⁶, 10⁹]
    /// (log-spaced samples). Only meaningful for divergent Ω_n.
    pub omega_exponent: Option<f64>,
}

pub fn asymptotics(model: AnalyticModel, p: &ModelParams) -> Result<Asymptotics> {
    match model {
        AnalyticModel::Quad => {
            if p.is_uncoupled() {
                return Ok(Asymptotics { x_bar_limit: 0.0, omega_limit: p.omega(), omega_exponent: Some(0.0) });
            }
            let samples = log_grid(1e6, 1e9, 61);
            let exponent = loglog_slope(&samples, |n| quad_spectrum(n, 0, p).omega_n);
            Ok(Asymptotics {
                x_bar_limit: p.g() / p.beta2(),
                omega_limit: f64::INFINITY,
                omega_exponent: Some(exponent),
            })
        }
        AnalyticModel::NHat => Ok(Asymptotics {
            x_bar_limit: if p.is_uncoupled() { 0.0 } else { f64::INFINITY },
            omega_limit: if p.is_uncoupled() { p.omega() } else { 3f64.sqrt() * p.omega() },
            omega_exponent: None,
        }),
        AnalyticModel::Lin => Err(Error::Domain("the linear model has no n-dependent frequency".into())),
    }
}

/// `count` integers log-uniformly spaced in [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<u64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .collect()
}

/// Least-squares slope of ln f(n) against ln n.
pub fn loglog_slope(ns: &[u64], f: impl Fn(u64) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = ns.iter().map(|&n| ((n as f64).ln(), f(n).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;

    fn standard() -> ModelParams {
        derive_params(100.0, 0.01).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Plain bisection on Ω²x(1+x/L)² − (n+½)ω0/L, kept apart from the
    /// production root finder.
    fn bisect_xbar(n: u64, p: &ModelParams) -> f64 {
        let l = p.length();
        let rhs = (n as f64 + 0.5) * p.omega0() / l;
        let f = |x: f64| p.omega() * p.omega() * x * (1.0 + x / l).powi(2) - rhs;
        let (mut lo, mut hi) = (0.0, 1.0);
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn uncoupled_oscillators() {
        let p = ModelParams::uncoupled(100.0).unwrap();
        for (n, m) in [(0, 0), (3, 7), (20, 1)] {
            let want = (n as f64 + 0.5) * 100.0 + (m as f64 + 0.5);
            assert_eq!(lin_energy(n, m, &p).energy, want);
            assert_eq!(quad_spectrum(n, m, &p).energy, want);
            assert_eq!(nhat_spectrum(n, m, &p).unwrap().energy, want);
            assert_eq!(nhat_xbar(n, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn lin_ground_state_standard_params() {
        // 50.5 − G²/8 with G² = 2e-4, 30-digit reference
        let d = lin_energy(0, 0, &standard());
        assert!((d.energy - 50.499975).abs() < 1e-12);
        assert!(rel(d.x_bar, 0.5 * standard().g()) < 1e-15);
        assert_eq!(d.omega_n, 1.0);
    }

    #[test]
    fn lin_goes_negative_at_huge_photon_number() {
        assert!(lin_energy(1_000_000, 0, &standard()).energy < 0.0);
    }

    #[test]
    fn quad_reference_values() {
        // 30-digit references: Ω_0 = 1.000000999999500000499999375,
        // x̄_0 = 7.07105366975813572773698814707e-3,
        // E_00 = 50.4999755000497499002501996871
        let d = quad_spectrum(0, 0, &standard());
        assert!(rel(d.omega_n, 1.000000999999500000499999375) < 1e-15);
        assert!(rel(d.x_bar, 7.07105366975813572773698814707e-3) < 1e-14);
        assert!((d.energy - 50.4999755000497499002501996871).abs() < 1e-12);
        assert!((d.energy_shift - (50.4999755000497499002501996871 - 50.5)).abs() < 1e-15);
    }

    #[test]
    fn quad_reduces_to_lin_without_curvature() {
        let p = standard();
        for n in [0, 5, 40] {
            for m in [0, 3] {
                let q = quadratic_family(AnalyticModel::Quad, n, m, &p, 0.0);
                let l = lin_energy(n, m, &p);
                assert_eq!(q.energy, l.energy);
                assert_eq!(q.x_bar, l.x_bar);
            }
        }
    }

    #[test]
    fn quad_displacement_saturates() {
        let p = standard();
        let d = quad_spectrum(1_000_000_000_000, 0, &p);
        assert!(rel(d.x_bar, p.g() / p.beta2()) < 1e-6);
        let a = asymptotics(AnalyticModel::Quad, &p).unwrap();
        assert!(rel(a.x_bar_limit, 3535.53390593273762200422181052) < 1e-14);
    }

    #[test]
    fn nhat_xbar_matches_bisection_oracle() {
        let p = standard();
        for n in [0, 1, 10, 1000, 1_000_000] {
            let got = nhat_xbar(n, &p).unwrap();
            let want = bisect_xbar(n, &p);
            assert!(rel(got, want) < 1e-11, "n={n}: {got} vs {want}");
        }
        // agrees with the quadratic model's 7.0710537e-3 far beyond O(G³)
        let x0 = nhat_xbar(0, &p).unwrap();
        assert!(rel(x0, 7.071053e-3) < 1e-6);
        assert!(rel(x0, quad_spectrum(0, 0, &p).x_bar) < 1e-10);
    }

    #[test]
    fn nhat_residual_bound() {
        let p = standard();
        let ns = (0..=1000).chain([1_000_000, 1_000_000_000, 1_000_000_000_000]);
        for n in ns {
            let x = nhat_xbar(n, &p).unwrap();
            assert!(x > 0.0);
            assert!(equilibrium_residual(n, x, &p) <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn nhat_weak_coupling_limit() {
        let p = derive_params(100.0, 1e-12).unwrap();
        for n in [0, 10, 1000] {
            assert!(nhat_xbar(n, &p).unwrap() <= (n as f64 + 0.5) * p.g() * (1.0 + 1e-12));
            let d = nhat_spectrum(n, 2, &p).unwrap();
            let bare = (n as f64 + 0.5) * 100.0 + 2.5;
            assert!((d.energy - bare).abs() < 1e-9);
        }
    }

    #[test]
    fn nhat_runs_away_at_huge_photon_number() {
        let p = standard();
        let x = nhat_xbar(1_000_000_000_000, &p).unwrap();
        assert!(x > 100.0 * p.length());
    }

    #[test]
    fn nhat_agrees_with_quad_at_second_order() {
        let p = standard();
        let q = quad_spectrum(0, 0, &p);
        let h = nhat_spectrum(0, 0, &p).unwrap();
        assert!((q.energy - h.energy).abs() < 1e-6);
    }

    #[test]
    fn nhat_curvature_matches_finite_difference() {
        let p = standard();
        let h = 1e-5 * p.length();
        for n in [0, 1, 7, 100, 1000] {
            let d = nhat_spectrum(n, 0, &p).unwrap();
            let x = d.x_bar;
            let v = |x| nhat_potential(n, x, &p);
            let fd = (v(x + h) - 2.0 * v(x) + v(x - h)) / (h * h);
            assert!(rel(fd, d.omega_n * d.omega_n) < 1e-6, "n={n}: {fd}");
        }
    }

    #[test]
    fn monotonicity_in_photon_number() {
        let p = standard();
        let mut prev: Option<(AnalyticEigenData, AnalyticEigenData, AnalyticEigenData)> = None;
        for n in 0..=1000 {
            let l = lin_energy(n, 0, &p);
            let q = quad_spectrum(n, 0, &p);
            let h = nhat_spectrum(n, 0, &p).unwrap();
            assert!(q.omega_n >= p.omega() && h.omega_n >= p.omega());
            for d in [&l, &q, &h] {
                // ground state of a unit-mass oscillator of frequency Ω_n
                assert!(rel(d.delta_x * d.delta_x, 1.0 / (2.0 * d.omega_n)) < 1e-15);
            }
            // both refined models sit between the exact minimum and the
            // linear model's overshoot, and agree to O(G³)
            assert!(h.x_bar <= l.x_bar && q.x_bar <= l.x_bar);
            assert!((h.x_bar - q.x_bar).abs() <= 1e-6 * l.x_bar.max(1e-3) * (n as f64 + 1.0));
            if let Some((pl, pq, ph)) = prev {
                assert!(q.x_bar > pq.x_bar && h.x_bar > ph.x_bar && l.x_bar > pl.x_bar);
                assert!(q.omega_n > pq.omega_n && h.omega_n > ph.omega_n);
                assert!(q.delta_x < pq.delta_x && h.delta_x < ph.delta_x);
                assert_eq!(l.delta_x, pl.delta_x);
            }
            prev = Some((l, q, h));
        }
    }

    #[test]
    fn nhat_frequency_limit() {
        let a = asymptotics(AnalyticModel::NHat, &standard()).unwrap();
        assert_eq!(a.omega_limit, 3f64.sqrt());
        assert_eq!(a.x_bar_limit, f64::INFINITY);
        // Ω_n creeps towards √3 as κ^{-1/3}
        let far = nhat_spectrum(100_000_000_000_000, 0, &standard()).unwrap();
        assert!(rel(far.omega_n, 3f64.sqrt()) < 1e-3);
    }

    #[test]
    fn threshold_brackets_sign_change() {
        let p = standard();
        let t = negative_energy_threshold(&p).unwrap();
        assert!(!t.saturated);
        assert!(t.energy_before.unwrap() >= 0.0 && t.energy_at < 0.0);
        // brute-force scan of the closed form around 2ω0Ω²/G²
        let estimate = (2.0 * p.omega0() / (p.g() * p.g())) as u64;
        let scan = (estimate - 500..estimate + 500).find(|&n| lin_energy(n, 0, &p).energy < 0.0).unwrap();
        assert!(scan.abs_diff(t.n_star) <= 1);
        assert!((t.n_star as f64 / 1e6 - 1.0).abs() < 0.01);
    }

    #[test]
    fn threshold_scales_inverse_square_in_coupling() {
        let a = negative_energy_threshold(&derive_params(100.0, 0.01).unwrap()).unwrap();
        let b = negative_energy_threshold(&derive_params(100.0, 0.02).unwrap()).unwrap();
        let ratio = a.n_star as f64 / b.n_star as f64;
        assert!((ratio - 4.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn threshold_edge_cases() {
        // strong coupling: negative from the first excited photon numbers
        let p = derive_params(1.0, 10.0).unwrap();
        let t = negative_energy_threshold(&p).unwrap();
        assert!(t.energy_at < 0.0);
        if let Some(e) = t.energy_before {
            assert!(e >= 0.0);
        }
        assert!(negative_energy_threshold(&ModelParams::uncoupled(100.0).unwrap()).is_err());
        let tiny = derive_params(1e4, 1e-12).unwrap();
        assert!(negative_energy_threshold(&tiny).unwrap().saturated);
    }

    #[test]
    fn quad_covariance_under_rescaling() {
        let a = derive_params(100.0, 0.01).unwrap();
        let c = 3.0;
        let b = derive_params(c * 100.0, c * 0.01).unwrap();
        assert!(rel(b.beta2(), c * a.beta2()) < 1e-14);
        for n in [0, 4, 9] {
            let s = n as f64 + 0.5;
            let want = c * a.g() * s / (1.0 + s * c * a.beta2());
            assert!(rel(quad_spectrum(n, 0, &b).x_bar, want) < 1e-14);
        }
    }

    #[test]
    fn loglog_slope_recovers_power_law() {
        let ns = log_grid(1e3, 1e6, 31);
        assert!((loglog_slope(&ns, |n| (n as f64).powf(0.75)) - 0.75).abs() < 1e-9);
    }
}
