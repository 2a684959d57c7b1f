//! Analytic frequency-domain solution of the driven two-oscillator system.
//!
//! The effective (non-Hermitian) mode matrix is
//!
//! ```text
//!     H = | omega_m - i gamma_m/2      g_cm/2               |
//!         | g_cm/2                     omega_c - i gamma_c/2 |
//! ```
//!
//! so the hybrid modes split by exactly `g_cm` at degeneracy, and a drive of
//! strength `g_am sqrt(n_a)` on the magnon side at frequency `omega_a` has the
//! steady-state amplitude `A = g_am sqrt(n_a) (omega_a I - H)^{-1} (1, 0)^T`.
//! Power deposited in the cavity is `gamma_c omega_a^2 / (4 omega_c) |A_c|^2`
//! in natural units (rad^2/s^2); see [`power_to_watts`].

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;

/// Electron gyromagnetic ratio, rad/s per tesla: Larmor tuning is
/// `omega_m = GYROMAGNETIC_RATIO * b0`.
pub const GYROMAGNETIC_RATIO: f64 = TAU * 28.0e9;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;

/// Cavity/magnon pair: mode frequencies, linewidths and their coupling, all in
/// rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams {
    pub omega_c: f64,
    pub omega_m: f64,
    pub gamma_c: f64,
    pub gamma_m: f64,
    pub g_cm: f64,
}

impl HybridParams {
    pub fn new(omega_c: f64, omega_m: f64, gamma_c: f64, gamma_m: f64, g_cm: f64) -> Result<Self> {
        if !(omega_c > 0.0) {
            return Err(Error::Domain(format!("omega_c must be positive, got {omega_c}")));
        }
        if !(omega_m >= 0.0) {
            return Err(Error::Domain(format!("omega_m must be non-negative, got {omega_m}")));
        }
        if !(gamma_c > 0.0) || !(gamma_m > 0.0) {
            return Err(Error::Domain(format!(
                "linewidths must be positive, got gamma_c = {gamma_c}, gamma_m = {gamma_m}"
            )));
        }
        if !(g_cm >= 0.0) {
            return Err(Error::Domain(format!("g_cm must be non-negative, got {g_cm}")));
        }
        Ok(Self { omega_c, omega_m, gamma_c, gamma_m, g_cm })
    }

    /// Same system with the Kittel mode retuned (the static-field knob).
    pub fn with_omega_m(mut self, omega_m: f64) -> Self {
        self.omega_m = omega_m;
        self
    }

    /// Mean linewidth `(gamma_c + gamma_m) / 2`, the damping rate of both
    /// hybrid modes at degeneracy.
    pub fn gamma_h(&self) -> f64 {
        0.5 * (self.gamma_c + self.gamma_m)
    }

    /// Informational: coupling exceeds both linewidths.
    pub fn strongly_coupled(&self) -> bool {
        self.g_cm > self.gamma_c.max(self.gamma_m)
    }
}

/// External drive acting on the magnon mode: coupling `g_am` (rad/s),
/// occupation `n_a` (dimensionless) and drive frequency `omega_a` (rad/s).
/// Amplitudes are linear in `g_am * sqrt(n_a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxionDrive {
    pub g_am: f64,
    pub n_a: f64,
    pub omega_a: f64,
}

impl AxionDrive {
    pub fn new(g_am: f64, n_a: f64, omega_a: f64) -> Result<Self> {
        if !(g_am >= 0.0) {
            return Err(Error::Domain(format!("g_am must be non-negative, got {g_am}")));
        }
        if !(n_a >= 0.0) {
            return Err(Error::Domain(format!("n_a must be non-negative, got {n_a}")));
        }
        if !(omega_a > 0.0) {
            return Err(Error::Domain(format!("omega_a must be positive, got {omega_a}")));
        }
        Ok(Self { g_am, n_a, omega_a })
    }

    pub fn with_omega_a(mut self, omega_a: f64) -> Self {
        self.omega_a = omega_a;
        self
    }

    /// Drive strength `g_am * sqrt(n_a)` (rad/s).
    pub fn strength(&self) -> f64 {
        self.g_am * self.n_a.sqrt()
    }
}

/// One magnon mode of a many-mode system: frequency, linewidth, coupling to
/// the cavity (all rad/s) and a dimensionless drive weight (default 1: the
/// drive addresses every mode identically).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonMode {
    pub omega: f64,
    pub gamma: f64,
    pub g: f64,
    pub drive_weight: f64,
}

impl MagnonMode {
    pub fn new(omega: f64, gamma: f64, g: f64) -> Self {
        Self { omega, gamma, g, drive_weight: 1.0 }
    }

    pub fn with_drive_weight(mut self, weight: f64) -> Self {
        self.drive_weight = weight;
        self
    }
}

/// N magnon modes coupled to one cavity mode. With N = 1 and unit drive
/// weight this reduces exactly to [`HybridParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystem {
    pub magnons: Vec<MagnonMode>,
    pub omega_c: f64,
    pub gamma_c: f64,
}

impl ModeSystem {
    pub fn new(magnons: Vec<MagnonMode>, omega_c: f64, gamma_c: f64) -> Result<Self> {
        if magnons.is_empty() {
            return Err(Error::Domain("mode system needs at least one magnon mode".into()));
        }
        if !(omega_c > 0.0) || !(gamma_c > 0.0) {
            return Err(Error::Domain(format!(
                "cavity must have positive frequency and linewidth, got ({omega_c}, {gamma_c})"
            )));
        }
        for (i, m) in magnons.iter().enumerate() {
            if !(m.omega > 0.0) || !(m.gamma > 0.0) {
                return Err(Error::Domain(format!(
                    "magnon mode {i} must have positive frequency and linewidth"
                )));
            }
            if !(m.g >= 0.0) || !(m.drive_weight >= 0.0) {
                return Err(Error::Domain(format!(
                    "magnon mode {i} must have non-negative coupling and drive weight"
                )));
            }
        }
        Ok(Self { magnons, omega_c, gamma_c })
    }

    pub fn from_hybrid(p: &HybridParams) -> Self {
        Self {
            magnons: vec![MagnonMode::new(p.omega_m, p.gamma_m, p.g_cm)],
            omega_c: p.omega_c,
            gamma_c: p.gamma_c,
        }
    }
}

/// Steady-state complex amplitudes, one entry per mode with the cavity last.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResponse {
    pub amplitudes: Vec<C64>,
    pub omega_a: f64,
}

impl ComplexResponse {
    /// Cavity amplitude (last component).
    pub fn cavity(&self) -> C64 {
        *self.amplitudes.last().expect("response holds at least two modes")
    }

    pub fn magnon(&self, i: usize) -> C64 {
        self.amplitudes[i]
    }
}

/// Which hybrid mode a branch-resolved quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Lower,
    Upper,
}

/// One row of a branch sweep: Larmor frequency, both hybrid frequencies, the
/// on-resonance deposited power and its normalized value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub omega_m: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub p_ac: f64,
    pub q: f64,
}

/// Tabulated transduction curve along one branch; `q` is normalized so its
/// maximum over the grid is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Larmor frequency of the Kittel mode in a static field `b0` (tesla).
pub fn larmor_frequency(b0: f64) -> Result<f64> {
    if !(b0 >= 0.0) {
        return Err(Error::Domain(format!("magnetic field must be non-negative, got {b0} T")));
    }
    Ok(GYROMAGNETIC_RATIO * b0)
}

/// Static field that tunes the Kittel mode to `omega_m` (rad/s).
pub fn field_for_larmor(omega_m: f64) -> Result<f64> {
    if !(omega_m >= 0.0) {
        return Err(Error::Domain(format!("omega_m must be non-negative, got {omega_m}")));
    }
    Ok(omega_m / GYROMAGNETIC_RATIO)
}

/// Hybrid-mode frequencies `(omega_minus, omega_plus)`:
/// `(omega_c + omega_m)/2 -+ sqrt(((omega_c - omega_m)/2)^2 + (g_cm/2)^2)`.
/// The splitting is minimal, equal to `g_cm`, at `omega_m = omega_c`.
pub fn hybrid_frequencies(p: &HybridParams) -> (f64, f64) {
    let mean = 0.5 * (p.omega_c + p.omega_m);
    let split = (0.25 * (p.omega_c - p.omega_m).powi(2) + 0.25 * p.g_cm * p.g_cm).sqrt();
    (mean - split, mean + split)
}

/// Determinant of `omega_a I - H`; the poles of the response sit where its
/// real part vanishes.
fn response_denominator(p: &HybridParams, omega_a: f64) -> C64 {
    C64::new(omega_a - p.omega_m, 0.5 * p.gamma_m) * C64::new(omega_a - p.omega_c, 0.5 * p.gamma_c)
        - 0.25 * p.g_cm * p.g_cm
}

/// Steady-state amplitudes `(A_m, A_c)` of the driven pair, solving
/// `(omega_a I - H) A = g_am sqrt(n_a) (1, 0)^T` in closed form.
pub fn response_amplitude(p: &HybridParams, d: &AxionDrive) -> ComplexResponse {
    let den = response_denominator(p, d.omega_a);
    // nonsingular for any gamma_c, gamma_m > 0: both eigenvalues of H have
    // strictly negative imaginary part while omega_a is real
    assert!(den.norm_sqr() > 0.0, "response denominator vanished");
    let f = d.strength();
    let a_m = f * C64::new(d.omega_a - p.omega_c, 0.5 * p.gamma_c) / den;
    let a_c = f * (0.5 * p.g_cm) / den;
    ComplexResponse { amplitudes: vec![a_m, a_c], omega_a: d.omega_a }
}

/// Power deposited in the cavity, natural units (rad^2/s^2):
/// `gamma_c omega_a^2 / (4 omega_c) |A_c|^2`.
pub fn deposited_power(p: &HybridParams, d: &AxionDrive) -> f64 {
    let a_c = response_amplitude(p, d).cavity();
    p.gamma_c * d.omega_a * d.omega_a / (4.0 * p.omega_c) * a_c.norm_sqr()
}

/// Natural-unit power to watts. The absolute scale is a convention (the
/// occupation and coupling of the external field are user-supplied), so
/// quote absolute powers with care; normalized outputs do not depend on it.
pub fn power_to_watts(p_natural: f64) -> f64 {
    HBAR * p_natural
}

/// Larmor frequency whose chosen hybrid branch sits at `omega_pm`:
/// `omega_m = omega_pm - (g_cm/2)^2 / (omega_pm - omega_c)`.
///
/// The lower branch lives strictly below `omega_c`, the upper strictly above;
/// `omega_pm = omega_c` is the branch asymptote and is rejected, as is any
/// frequency that would need a negative Larmor frequency.
pub fn larmor_for_branch(p: &HybridParams, omega_pm: f64, branch: Branch) -> Result<f64> {
    let side_ok = match branch {
        Branch::Lower => omega_pm < p.omega_c,
        Branch::Upper => omega_pm > p.omega_c,
    };
    if !side_ok {
        return Err(Error::BranchDomain(format!(
            "omega_pm = {omega_pm} rad/s is not on the {branch:?} branch of a cavity at {} rad/s",
            p.omega_c
        )));
    }
    let omega_m = omega_pm - 0.25 * p.g_cm * p.g_cm / (omega_pm - p.omega_c);
    if omega_m < 0.0 {
        return Err(Error::BranchDomain(format!(
            "omega_pm = {omega_pm} rad/s would need a negative Larmor frequency ({omega_m})"
        )));
    }
    Ok(omega_m)
}

/// Deposited power with the drive sitting exactly on the chosen hybrid branch
/// at `omega_pm`: tunes `omega_m` so the branch passes through `omega_pm`,
/// sets `omega_a = omega_pm` and evaluates [`deposited_power`].
pub fn on_resonance_power(
    p: &HybridParams,
    d_template: &AxionDrive,
    omega_pm: f64,
    branch: Branch,
) -> Result<f64> {
    let omega_m = larmor_for_branch(p, omega_pm, branch)?;
    Ok(deposited_power(&p.with_omega_m(omega_m), &d_template.with_omega_a(omega_pm)))
}

/// Normalized transduction curve `q = P_ac / max P_ac` over a grid of hybrid
/// frequencies on one branch. The drive scale cancels: doubling `g_am` or
/// `n_a` leaves `q` unchanged.
pub fn transduction_curve(
    p: &HybridParams,
    d: &AxionDrive,
    branch: Branch,
    grid: &[f64],
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Usage("transduction grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &omega_pm in grid {
        let omega_m = larmor_for_branch(p, omega_pm, branch)?;
        let pt = p.with_omega_m(omega_m);
        let (omega_minus, omega_plus) = hybrid_frequencies(&pt);
        let p_ac = deposited_power(&pt, &d.with_omega_a(omega_pm));
        points.push(SweepPoint { omega_m, omega_minus, omega_plus, p_ac, q: 0.0 });
    }
    let p_max = points.iter().map(|s| s.p_ac).fold(f64::NEG_INFINITY, f64::max);
    if !(p_max > 0.0) {
        return Err(Error::Diagnostic("transduction curve vanishes on the whole grid".into()));
    }
    for s in &mut points {
        s.q = s.p_ac / p_max;
    }
    Ok(SweepResult { points })
}

/// Scan resolution of the bandwidth search.
const BANDWIDTH_SCAN_POINTS: usize = 2001;
/// Bisection tolerance on the half-maximum crossings: 2 pi x 1 kHz.
const BANDWIDTH_TOL: f64 = TAU * 1e3;

/// Dynamical bandwidth of the chosen branch: the FWHM, measured along the
/// Larmor-frequency axis, of the power collected with the drive kept on the
/// branch resonance. This is the tuning range of the static field (expressed
/// as a Larmor interval, rad/s) over which the transducer stays within half
/// of its best sensitivity -- an interval roughly an order of magnitude wider
/// than the hybrid linewidth.
///
/// The curve is scanned with 2001 points over `[extremum - 10 g_cm,
/// extremum + 10 g_cm]`, checked for unimodality, and the two half-maximum
/// crossings are refined by bisection to 2 pi x 1 kHz.
pub fn dynamical_bandwidth(p: &HybridParams, d_template: &AxionDrive, branch: Branch) -> Result<f64> {
    if p.g_cm == 0.0 {
        return Err(Error::BranchDomain(
            "g_cm = 0: the modes do not hybridize, there is no branch to scan".into(),
        ));
    }
    let power_at = |omega_m: f64| -> f64 {
        let pt = p.with_omega_m(omega_m);
        let (lo, hi) = hybrid_frequencies(&pt);
        let omega_res = match branch {
            Branch::Lower => lo,
            Branch::Upper => hi,
        };
        deposited_power(&pt, &d_template.with_omega_a(omega_res))
    };

    let half_window = 10.0 * p.g_cm;
    // preliminary scan around the anticrossing locates the branch extremum
    let coarse_peak = scan_argmax(&power_at, (p.omega_c - half_window).max(0.0), p.omega_c + half_window);
    let lo_edge = (coarse_peak - half_window).max(0.0);
    let hi_edge = coarse_peak + half_window;
    let n = BANDWIDTH_SCAN_POINTS;
    let step = (hi_edge - lo_edge) / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| power_at(lo_edge + i as f64 * step)).collect();

    let imax = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    // the branch curve must be unimodal for a FWHM to mean anything
    let tol = 1.0 + 1e-9;
    for i in 1..=imax {
        if values[i] * tol < values[i - 1] {
            return Err(Error::Diagnostic(format!(
                "branch power curve is not unimodal (dip left of the maximum near index {i})"
            )));
        }
    }
    for i in imax..n - 1 {
        if values[i + 1] > values[i] * tol {
            return Err(Error::Diagnostic(format!(
                "branch power curve is not unimodal (rise right of the maximum near index {i})"
            )));
        }
    }

    let half_max = 0.5 * values[imax];
    let left_bracket = (0..imax).rev().find(|&i| values[i] < half_max);
    let right_bracket = (imax + 1..n).find(|&i| values[i] < half_max);
    let (Some(il), Some(ir)) = (left_bracket, right_bracket) else {
        return Err(Error::Diagnostic(format!(
            "half-maximum crossing not bracketed within the scan window [{lo_edge}, {hi_edge}] rad/s"
        )));
    };

    let crossing = |mut a: f64, mut b: f64| -> f64 {
        // invariant: power(a) < half_max <= power(b)
        while (b - a).abs() > BANDWIDTH_TOL {
            let mid = 0.5 * (a + b);
            if power_at(mid) < half_max {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let left = crossing(lo_edge + il as f64 * step, lo_edge + (il + 1) as f64 * step);
    let right = crossing(lo_edge + ir as f64 * step, lo_edge + (ir - 1) as f64 * step);
    Ok(right - left)
}

fn scan_argmax(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = BANDWIDTH_SCAN_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..n {
        let x = lo + i as f64 * step;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

/// Steady-state amplitudes of the (N+1)-mode system: each magnon mode couples
/// to the cavity only (`g_i/2` off-diagonals), the drive addresses the magnon
/// modes with their configured weights, and the dense system
/// `(omega_a I - H) A = g_am sqrt(n_a) w` is solved directly. The cavity is
/// the last component.
pub fn multi_mode_response(s: &ModeSystem, d: &AxionDrive) -> ComplexResponse {
    let n = s.magnons.len() + 1;
    let mut a = vec![C64::ZERO; n * n];
    let mut b = vec![C64::ZERO; n];
    let f = d.strength();
    for (i, m) in s.magnons.iter().enumerate() {
        a[i * n + i] = C64::new(d.omega_a - m.omega, 0.5 * m.gamma);
        a[i * n + (n - 1)] = C64::from(-0.5 * m.g);
        a[(n - 1) * n + i] = C64::from(-0.5 * m.g);
        b[i] = C64::from(f * m.drive_weight);
    }
    a[(n - 1) * n + (n - 1)] = C64::new(d.omega_a - s.omega_c, 0.5 * s.gamma_c);
    ComplexResponse { amplitudes: solve_dense(a, b), omega_a: d.omega_a }
}

/// Magnon linewidth from the degenerate hybrid linewidth:
/// `gamma_m = 2 gamma_h - gamma_c`. Errors if the result is not positive.
pub fn gamma_m_from_hybrid(gamma_h: f64, gamma_c: f64) -> Result<f64> {
    if !(gamma_h > 0.0) || !(gamma_c > 0.0) {
        return Err(Error::Domain(format!(
            "linewidths must be positive, got gamma_h = {gamma_h}, gamma_c = {gamma_c}"
        )));
    }
    let gamma_m = 2.0 * gamma_h - gamma_c;
    if !(gamma_m > 0.0) {
        return Err(Error::Domain(format!(
            "2 gamma_h - gamma_c = {gamma_m} rad/s is not a physical linewidth"
        )));
    }
    Ok(gamma_m)
}
