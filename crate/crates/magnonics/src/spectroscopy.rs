//! Synthetic two-port transmission spectra and the characterisation step:
//! peak finding, Lorentzian fits, and recovery of the hybrid-system
//! parameters from a static-field sweep.
//!
//! External spectra live in ordinary frequency (Hz); conversion to angular
//! units happens here at the boundary.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{gamma_m_from_hybrid, larmor_frequency, HybridParams};

/// `|S(f)|^2` on a strictly increasing frequency grid, normalized to unit
/// maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub magnitude_sq: Vec<f64>,
}

/// Result of a single-peak Lorentzian fit, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakFit {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
    /// Root-mean-square misfit over the fitted window.
    pub residual: f64,
}

/// Weak-probe transmission through the cavity port:
/// `|S|^2 ~ |chi_c|^2` with
/// `chi_c(w) = [(w - w_c + i gamma_c/2) - (g_cm/2)^2 / (w - w_m + i gamma_m/2)]^{-1}`,
/// normalized to unit maximum on the grid. Antenna couplings are absorbed
/// into the normalization.
pub fn transmission_spectrum(p: &HybridParams, grid_hz: &[f64]) -> Result<Spectrum> {
    if grid_hz.is_empty() {
        return Err(Error::Usage("frequency grid is empty".into()));
    }
    if grid_hz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("frequency grid must be strictly increasing".into()));
    }
    let mut magnitude_sq: Vec<f64> = grid_hz
        .iter()
        .map(|&f| {
            let w = TAU * f;
            let den = C64::new(w - p.omega_c, 0.5 * p.gamma_c)
                - 0.25 * p.g_cm * p.g_cm / C64::new(w - p.omega_m, 0.5 * p.gamma_m);
            1.0 / den.norm_sqr()
        })
        .collect();
    let max = magnitude_sq.iter().cloned().fold(0.0, f64::max);
    for v in &mut magnitude_sq {
        *v /= max;
    }
    Ok(Spectrum { frequencies: grid_hz.to_vec(), magnitude_sq })
}

/// Indices of discrete local maxima at least `min_rel_height` of the spectrum
/// maximum.
pub fn find_peaks(s: &Spectrum, min_rel_height: f64) -> Vec<usize> {
    let y = &s.magnitude_sq;
    let floor = min_rel_height * y.iter().cloned().fold(0.0, f64::max);
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1] && y[i] >= floor)
        .collect()
}

/// Least-squares Lorentzian fit `y = h (w/2)^2 / ((f - f0)^2 + (w/2)^2) + b`
/// over the sub-grid inside `window` (Hz). The window must contain exactly
/// one discrete local maximum. Damped (Levenberg-style) normal equations with
/// the frequency axis normalized to the window, 200-iteration cap.
pub fn fit_lorentzian(s: &Spectrum, window: (f64, f64)) -> Result<PeakFit> {
    let (w_lo, w_hi) = window;
    let idx: Vec<usize> = s
        .frequencies
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= w_lo && f <= w_hi)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 5 {
        return Err(Error::Fit(format!(
            "window [{w_lo}, {w_hi}] Hz contains {} samples, need at least 5",
            idx.len()
        )));
    }
    let y_raw: Vec<f64> = idx.iter().map(|&i| s.magnitude_sq[i]).collect();
    let f_raw: Vec<f64> = idx.iter().map(|&i| s.frequencies[i]).collect();

    let n_max = (1..y_raw.len() - 1)
        .filter(|&i| y_raw[i] > y_raw[i - 1] && y_raw[i] > y_raw[i + 1])
        .count();
    if n_max != 1 {
        return Err(Error::Fit(format!(
            "window [{w_lo}, {w_hi}] Hz must contain exactly one local maximum, found {n_max}"
        )));
    }

    // normalize both axes for conditioning
    let span = f_raw[f_raw.len() - 1] - f_raw[0];
    let f0_axis = f_raw[0];
    let x: Vec<f64> = f_raw.iter().map(|&f| (f - f0_axis) / span).collect();
    let y_scale = y_raw.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let y: Vec<f64> = y_raw.iter().map(|&v| v / y_scale).collect();

    // initial guess from the discrete maximum and half-maximum crossings
    let imax = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    let y_min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = 0.5 * (y[imax] + y_min);
    let right = (imax..y.len()).find(|&i| y[i] < half).unwrap_or(y.len() - 1);
    let left = (0..=imax).rev().find(|&i| y[i] < half).unwrap_or(0);
    let mut theta = [
        x[imax],                                   // x0
        (x[right] - x[left]).max(1e-6),            // width
        (y[imax] - y_min).max(1e-12),              // height
        y_min,                                     // floor
    ];

    let model = |t: &[f64; 4], xi: f64| -> f64 {
        let hw = 0.5 * t[1];
        t[2] * hw * hw / ((xi - t[0]).powi(2) + hw * hw) + t[3]
    };
    let cost = |t: &[f64; 4]| -> f64 {
        x.iter().zip(&y).map(|(&xi, &yi)| (yi - model(t, xi)).powi(2)).sum()
    };

    let mut lambda = 1e-3;
    let mut current = cost(&theta);
    for _ in 0..200 {
        // assemble damped normal equations
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for (&xi, &yi) in x.iter().zip(&y) {
            let hw = 0.5 * theta[1];
            let d2 = (xi - theta[0]).powi(2) + hw * hw;
            let u = hw * hw;
            let grad = [
                theta[2] * u * 2.0 * (xi - theta[0]) / (d2 * d2),
                theta[2] * hw * (xi - theta[0]).powi(2) / (d2 * d2),
                u / d2,
                1.0,
            ];
            let r = yi - model(&theta, xi);
            for a in 0..4 {
                jtr[a] += grad[a] * r;
                for b in 0..4 {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let mut lhs = jtj;
        for a in 0..4 {
            lhs[a][a] += lambda * jtj[a][a].max(1e-30);
        }
        let Some(step) = solve4(lhs, jtr) else {
            lambda *= 8.0;
            if lambda > 1e14 {
                return Err(Error::Fit("normal equations stayed singular".into()));
            }
            continue;
        };
        let trial = [
            theta[0] + step[0],
            theta[1] + step[1],
            theta[2] + step[2],
            theta[3] + step[3],
        ];
        let trial_cost = cost(&trial);
        if trial_cost.is_finite() && trial_cost < current {
            let rel_drop = (current - trial_cost) / current.max(f64::MIN_POSITIVE);
            theta = trial;
            current = trial_cost;
            lambda = (lambda / 4.0).max(1e-14);
            if rel_drop < 1e-14 {
                break;
            }
        } else {
            lambda *= 8.0;
            if lambda > 1e14 {
                break;
            }
        }
    }
    if !current.is_finite() {
        return Err(Error::Fit("fit diverged".into()));
    }

    Ok(PeakFit {
        center: f0_axis + theta[0] * span,
        fwhm: theta[1].abs() * span,
        height: theta[2] * y_scale,
        residual: (current / x.len() as f64).sqrt() * y_scale,
    })
}

#[allow(clippy::needless_range_loop)]
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot_row = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut sum = b[col];
        for k in col + 1..4 {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    Some(x)
}

/// Relative height below which a local maximum is not counted as a peak.
/// Low enough that the weak magnon-like line still registers a couple of
/// coupling widths away from degeneracy.
const PEAK_FLOOR: f64 = 0.02;

/// Recover `(omega_c, gamma_c, gamma_m, g_cm)` from a transmission sweep of
/// `(b0 tesla, spectrum)` pairs:
///
/// * cavity frequency and linewidth from a Lorentzian fit of the most
///   detuned single-peak (bare cavity) spectrum;
/// * coupling from the minimum hybrid splitting across the sweep (vertex of
///   the exactly parabolic splitting^2 vs Larmor-frequency curve);
/// * magnon linewidth from the degenerate hybrid peak widths through
///   `gamma_m = 2 gamma_h - gamma_c`.
pub fn extract_params(spectra: &[(f64, Spectrum)]) -> Result<HybridParams> {
    if spectra.is_empty() {
        return Err(Error::Usage("no spectra supplied".into()));
    }

    struct Classified<'a> {
        b0: f64,
        spectrum: &'a Spectrum,
        peaks: Vec<usize>,
    }
    let mut classified = Vec::with_capacity(spectra.len());
    for (b0, s) in spectra {
        if *b0 < 0.0 {
            return Err(Error::Domain(format!("negative field {b0} T in sweep")));
        }
        classified.push(Classified { b0: *b0, spectrum: s, peaks: find_peaks(s, PEAK_FLOOR) });
    }

    // bare cavity: single-peak spectrum with the Larmor frequency farthest
    // from its own resonance
    let bare = classified
        .iter()
        .filter(|c| c.peaks.len() == 1)
        .max_by(|a, b| {
            let da = (larmor_frequency(a.b0).unwrap_or(0.0)
                - TAU * a.spectrum.frequencies[a.peaks[0]])
                .abs();
            let db = (larmor_frequency(b.b0).unwrap_or(0.0)
                - TAU * b.spectrum.frequencies[b.peaks[0]])
                .abs();
            da.total_cmp(&db)
        })
        .ok_or_else(|| {
            Error::Diagnostic("sweep has no far-detuned (bare cavity) spectrum".into())
        })?;
    let grid = &bare.spectrum.frequencies;
    let bare_fit = fit_lorentzian(bare.spectrum, (grid[0], grid[grid.len() - 1]))?;
    let omega_c = TAU * bare_fit.center;
    let gamma_c = TAU * bare_fit.fwhm;

    // hybrid splitting per two-peak spectrum, from fitted peak centers
    struct SplitPoint {
        omega_m: f64,
        splitting: f64,
        fwhm_sum: f64,
    }
    let mut splits: Vec<SplitPoint> = Vec::new();
    for c in &classified {
        if c.peaks.len() != 2 {
            continue;
        }
        let f = &c.spectrum.frequencies;
        let (p1, p2) = (c.peaks[0], c.peaks[1]);
        let gap = f[p2] - f[p1];
        let fit_peak = |pi: usize| -> Result<PeakFit> {
            let half = 0.45 * gap;
            fit_lorentzian(c.spectrum, (f[pi] - half, f[pi] + half))
        };
        let fit1 = fit_peak(p1)?;
        let fit2 = fit_peak(p2)?;
        splits.push(SplitPoint {
            omega_m: larmor_frequency(c.b0)?,
            splitting: TAU * (fit2.center - fit1.center),
            fwhm_sum: TAU * (fit1.fwhm + fit2.fwhm),
        });
    }
    if splits.len() < 3 {
        return Err(Error::Diagnostic(format!(
            "only {} spectra resolve both hybrid modes; the sweep does not bracket the anticrossing",
            splits.len()
        )));
    }
    splits.sort_by(|a, b| a.omega_m.total_cmp(&b.omega_m));
    let imin = (0..splits.len())
        .min_by(|&a, &b| splits[a].splitting.total_cmp(&splits[b].splitting))
        .unwrap();
    if imin == 0 || imin == splits.len() - 1 {
        return Err(Error::Diagnostic(
            "minimum splitting sits at the edge of the sweep; the anticrossing is not bracketed"
                .into(),
        ));
    }

    // splitting^2 is exactly quadratic in the Larmor frequency; the vertex of
    // the parabola through the three points around the minimum gives both the
    // coupling and the degeneracy field
    let (s0, s1, s2) = (&splits[imin - 1], &splits[imin], &splits[imin + 1]);
    let (x0, x1, x2) = (s0.omega_m, s1.omega_m, s2.omega_m);
    let (y0, y1, y2) = (
        s0.splitting * s0.splitting,
        s1.splitting * s1.splitting,
        s2.splitting * s2.splitting,
    );
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let a2 = (d2 - d1) / (x2 - x0);
    let (g_cm, omega_m_star) = if a2 > 0.0 {
        let xv = 0.5 * (x0 + x1) - 0.5 * d1 / a2;
        let yv = y0 + d1 * (xv - x0) + a2 * (xv - x0) * (xv - x1);
        if yv > 0.0 {
            (yv.sqrt(), xv)
        } else {
            (s1.splitting, x1)
        }
    } else {
        (s1.splitting, x1)
    };

    // mean hybrid width at the degenerate point: first-order width asymmetry
    // cancels in the sum of the two fitted FWHMs
    let gamma_h = 0.5 * s1.fwhm_sum;
    let gamma_m = gamma_m_from_hybrid(gamma_h, gamma_c)?;

    HybridParams::new(omega_c, omega_m_star, gamma_c, gamma_m, g_cm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hybrid_frequencies, GYROMAGNETIC_RATIO};

    fn reference_params() -> HybridParams {
        HybridParams::new(TAU * 4.7e9, TAU * 4.7e9, TAU * 1.1e6, TAU * 3.5e6, TAU * 26.5e6).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn bare_cavity_is_a_lorentzian_of_width_gamma_c() {
        let mut p = reference_params();
        p.g_cm = 0.0;
        let grid = linspace(4.69e9, 4.71e9, 4001);
        let s = transmission_spectrum(&p, &grid).unwrap();
        assert!(rel_err(s.magnitude_sq.iter().cloned().fold(0.0, f64::max), 1.0) < 1e-12);
        let fit = fit_lorentzian(&s, (grid[0], grid[grid.len() - 1])).unwrap();
        assert!(rel_err(fit.center, 4.7e9) < 1e-9);
        assert!(rel_err(fit.fwhm, 1.1e6) < 1e-6);
    }

    #[test]
    fn degenerate_spectrum_splits_by_g() {
        let p = reference_params();
        let grid = linspace(4.6e9, 4.8e9, 8001);
        let s = transmission_spectrum(&p, &grid).unwrap();
        let peaks = find_peaks(&s, 0.05);
        assert_eq!(peaks.len(), 2);
        let gap = 0.45 * (grid[peaks[1]] - grid[peaks[0]]);
        let f1 = fit_lorentzian(&s, (grid[peaks[0]] - gap, grid[peaks[0]] + gap)).unwrap();
        let f2 = fit_lorentzian(&s, (grid[peaks[1]] - gap, grid[peaks[1]] + gap)).unwrap();
        assert!(rel_err(f2.center - f1.center, 26.5e6) < 0.02);
        // both hybrid peaks carry the mean linewidth
        assert!(rel_err(f1.fwhm, 2.3e6) < 0.02);
        assert!(rel_err(f2.fwhm, 2.3e6) < 0.02);
        // sum rule within 3%
        assert!(rel_err(f1.fwhm + f2.fwhm, 1.1e6 + 3.5e6) < 0.03);
    }

    #[test]
    fn symmetric_linewidths_hybridize_symmetrically() {
        let mut p = reference_params();
        p.gamma_m = p.gamma_c;
        let grid = linspace(4.6e9, 4.8e9, 8001);
        let s = transmission_spectrum(&p, &grid).unwrap();
        let peaks = find_peaks(&s, 0.05);
        assert_eq!(peaks.len(), 2);
        let gap = 0.45 * (grid[peaks[1]] - grid[peaks[0]]);
        for &pk in &peaks {
            let fit = fit_lorentzian(&s, (grid[pk] - gap, grid[pk] + gap)).unwrap();
            assert!(rel_err(fit.fwhm, 1.1e6) < 0.02);
        }
    }

    #[test]
    fn peak_centers_approach_hybrid_frequencies() {
        let p = reference_params().with_omega_m(TAU * 4.69e9);
        let grid = linspace(4.6e9, 4.8e9, 16001);
        let s = transmission_spectrum(&p, &grid).unwrap();
        let peaks = find_peaks(&s, 0.05);
        assert_eq!(peaks.len(), 2);
        let (lo, hi) = hybrid_frequencies(&p);
        assert!((TAU * grid[peaks[0]] - lo).abs() < p.gamma_h());
        assert!((TAU * grid[peaks[1]] - hi).abs() < p.gamma_h());
    }

    #[test]
    fn fit_recovers_exact_lorentzian() {
        let center = 4.701e9;
        let fwhm = 1.7e6;
        let height = 0.83;
        let floor = 0.02;
        let grid = linspace(4.69e9, 4.712e9, 3001);
        let hw = 0.5 * fwhm;
        let y: Vec<f64> = grid
            .iter()
            .map(|&f| height * hw * hw / ((f - center).powi(2) + hw * hw) + floor)
            .collect();
        let s = Spectrum { frequencies: grid.clone(), magnitude_sq: y };
        let fit = fit_lorentzian(&s, (grid[0], grid[grid.len() - 1])).unwrap();
        assert!(rel_err(fit.center, center) < 1e-6);
        assert!(rel_err(fit.fwhm, fwhm) < 1e-6);
        assert!(rel_err(fit.height, height) < 1e-6);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn fit_rejects_windows_without_a_single_peak() {
        let p = reference_params();
        let grid = linspace(4.6e9, 4.8e9, 4001);
        let s = transmission_spectrum(&p, &grid).unwrap();
        // whole window has two maxima
        assert!(matches!(
            fit_lorentzian(&s, (4.6e9, 4.8e9)),
            Err(Error::Fit(_))
        ));
        // far tail has none
        assert!(matches!(
            fit_lorentzian(&s, (4.6e9, 4.64e9)),
            Err(Error::Fit(_))
        ));
    }

    fn synthesize_sweep(p: &HybridParams, b0s: &[f64], grid: &[f64]) -> Vec<(f64, Spectrum)> {
        b0s.iter()
            .map(|&b0| {
                let omega_m = larmor_frequency(b0).unwrap();
                (b0, transmission_spectrum(&p.with_omega_m(omega_m), grid).unwrap())
            })
            .collect()
    }

    #[test]
    fn extract_params_round_trips() {
        let truth = reference_params();
        let grid = linspace(4.55e9, 4.85e9, 12001);
        // bare reference at zero field, coarse wings, fine steps across the
        // anticrossing so several spectra resolve both hybrid modes
        let mut b0s = vec![0.0, 0.160, 0.163, 0.172, 0.175];
        b0s.extend((0..=20).map(|i| 0.166 + 0.0002 * i as f64));
        let sweep = synthesize_sweep(&truth, &b0s, &grid);
        let got = extract_params(&sweep).unwrap();
        assert!(rel_err(got.omega_c, truth.omega_c) < 0.02);
        assert!(rel_err(got.gamma_c, truth.gamma_c) < 0.02);
        assert!(rel_err(got.gamma_m, truth.gamma_m) < 0.02);
        assert!(rel_err(got.g_cm, truth.g_cm) < 0.02);
        // degeneracy field: omega_c / gyromagnetic ratio = 167.9 mT
        let b0_star = got.omega_m / GYROMAGNETIC_RATIO;
        assert!((b0_star - 4.7 / 28.0).abs() < 0.0005);
    }

    #[test]
    fn extract_params_requires_bare_and_bracketing() {
        let truth = reference_params();
        let grid = linspace(4.55e9, 4.85e9, 8001);
        // only near-degenerate fields: every spectrum shows two peaks
        let sweep = synthesize_sweep(&truth, &[0.1675, 0.1678, 0.1681], &grid);
        assert!(matches!(extract_params(&sweep), Err(Error::Diagnostic(_))));

        // bare spectra only: anticrossing never bracketed
        let sweep = synthesize_sweep(&truth, &[0.0, 0.01, 0.02], &grid);
        assert!(matches!(extract_params(&sweep), Err(Error::Diagnostic(_))));

        assert!(matches!(extract_params(&[]), Err(Error::Usage(_))));
    }
}
