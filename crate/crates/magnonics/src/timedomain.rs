//! Time-domain oracle and experiment simulator.
//!
//! Integrates the coupled amplitude equations
//! `i dM/dt = H M + g_am sqrt(n_a) exp(-i omega_a t) (1, 0)^T` with classical
//! fixed-step RK4, simulates pulsed broadband excitation with ring-down,
//! heterodyne down-conversion, and pulse-energy statistics. Everything is
//! deterministic for fixed inputs; jitter takes an explicit seed.
//!
//! The default integration path works in a rotating frame (interaction
//! picture), so the step size is limited by detunings, the coupling and the
//! linewidths instead of the multi-GHz carrier; stored amplitudes are always
//! converted back to the lab frame sample by sample. The lab-frame path
//! remains available to validate the transform.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{hybrid_frequencies, AxionDrive, HybridParams};

/// Integration frame. `Rotating` integrates `M~ = exp(+i omega_ref t) M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    Rotating { omega_ref: f64 },
}

/// Complex magnon and cavity amplitudes on a uniform time grid (lab frame).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    pub times: Vec<f64>,
    pub m_amp: Vec<C64>,
    pub c_amp: Vec<C64>,
    pub params: HybridParams,
}

impl FieldTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid spacing.
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// `|m|^2 + |c|^2` per sample.
    pub fn energies(&self) -> Vec<f64> {
        self.m_amp
            .iter()
            .zip(&self.c_amp)
            .map(|(m, c)| m.norm_sqr() + c.norm_sqr())
            .collect()
    }
}

/// Instantaneous broadband excitation: at `t0` the magnon amplitude jumps to
/// `deposited_magnon_amplitude` while the cavity stays empty. `jitter` is the
/// relative shot-to-shot spread of the deposited pulse energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    pub t0: f64,
    pub deposited_magnon_amplitude: C64,
    pub jitter: f64,
}

impl PulseConfig {
    pub fn new(t0: f64, deposited_magnon_amplitude: C64, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0) {
            return Err(Error::Domain(format!("jitter must be non-negative, got {jitter}")));
        }
        Ok(Self { t0, deposited_magnon_amplitude, jitter })
    }
}

/// Receiver settings: local-oscillator frequency and the width of the
/// down-converted band (both rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterodyneConfig {
    pub omega_lo: f64,
    pub band: f64,
}

impl HeterodyneConfig {
    pub fn new(omega_lo: f64, band: f64) -> Result<Self> {
        if !(omega_lo > 0.0) || !(band > 0.0) {
            return Err(Error::Domain(format!(
                "omega_lo and band must be positive, got ({omega_lo}, {band})"
            )));
        }
        Ok(Self { omega_lo, band })
    }
}

/// Down-converted complex signal r(t) on the trace's time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandTrace {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

/// Fastest angular rate the integrator must resolve in the given frame.
fn frame_rate(p: &HybridParams, omega_drive: Option<f64>, frame: Frame) -> f64 {
    match frame {
        Frame::Lab => p.omega_c.max(p.omega_m).max(omega_drive.unwrap_or(0.0)),
        Frame::Rotating { omega_ref } => {
            let mut rate = (p.omega_m - omega_ref)
                .abs()
                .max((p.omega_c - omega_ref).abs())
                .max(0.5 * p.g_cm)
                .max(0.5 * p.gamma_m)
                .max(0.5 * p.gamma_c);
            if let Some(wa) = omega_drive {
                rate = rate.max((wa - omega_ref).abs());
            }
            rate
        }
    }
}

fn check_step(dt: f64, rate: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("time step must be positive, got {dt}")));
    }
    if rate > 0.0 && dt > 0.05 * TAU / rate {
        return Err(Error::Usage(format!(
            "dt = {dt} s cannot resolve the fastest rate in this frame ({rate} rad/s); \
             need dt < {}",
            0.05 * TAU / rate
        )));
    }
    Ok(())
}

/// RK4 integration of the pair of amplitudes in an arbitrary frame. The state
/// advanced is `M~(t) = exp(+i omega_ref (t - t_start)) M(t)`; stored samples
/// are lab frame. `drive` is the lab-frame strength `g_am sqrt(n_a)`.
#[allow(clippy::too_many_arguments)]
fn integrate(
    p: &HybridParams,
    drive: f64,
    omega_a: f64,
    frame: Frame,
    t_start: f64,
    duration: f64,
    dt: f64,
    initial: (C64, C64),
) -> Result<FieldTrace> {
    check_step(dt, frame_rate(p, (drive != 0.0).then_some(omega_a), frame))?;
    if !(duration > 0.0) {
        return Err(Error::Usage(format!("duration must be positive, got {duration}")));
    }
    let omega_ref = match frame {
        Frame::Lab => 0.0,
        Frame::Rotating { omega_ref } => omega_ref,
    };
    let steps = (duration / dt).round().max(1.0) as usize;

    // frame Hamiltonian H - omega_ref I
    let h_mm = C64::new(p.omega_m - omega_ref, -0.5 * p.gamma_m);
    let h_cc = C64::new(p.omega_c - omega_ref, -0.5 * p.gamma_c);
    let h_mc = C64::from(0.5 * p.g_cm);
    // in-frame drive phase: omega_a t - omega_ref (t - t_start)
    let omega_in_frame = omega_a - omega_ref;
    let phase0 = omega_a * t_start;
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |t_rel: f64, m: C64, c: C64| -> (C64, C64) {
        let f = if drive != 0.0 {
            drive * C64::cis(-(phase0 + omega_in_frame * t_rel))
        } else {
            C64::ZERO
        };
        (minus_i * (h_mm * m + h_mc * c + f), minus_i * (h_mc * m + h_cc * c))
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut m_amp = Vec::with_capacity(steps + 1);
    let mut c_amp = Vec::with_capacity(steps + 1);
    let (mut m, mut c) = initial;
    for k in 0..=steps {
        let t_rel = k as f64 * dt;
        times.push(t_start + t_rel);
        let back = C64::cis(-omega_ref * t_rel);
        m_amp.push(back * m);
        c_amp.push(back * c);
        if k == steps {
            break;
        }
        let (k1m, k1c) = rhs(t_rel, m, c);
        let (k2m, k2c) = rhs(t_rel + 0.5 * dt, m + 0.5 * dt * k1m, c + 0.5 * dt * k1c);
        let (k3m, k3c) = rhs(t_rel + 0.5 * dt, m + 0.5 * dt * k2m, c + 0.5 * dt * k2c);
        let (k4m, k4c) = rhs(t_rel + dt, m + dt * k3m, c + dt * k3c);
        m += dt / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        c += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
    }
    Ok(FieldTrace { times, m_amp, c_amp, params: *p })
}

/// Drive the pair at `omega_a` from `initial` over `[0, t_end]`. Integrates in
/// the frame rotating at the drive frequency, where the steady state of the
/// discrete map coincides with the analytic response amplitude.
pub fn integrate_driven(
    p: &HybridParams,
    d: &AxionDrive,
    t_end: f64,
    dt: f64,
    initial: (C64, C64),
) -> Result<FieldTrace> {
    integrate(
        p,
        d.strength(),
        d.omega_a,
        Frame::Rotating { omega_ref: d.omega_a },
        0.0,
        t_end,
        dt,
        initial,
    )
}

/// Lab-frame variant of [`integrate_driven`]: the step size must resolve the
/// carrier itself. Kept for validating the rotating-frame transform.
pub fn integrate_driven_lab(
    p: &HybridParams,
    d: &AxionDrive,
    t_end: f64,
    dt: f64,
    initial: (C64, C64),
) -> Result<FieldTrace> {
    integrate(p, d.strength(), d.omega_a, Frame::Lab, 0.0, t_end, dt, initial)
}

/// Largest time step [`ring_down`] accepts for this system: 5% of the period
/// of the fastest rate in its rotating frame.
pub fn ring_down_step_limit(p: &HybridParams) -> f64 {
    0.05 * TAU / frame_rate(p, None, Frame::Rotating { omega_ref: p.omega_c })
}

/// Free ring-down after an instantaneous magnon kick at `pulse.t0`: zero
/// drive, initial state `(amplitude, 0)`, trace beginning at `t0` and
/// spanning `duration`. Integrates in the frame rotating at the cavity
/// frequency, so `dt` must resolve the detuning, the coupling and the
/// linewidths rather than the carrier.
pub fn ring_down(
    p: &HybridParams,
    pulse: &PulseConfig,
    duration: f64,
    dt: f64,
) -> Result<FieldTrace> {
    integrate(
        p,
        0.0,
        0.0,
        Frame::Rotating { omega_ref: p.omega_c },
        pulse.t0,
        duration,
        dt,
        (pulse.deposited_magnon_amplitude, C64::ZERO),
    )
}

/// Heterodyne readout: mix the cavity amplitude with the local oscillator,
/// `r(t) = c(t) exp(+i omega_lo t)`, then restrict to the down-converted band
/// by zeroing spectral content outside `|omega| <= band` (ideal rectangular
/// restriction; a real receiver's filter shape is not modeled). When the band
/// covers the whole sampled spectrum the restriction is a no-op and the
/// mixing is exactly amplitude preserving.
///
/// Errors unless one of the hybrid tones of `trace.params` lies inside the
/// band around the local oscillator.
pub fn heterodyne_downconvert(trace: &FieldTrace, h: &HeterodyneConfig) -> Result<BasebandTrace> {
    if trace.len() < 2 {
        return Err(Error::Usage("trace too short to down-convert".into()));
    }
    let (lo_mode, hi_mode) = hybrid_frequencies(&trace.params);
    let offset = (lo_mode - h.omega_lo).abs().min((hi_mode - h.omega_lo).abs());
    if offset >= h.band {
        return Err(Error::Diagnostic(format!(
            "hybrid tone is {} rad/s from the local oscillator, outside the {} rad/s band",
            offset, h.band
        )));
    }

    let mut values: Vec<C64> = trace
        .times
        .iter()
        .zip(&trace.c_amp)
        .map(|(&t, &c)| c * C64::cis(h.omega_lo * t))
        .collect();

    let n = values.len();
    let dt = trace.dt();
    let nyquist = std::f64::consts::PI / dt;
    if h.band < nyquist {
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut values);
        for (j, v) in values.iter_mut().enumerate() {
            let signed = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let omega = TAU * signed / (n as f64 * dt);
            if omega.abs() > h.band {
                *v = C64::ZERO;
            }
        }
        planner.plan_fft_inverse(n).process(&mut values);
        let scale = 1.0 / n as f64;
        for v in &mut values {
            *v *= scale;
        }
    }
    Ok(BasebandTrace { times: trace.times.clone(), values })
}

/// Pulse-energy metric: trapezoidal integral of `|r(t)|^2` over
/// `[t0, t0 + 4 tau_h]` (the pulse time doubles as the window start). The
/// series must cover the window.
pub fn pulse_metric(r: &BasebandTrace, t0: f64, tau_h: f64) -> Result<f64> {
    if !(tau_h > 0.0) {
        return Err(Error::Usage(format!("tau_h must be positive, got {tau_h}")));
    }
    if r.times.len() < 2 {
        return Err(Error::Usage("baseband series too short to integrate".into()));
    }
    let end = t0 + 4.0 * tau_h;
    let slack = 1e-9 * 4.0 * tau_h;
    if r.times[0] > t0 + slack || r.times[r.times.len() - 1] < end - slack {
        return Err(Error::Usage(format!(
            "series [{}, {}] s does not cover the metric window [{}, {}] s",
            r.times[0],
            r.times[r.times.len() - 1],
            t0,
            end
        )));
    }
    let power: Vec<f64> = r.values.iter().map(|v| v.norm_sqr()).collect();
    let mut integral = 0.0;
    for i in 0..r.times.len() - 1 {
        let (ta, tb) = (r.times[i], r.times[i + 1]);
        if tb <= t0 || ta >= end {
            continue;
        }
        let a = ta.max(t0);
        let b = tb.min(end);
        // linear interpolation of |r|^2 at the clipped endpoints
        let span = tb - ta;
        let ya = power[i] + (power[i + 1] - power[i]) * (a - ta) / span;
        let yb = power[i] + (power[i + 1] - power[i]) * (b - ta) / span;
        integral += 0.5 * (ya + yb) * (b - a);
    }
    Ok(integral)
}

/// Mean and sample standard deviation (n-1 denominator) of repeated metrics.
/// A single sample, or a list of identical samples, has zero spread by
/// convention.
pub fn shot_average(metrics: &[f64]) -> Result<(f64, f64)> {
    if metrics.is_empty() {
        return Err(Error::Usage("cannot average an empty list of metrics".into()));
    }
    let n = metrics.len() as f64;
    let mean = metrics.iter().sum::<f64>() / n;
    if metrics.len() == 1 {
        return Ok((mean, 0.0));
    }
    let (lo, hi) = metrics
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo == hi {
        return Ok((mean, 0.0));
    }
    let var = metrics.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Shot-to-shot pulse amplitudes: the base amplitude scaled by a log-normal
/// factor `exp(N(0, (jitter/2)^2))`, so the relative spread of the deposited
/// energy `|a|^2` is `jitter` to first order. Deterministic for a fixed seed.
pub fn jittered_amplitudes(base: C64, jitter: f64, shots: usize, seed: u64) -> Result<Vec<C64>> {
    if !(jitter >= 0.0) {
        return Err(Error::Domain(format!("jitter must be non-negative, got {jitter}")));
    }
    if jitter == 0.0 {
        return Ok(vec![base; shots]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.5 * jitter)
        .map_err(|e| Error::Domain(format!("bad jitter distribution: {e}")))?;
    Ok((0..shots).map(|_| base * normal.sample(&mut rng).exp()).collect())
}
