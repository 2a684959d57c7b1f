//! The four subcommands: dispersion map, bandwidth report, pulsed readout
//! and synthetic spectra. Sweep points are dispatched to the rayon pool the
//! caller installed; rows are collected and written in sweep order, so output
//! bytes do not depend on the worker count.

use std::f64::consts::TAU;

use magnonics::model::{
    self, deposited_power, dynamical_bandwidth, hybrid_frequencies, larmor_frequency,
    transduction_curve, Branch,
};
use magnonics::timedomain::{
    heterodyne_downconvert, jittered_amplitudes, pulse_metric, ring_down, ring_down_step_limit,
    shot_average, HeterodyneConfig, PulseConfig,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::config::{fmt_f64, RunConfig, SweepQuantity, SweepSpec};
use crate::csvout::{render_csv, write_file};
use crate::{svg, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Anticross,
    Bandwidth,
    Pulse,
    Spectrum,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Anticross => "anticross",
            Subcommand::Bandwidth => "bandwidth",
            Subcommand::Pulse => "pulse",
            Subcommand::Spectrum => "spectrum",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "anticross" => Ok(Subcommand::Anticross),
            "bandwidth" => Ok(Subcommand::Bandwidth),
            "pulse" => Ok(Subcommand::Pulse),
            "spectrum" => Ok(Subcommand::Spectrum),
            other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
        }
    }
}

/// Run one subcommand against a validated config. Returns the lines the
/// binary prints to stdout.
pub fn run_subcommand(
    sub: Subcommand,
    cfg: &RunConfig,
    emit_svg: bool,
) -> Result<Vec<String>, CliError> {
    match sub {
        Subcommand::Anticross => cmd_anticross(cfg, emit_svg),
        Subcommand::Bandwidth => cmd_bandwidth(cfg, emit_svg),
        Subcommand::Pulse => cmd_pulse(cfg, emit_svg),
        Subcommand::Spectrum => cmd_spectrum(cfg, emit_svg),
    }
}

fn require_sweep<'c>(
    cfg: &'c RunConfig,
    name: &str,
    which: &str,
    allowed: &[SweepQuantity],
) -> Result<&'c SweepSpec, CliError> {
    let spec = match which {
        "sweep" => cfg.sweep.as_ref(),
        _ => cfg.sweep2.as_ref(),
    };
    let spec = spec.ok_or_else(|| {
        CliError::Config(format!("{name} needs a [{which}] section"))
    })?;
    if !allowed.contains(&spec.quantity) {
        let names: Vec<&str> = allowed.iter().map(|q| q.name()).collect();
        return Err(CliError::Config(format!(
            "{name}: {which}.quantity must be one of {}, got {}",
            names.join("/"),
            spec.quantity.name()
        )));
    }
    Ok(spec)
}

fn out_path(cfg: &RunConfig) -> Result<std::path::PathBuf, CliError> {
    cfg.out
        .clone()
        .ok_or_else(|| CliError::Config("no output path: set run.out or pass --out".into()))
}

/// Larmor-axis sweep values mapped to omega_m (rad/s), whatever the
/// configured external unit.
fn larmor_axis(spec: &SweepSpec) -> Result<Vec<f64>, CliError> {
    spec.values()
        .iter()
        .map(|&v| match spec.quantity {
            SweepQuantity::B0 => larmor_frequency(v).map_err(CliError::from),
            _ => {
                if v < 0.0 {
                    Err(CliError::Config(format!("omega_m sweep reaches {v} Hz < 0")))
                } else {
                    Ok(TAU * v)
                }
            }
        })
        .collect()
}

/// splitmix64 step: independent per-point RNG streams from one run seed.
fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deposited power over a 2-D (omega_m, omega_a) grid, long-format CSV.
fn cmd_anticross(cfg: &RunConfig, emit_svg: bool) -> Result<Vec<String>, CliError> {
    let p = cfg.hybrid_params()?;
    let d = cfg.axion_drive()?;
    let m_spec = require_sweep(cfg, "anticross", "sweep", &[SweepQuantity::B0, SweepQuantity::OmegaM])?;
    let a_spec = require_sweep(cfg, "anticross", "sweep2", &[SweepQuantity::OmegaA])?;
    let omega_ms = larmor_axis(m_spec)?;
    let omega_as: Vec<f64> = a_spec.values().iter().map(|&v| TAU * v).collect();
    if omega_as[0] <= 0.0 {
        return Err(CliError::Config("omega_a sweep must stay positive".into()));
    }

    let grid: Vec<Vec<f64>> = omega_ms
        .par_iter()
        .map(|&omega_m| {
            let pt = p.with_omega_m(omega_m);
            omega_as
                .iter()
                .map(|&omega_a| deposited_power(&pt, &d.with_omega_a(omega_a)))
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(omega_ms.len() * omega_as.len());
    for (im, &omega_m) in omega_ms.iter().enumerate() {
        for (ia, &omega_a) in omega_as.iter().enumerate() {
            rows.push(format!(
                "{},{},{}",
                fmt_f64(omega_m / TAU),
                fmt_f64(omega_a / TAU),
                fmt_f64(grid[im][ia])
            ));
        }
    }

    let out = out_path(cfg)?;
    let csv = render_csv(cfg, "anticross", "omega_m_hz,omega_a_hz,p_ac", &rows);
    write_file(&out, &csv)?;
    let mut report = vec![format!("wrote {} rows to {}", rows.len(), out.display())];
    if emit_svg {
        let xs: Vec<f64> = omega_as.iter().map(|w| w / TAU).collect();
        let ys: Vec<f64> = omega_ms.iter().map(|w| w / TAU).collect();
        let flat: Vec<f64> = grid.iter().flatten().copied().collect();
        let svg_path = out.with_extension("svg");
        write_file(
            &svg_path,
            &svg::heatmap("deposited power", "omega_a (Hz)", "omega_m (Hz)", &xs, &ys, &flat),
        )?;
        report.push(format!("wrote {}", svg_path.display()));
    }
    Ok(report)
}

/// FWHM of the on-branch power versus Larmor frequency, plus the normalized
/// transduction curve on the configured branch grid.
fn cmd_bandwidth(cfg: &RunConfig, emit_svg: bool) -> Result<Vec<String>, CliError> {
    let p = cfg.hybrid_params()?;
    let d = cfg.axion_drive()?;
    let spec = require_sweep(cfg, "bandwidth", "sweep", &[SweepQuantity::OmegaMinus])?;

    let mut report = Vec::new();
    for (branch, label) in [(Branch::Lower, "lower"), (Branch::Upper, "upper")] {
        let bw = dynamical_bandwidth(&p, &d, branch)?;
        report.push(format!("{label}-branch bandwidth: {:.3} MHz", bw / TAU / 1e6));
    }

    let grid: Vec<f64> = spec.values().iter().map(|&v| TAU * v).collect();
    let curve = transduction_curve(&p, &d, cfg.branch, &grid)?;
    let rows: Vec<String> = curve
        .points
        .iter()
        .map(|pt| {
            format!(
                "{},{},{},{},{},{}",
                fmt_f64(pt.omega_minus / TAU),
                fmt_f64(pt.omega_plus / TAU),
                fmt_f64(pt.omega_m / TAU),
                fmt_f64(pt.omega_m / model::GYROMAGNETIC_RATIO),
                fmt_f64(pt.p_ac),
                fmt_f64(pt.q)
            )
        })
        .collect();
    let out = out_path(cfg)?;
    let csv = render_csv(
        cfg,
        "bandwidth",
        "omega_minus_hz,omega_plus_hz,omega_m_hz,b0_tesla,p_ac,q",
        &rows,
    );
    write_file(&out, &csv)?;
    report.push(format!("wrote {} rows to {}", rows.len(), out.display()));
    if emit_svg {
        let series: Vec<(f64, f64)> = curve
            .points
            .iter()
            .map(|pt| {
                let swept = match cfg.branch {
                    Branch::Lower => pt.omega_minus,
                    Branch::Upper => pt.omega_plus,
                };
                (swept / TAU, pt.q)
            })
            .collect();
        let svg_path = out.with_extension("svg");
        write_file(
            &svg_path,
            &svg::line_plot(
                "transduction curve",
                "hybrid frequency (Hz)",
                "q",
                &[("q".to_string(), series)],
            ),
        )?;
        report.push(format!("wrote {}", svg_path.display()));
    }
    Ok(report)
}

struct PulsePoint {
    b0: f64,
    omega_branch: f64,
    q_mean: f64,
    q_std: f64,
    shots: Vec<f64>,
    flagged: bool,
}

/// Pulsed readout across a field sweep: ring-down, heterodyne, windowed
/// pulse energy, shot statistics. The response is linear in the kick, so
/// each field point is integrated once and per-shot jitter scales the metric
/// by the squared amplitude factor.
fn cmd_pulse(cfg: &RunConfig, emit_svg: bool) -> Result<Vec<String>, CliError> {
    let p = cfg.hybrid_params()?;
    cfg.axion_drive()?; // drive must be configured even though only its frequency placement matters here
    let spec = require_sweep(cfg, "pulse", "sweep", &[SweepQuantity::B0])?;
    let pulse = cfg
        .pulse
        .ok_or_else(|| CliError::Config("pulse needs a [pulse] section".into()))?;
    let het = cfg
        .heterodyne
        .ok_or_else(|| CliError::Config("pulse needs a [heterodyne] section".into()))?;
    let b0s = spec.values();

    let tau_h = 1.0 / p.gamma_h();
    let duration = pulse.duration_s.unwrap_or(32.0 * tau_h);
    if duration < 4.0 * tau_h {
        return Err(CliError::Config(format!(
            "pulse.duration_s = {duration} s is shorter than the 4 tau_h metric window"
        )));
    }

    let points: Vec<Result<PulsePoint, CliError>> = b0s
        .par_iter()
        .enumerate()
        .map(|(i, &b0)| -> Result<PulsePoint, CliError> {
            let omega_m = larmor_frequency(b0)?;
            let pt = p.with_omega_m(omega_m);
            let (omega_minus, omega_plus) = hybrid_frequencies(&pt);
            let omega_branch = match cfg.branch {
                Branch::Lower => omega_minus,
                Branch::Upper => omega_plus,
            };
            let omega_lo = match het.lo_hz {
                Some(f) => TAU * f,
                None => omega_branch + TAU * het.lo_offset_hz,
            };
            let hcfg = HeterodyneConfig::new(omega_lo, TAU * het.band_hz)?;
            let kick = PulseConfig::new(pulse.t0_s, C64::from(pulse.amplitude), pulse.jitter)?;
            let dt = pulse.dt_s.unwrap_or(ring_down_step_limit(&pt) / 5.0);
            let trace = ring_down(&pt, &kick, duration, dt)?;
            let baseband = match heterodyne_downconvert(&trace, &hcfg) {
                Ok(r) => r,
                Err(magnonics::Error::Diagnostic(_)) => {
                    return Ok(PulsePoint {
                        b0,
                        omega_branch,
                        q_mean: f64::NAN,
                        q_std: f64::NAN,
                        shots: Vec::new(),
                        flagged: true,
                    });
                }
                Err(e) => return Err(e.into()),
            };
            let q_base = pulse_metric(&baseband, pulse.t0_s, tau_h)?;
            let factors =
                jittered_amplitudes(C64::ONE, pulse.jitter, pulse.shots, point_seed(cfg.seed, i as u64))?;
            let shots: Vec<f64> = factors.iter().map(|f| q_base * f.norm_sqr()).collect();
            let (q_mean, q_std) = shot_average(&shots)?;
            Ok(PulsePoint { b0, omega_branch, q_mean, q_std, shots, flagged: false })
        })
        .collect();
    let points: Vec<PulsePoint> = points.into_iter().collect::<Result<_, _>>()?;

    let max_mean = points
        .iter()
        .filter(|pt| !pt.flagged)
        .map(|pt| pt.q_mean)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_mean > 0.0) {
        return Err(CliError::Numeric(magnonics::Error::Diagnostic(
            "no field point produced a measurable pulse energy".into(),
        )));
    }

    let mut rows = Vec::with_capacity(points.len());
    let mut report = Vec::new();
    for pt in &points {
        if pt.flagged {
            report.push(format!(
                "b0 = {} T: hybrid tone outside the heterodyne band; row flagged",
                pt.b0
            ));
        }
        rows.push(format!(
            "{},{},{},{},{},{}",
            fmt_f64(pt.b0),
            fmt_f64(pt.omega_branch / TAU),
            fmt_f64(pt.q_mean / max_mean),
            fmt_f64(pt.q_std / max_mean),
            pt.shots.len(),
            if pt.flagged { "lo_out_of_band" } else { "ok" }
        ));
    }
    let out = out_path(cfg)?;
    let csv = render_csv(
        cfg,
        "pulse",
        "b0_tesla,omega_minus_hz,q_mean,q_std,n_shots,flag",
        &rows,
    );
    write_file(&out, &csv)?;
    report.push(format!("wrote {} rows to {}", rows.len(), out.display()));

    // raw per-shot metrics next to the summary
    let mut shot_rows = Vec::new();
    for pt in &points {
        for (k, q) in pt.shots.iter().enumerate() {
            shot_rows.push(format!("{},{},{}", fmt_f64(pt.b0), k, fmt_f64(*q)));
        }
    }
    let shots_path = out.with_extension("shots.csv");
    let shots_csv = render_csv(cfg, "pulse", "b0_tesla,shot,q_r", &shot_rows);
    write_file(&shots_path, &shots_csv)?;
    report.push(format!("wrote {} rows to {}", shot_rows.len(), shots_path.display()));

    if emit_svg {
        let series: Vec<(f64, f64)> = points
            .iter()
            .filter(|pt| !pt.flagged)
            .map(|pt| (pt.omega_branch / TAU, pt.q_mean / max_mean))
            .collect();
        let svg_path = out.with_extension("svg");
        write_file(
            &svg_path,
            &svg::line_plot(
                "pulsed transduction",
                "hybrid frequency (Hz)",
                "normalized pulse energy",
                &[("q".to_string(), series)],
            ),
        )?;
        report.push(format!("wrote {}", svg_path.display()));
    }
    Ok(report)
}

/// Transmission spectra for a list of field values.
fn cmd_spectrum(cfg: &RunConfig, emit_svg: bool) -> Result<Vec<String>, CliError> {
    let p = cfg.hybrid_params()?;
    let probe = require_sweep(cfg, "spectrum", "sweep", &[SweepQuantity::OmegaA])?;
    let fields = require_sweep(cfg, "spectrum", "sweep2", &[SweepQuantity::B0])?;
    let grid_hz = probe.values();
    let b0s = fields.values();

    let spectra: Vec<Result<(f64, magnonics::spectroscopy::Spectrum), CliError>> = b0s
        .par_iter()
        .map(|&b0| {
            let omega_m = larmor_frequency(b0)?;
            let s = magnonics::spectroscopy::transmission_spectrum(
                &p.with_omega_m(omega_m),
                &grid_hz,
            )?;
            Ok((b0, s))
        })
        .collect();
    let spectra: Vec<(f64, magnonics::spectroscopy::Spectrum)> =
        spectra.into_iter().collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(b0s.len() * grid_hz.len());
    for (b0, s) in &spectra {
        for (f, v) in s.frequencies.iter().zip(&s.magnitude_sq) {
            rows.push(format!("{},{},{}", fmt_f64(*b0), fmt_f64(*f), fmt_f64(*v)));
        }
    }
    let out = out_path(cfg)?;
    let csv = render_csv(cfg, "spectrum", "b0_tesla,frequency_hz,s21_sq", &rows);
    write_file(&out, &csv)?;
    let mut report = vec![format!("wrote {} rows to {}", rows.len(), out.display())];
    if emit_svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = spectra
            .iter()
            .map(|(b0, s)| {
                (
                    format!("b0 = {b0} T"),
                    s.frequencies.iter().zip(&s.magnitude_sq).map(|(&f, &v)| (f, v)).collect(),
                )
            })
            .collect();
        let svg_path = out.with_extension("svg");
        write_file(
            &svg_path,
            &svg::line_plot("transmission spectra", "frequency (Hz)", "|S|^2", &series),
        )?;
        report.push(format!("wrote {}", svg_path.display()));
    }
    Ok(report)
}
