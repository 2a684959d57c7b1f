//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured value once its assertions hold.
//!
//! Run with `cargo test -p magnonics-cli --test acceptance -- --nocapture`.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Instant;

use magnonics::model::{
    dynamical_bandwidth, gamma_m_from_hybrid, hybrid_frequencies, multi_mode_response,
    on_resonance_power, response_amplitude, AxionDrive, Branch, HybridParams, MagnonMode,
    ModeSystem,
};
use magnonics::spectroscopy::{fit_lorentzian, transmission_spectrum};
use magnonics::timedomain::{integrate_driven, ring_down, PulseConfig};
use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_params() -> HybridParams {
    HybridParams::new(TAU * 4.7e9, TAU * 4.7e9, TAU * 1.1e6, TAU * 3.5e6, TAU * 26.5e6).unwrap()
}

fn reference_drive() -> AxionDrive {
    AxionDrive::new(TAU * 1e-7, TAU * 1e24, TAU * 4.7e9).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn magnonics_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magnonics"))
}

/// Criterion 1: lower-branch dynamical bandwidth of the reference system is
/// 64 MHz within 10%, in under a second.
#[test]
fn acceptance_01_dynamical_bandwidth() {
    let start = Instant::now();
    let bw = dynamical_bandwidth(&reference_params(), &reference_drive(), Branch::Lower).unwrap();
    let elapsed = start.elapsed();
    let bw_mhz = bw / TAU / 1e6;
    assert!(rel_err(bw, TAU * 64e6) <= 0.10, "bandwidth {bw_mhz} MHz vs 64 MHz");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: dynamical bandwidth {bw_mhz:.2} MHz (64 MHz +-10%), {elapsed:?}");
}

/// Criterion 2: the hybrid splitting over a Larmor sweep bottoms out at
/// exactly the coupling, at the degeneracy point.
#[test]
fn acceptance_02_minimum_mode_splitting() {
    let p = reference_params();
    let mut min_split = f64::INFINITY;
    let mut argmin = 0.0;
    for i in -2000..=2000i32 {
        let omega_m = p.omega_c + TAU * 100e3 * i as f64;
        let (lo, hi) = hybrid_frequencies(&p.with_omega_m(omega_m));
        if hi - lo < min_split {
            min_split = hi - lo;
            argmin = omega_m;
        }
    }
    assert!(rel_err(min_split, p.g_cm) <= 1e-9);
    assert_eq!(argmin, p.omega_c);
    println!(
        "ACCEPTANCE 2 PASS: minimum splitting {:.6} MHz = g_cm at omega_m = omega_c",
        min_split / TAU / 1e6
    );
}

/// Criterion 3: over 20 seeded random systems the time-domain steady state
/// reproduces the analytic response to 1e-4, within 30 s.
#[test]
fn acceptance_03_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let omega_c = TAU * 4.7e9;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let log_span = (10.0f64 / 0.1).ln();
        let gamma_c = TAU * 0.1e6 * (rng.random_range(0.0..1.0) * log_span).exp();
        let gamma_m = TAU * 0.1e6 * (rng.random_range(0.0..1.0) * log_span).exp();
        let g = TAU * 1e6 * (rng.random_range(0.0..1.0) * (100.0f64).ln()).exp();
        let p = HybridParams::new(
            omega_c,
            omega_c + g * rng.random_range(-5.0..5.0),
            gamma_c,
            gamma_m,
            g,
        )
        .unwrap();
        let d = AxionDrive::new(TAU * 1e-7, TAU * 1e24, omega_c + g * rng.random_range(-5.0..5.0))
            .unwrap();

        let gamma_min = gamma_c.min(gamma_m);
        let t_end = 22.0 / gamma_min;
        let rate = (p.omega_m - d.omega_a)
            .abs()
            .max((p.omega_c - d.omega_a).abs())
            .max(0.5 * g)
            .max(0.5 * gamma_m.max(gamma_c));
        let dt = 0.01 * TAU / rate;
        let trace = integrate_driven(&p, &d, t_end, dt, (C64::ZERO, C64::ZERO)).unwrap();
        let got = trace.c_amp.last().unwrap().norm();
        let want = response_amplitude(&p, &d).cavity().norm();
        worst = worst.max(rel_err(got, want));
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-4, "worst steady-state mismatch {worst}");
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 3 PASS: 20 random systems, worst |c| vs |A_c| mismatch {worst:.2e}, {elapsed:?}"
    );
}

/// Criterion 4: the fitted bare-cavity quality factor matches
/// omega_c / gamma_c = 4273 and the quoted 4300 within 2%.
#[test]
fn acceptance_04_cavity_quality_factor() {
    let p = reference_params().with_omega_m(0.0); // zero-field spectrum
    let grid: Vec<f64> = (0..=4000).map(|i| 4.69e9 + i as f64 * 20e9 / 4e6).collect();
    let s = transmission_spectrum(&p, &grid).unwrap();
    let fit = fit_lorentzian(&s, (grid[0], grid[grid.len() - 1])).unwrap();
    let q = fit.center / fit.fwhm;
    assert!(rel_err(q, 4.7e9 / 1.1e6) < 0.005, "Q = {q}");
    assert!(rel_err(q, 4300.0) < 0.02, "Q = {q} vs 4300");
    println!("ACCEPTANCE 4 PASS: bare-cavity Q = {q:.0} (4273 expected, 4300 quoted, within 2%)");
}

/// Criterion 5: the degenerate hybrid peak is (gamma_c + gamma_m)/2 wide
/// within 2% and inverts back to the magnon linewidth.
#[test]
fn acceptance_05_linewidth_relation() {
    let p = reference_params();
    let grid: Vec<f64> = (0..=8000).map(|i| 4.6e9 + i as f64 * 25e3).collect();
    let s = transmission_spectrum(&p, &grid).unwrap();
    let peaks = magnonics::spectroscopy::find_peaks(&s, 0.05);
    assert_eq!(peaks.len(), 2);
    let gap = 0.45 * (grid[peaks[1]] - grid[peaks[0]]);
    let fit = fit_lorentzian(&s, (grid[peaks[0]] - gap, grid[peaks[0]] + gap)).unwrap();
    assert!(rel_err(fit.fwhm, 2.3e6) < 0.02, "gamma_h = {} Hz", fit.fwhm);
    let gamma_m = gamma_m_from_hybrid(TAU * 2.3e6, TAU * 1.1e6).unwrap();
    assert!(rel_err(gamma_m, TAU * 3.5e6) < 1e-15);
    println!(
        "ACCEPTANCE 5 PASS: hybrid peak FWHM {:.3} MHz (2.3 expected), inverts to gamma_m = 3.5 MHz",
        fit.fwhm / 1e6
    );
}

/// Criterion 6: N identical magnon modes behave as a single bright mode with
/// sqrt(N)-enhanced coupling and drive, to 1e-12.
#[test]
fn acceptance_06_collective_enhancement() {
    let p = reference_params().with_omega_m(TAU * 4.693e9);
    let d = reference_drive().with_omega_a(TAU * 4.688e9);
    let mut worst = 0.0f64;
    for n in [2usize, 3, 10] {
        let s = ModeSystem::new(
            vec![MagnonMode::new(p.omega_m, p.gamma_m, p.g_cm); n],
            p.omega_c,
            p.gamma_c,
        )
        .unwrap();
        let multi = multi_mode_response(&s, &d).cavity();
        let bright = HybridParams { g_cm: (n as f64).sqrt() * p.g_cm, ..p };
        let boosted = AxionDrive { g_am: (n as f64).sqrt() * d.g_am, ..d };
        let single = response_amplitude(&bright, &boosted).cavity();
        worst = worst.max((multi - single).norm() / single.norm());
    }
    assert!(worst < 1e-12, "worst bright-mode mismatch {worst}");
    println!("ACCEPTANCE 6 PASS: sqrt(N) collective enhancement, worst mismatch {worst:.2e}");
}

/// Criterion 7: |A_c| is symmetric under joint negation of both detunings,
/// to 1e-12 over 1000 random points.
#[test]
fn acceptance_07_reflection_symmetry() {
    let p = reference_params();
    let d = reference_drive();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let delta = p.g_cm * rng.random_range(-4.0..4.0);
        let mu = p.g_cm * rng.random_range(-4.0..4.0);
        let plus = response_amplitude(
            &p.with_omega_m(p.omega_c + mu),
            &d.with_omega_a(p.omega_c + delta),
        )
        .cavity()
        .norm();
        let minus = response_amplitude(
            &p.with_omega_m(p.omega_c - mu),
            &d.with_omega_a(p.omega_c - delta),
        )
        .cavity()
        .norm();
        worst = worst.max(rel_err(plus, minus));
    }
    assert!(worst < 1e-12, "worst asymmetry {worst}");
    println!("ACCEPTANCE 7 PASS: reflection symmetry of |A_c| over 1000 points, worst {worst:.2e}");
}

/// Criterion 8: the bundled pulsed-readout config reproduces the analytic
/// transduction curve inside the dynamical bandwidth, within 5% plus shot
/// noise, in under two minutes.
#[test]
fn acceptance_08_pulsed_sweep_replica() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pulse.csv");
    let status = magnonics_bin()
        .args(["pulse", "--config"])
        .arg(config_path("fig4.ini"))
        .arg("--out")
        .arg(&out)
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();

    let p = reference_params();
    let d = reference_drive();
    struct Row {
        omega_minus: f64,
        q_mean: f64,
        q_std: f64,
        n: f64,
    }
    let rows: Vec<Row> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("b0_tesla"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[5], "ok", "flagged row in reference run: {l}");
            Row {
                omega_minus: TAU * f[1].parse::<f64>().unwrap(),
                q_mean: f[2].parse().unwrap(),
                q_std: f[3].parse().unwrap(),
                n: f[4].parse().unwrap(),
            }
        })
        .collect();
    assert_eq!(rows.len(), 15);

    let analytic: Vec<f64> = rows
        .iter()
        .map(|r| on_resonance_power(&p, &d, r.omega_minus, Branch::Lower).unwrap())
        .collect();
    let max_an = analytic.iter().cloned().fold(0.0, f64::max);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (row, an) in rows.iter().zip(&analytic) {
        let q_an = an / max_an;
        if q_an < 0.5 {
            continue; // outside the dynamical bandwidth
        }
        let sem = row.q_std / row.n.sqrt();
        let tol = 0.05 * q_an + 3.0 * sem;
        let dev = (row.q_mean - q_an).abs();
        assert!(
            dev <= tol,
            "point at {:.4} GHz: measured {} vs analytic {q_an}, tolerance {tol}",
            row.omega_minus / TAU / 1e9,
            row.q_mean
        );
        worst = worst.max(dev / q_an);
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} points inside the bandwidth");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 8 PASS: pulsed sweep tracks the transduction curve on {checked} in-band points, worst relative deviation {worst:.3}, {elapsed:?}"
    );
}

/// Criterion 9: degenerate ring-down energy decays at the hybrid rate
/// within 1%.
#[test]
fn acceptance_09_ring_down_decay() {
    let p = reference_params();
    let tau_h = 1.0 / p.gamma_h();
    let pulse = PulseConfig::new(0.0, C64::ONE, 0.0).unwrap();
    let trace = ring_down(&p, &pulse, 4.0 * tau_h, 1e-11).unwrap();
    let energies = trace.energies();
    let n = energies.len() as f64;
    let (mut st, mut se, mut stt, mut ste) = (0.0, 0.0, 0.0, 0.0);
    for (t, e) in trace.times.iter().zip(&energies) {
        let y = e.ln();
        st += t;
        se += y;
        stt += t * t;
        ste += t * y;
    }
    let slope = (n * ste - st * se) / (n * stt - st * st);
    assert!(rel_err(-slope, p.gamma_h()) < 0.01, "rate {} vs {}", -slope, p.gamma_h());
    println!(
        "ACCEPTANCE 9 PASS: ring-down decay rate {:.4} MHz vs gamma_h {:.4} MHz (1%)",
        -slope / TAU / 1e6,
        p.gamma_h() / TAU / 1e6
    );
}

/// Criterion 10: identical seeds give byte-identical CSVs, independent of
/// worker count.
#[test]
fn acceptance_10_deterministic_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "4", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = magnonics_bin()
            .args(["pulse", "--config"])
            .arg(config_path("fig4.ini"))
            .args([
                "--set",
                "sweep.points=5",
                "--set",
                "pulse.shots=20",
                "--seed",
                "7",
                "--jobs",
                jobs,
                "--out",
            ])
            .arg(&out)
            .stdout(Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((
            std::fs::read(&out).unwrap(),
            std::fs::read(out.with_extension("shots.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    println!(
        "ACCEPTANCE 10 PASS: three runs (jobs 1/4/2, seed 7) produced byte-identical CSVs ({} + {} bytes)",
        outputs[0].0.len(),
        outputs[0].1.len()
    );
}
