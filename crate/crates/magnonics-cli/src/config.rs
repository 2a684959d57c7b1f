//! Sectioned key-value configuration: parsing, `--set` overrides, typed
//! validation, canonical serialization and the config digest embedded in
//! every CSV.
//!
//! The format is a flat INI subset: `[section]` headers, `key = value`
//! pairs, `#` or `;` full-line comments. Frequencies are ordinary Hz,
//! fields tesla, times seconds; conversion to angular units happens when
//! the typed config is turned into model objects.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use magnonics::model::{AxionDrive, Branch, HybridParams};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Parsed but untyped config: section -> key -> raw value. Duplicate keys
/// take the last value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

/// Parse configuration text. Never panics, whatever the input.
pub fn parse_config_str(text: &str) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::default();
    let mut section = String::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(CliError::Config(format!(
                    "line {}: unterminated section header `{line}`",
                    lineno + 1
                )));
            };
            let name = name.trim();
            if name.is_empty() {
                return Err(CliError::Config(format!("line {}: empty section name", lineno + 1)));
            }
            section = name.to_string();
            raw.sections.entry(section.clone()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", lineno + 1)));
        }
        if section.is_empty() {
            return Err(CliError::Config(format!(
                "line {}: key `{key}` appears before any [section]",
                lineno + 1
            )));
        }
        raw.sections
            .entry(section.clone())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
    }
    Ok(raw)
}

/// Apply one `--set section.key=value` override on top of a parsed config.
pub fn apply_set_override(raw: &mut RawConfig, spec: &str) -> Result<(), CliError> {
    let Some((path, value)) = spec.split_once('=') else {
        return Err(CliError::Config(format!(
            "override `{spec}` must look like section.key=value"
        )));
    };
    let Some((section, key)) = path.trim().split_once('.') else {
        return Err(CliError::Config(format!(
            "override key `{}` must look like section.key",
            path.trim()
        )));
    };
    let (section, key) = (section.trim(), key.trim());
    if section.is_empty() || key.is_empty() {
        return Err(CliError::Config(format!("override `{spec}` has an empty section or key")));
    }
    raw.sections
        .entry(section.to_string())
        .or_default()
        .insert(key.to_string(), value.trim().to_string());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    B0,
    OmegaM,
    OmegaA,
    OmegaMinus,
}

impl SweepQuantity {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "b0" => Ok(Self::B0),
            "omega_m" => Ok(Self::OmegaM),
            "omega_a" => Ok(Self::OmegaA),
            "omega_minus" => Ok(Self::OmegaMinus),
            other => Err(CliError::Config(format!(
                "unknown sweep quantity `{other}` (expected b0, omega_m, omega_a or omega_minus)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::B0 => "b0",
            Self::OmegaM => "omega_m",
            Self::OmegaA => "omega_a",
            Self::OmegaMinus => "omega_minus",
        }
    }
}

/// Uniform sweep axis. `start`/`stop` are Hz for frequency quantities and
/// tesla for `b0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub quantity: SweepQuantity,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    /// The grid values, in the sweep's external units.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSection {
    pub omega_c_hz: f64,
    pub gamma_c_hz: f64,
    pub gamma_m_hz: f64,
    pub g_cm_hz: f64,
    pub omega_m_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSection {
    pub g_am_hz: f64,
    pub n_a: f64,
    pub omega_a_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSection {
    pub shots: usize,
    pub t0_s: f64,
    pub amplitude: f64,
    pub jitter: f64,
    /// Trace length after the pulse; defaults to 32 hybrid lifetimes, long
    /// enough that the band-limited metric is free of truncation bias.
    pub duration_s: Option<f64>,
    pub dt_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterodyneSection {
    pub band_hz: f64,
    /// Fixed local oscillator. When absent the LO tracks the measured branch
    /// at `lo_offset_hz`, mirroring a receiver retuned with the field.
    pub lo_hz: Option<f64>,
    pub lo_offset_hz: f64,
}

/// Fully typed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemSection,
    pub drive: Option<DriveSection>,
    pub sweep: Option<SweepSpec>,
    pub sweep2: Option<SweepSpec>,
    pub pulse: Option<PulseSection>,
    pub heterodyne: Option<HeterodyneSection>,
    pub branch: Branch,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "system" => Some(&["omega_c_hz", "gamma_c_hz", "gamma_m_hz", "g_cm_hz", "omega_m_hz"]),
        "drive" => Some(&["g_am_hz", "n_a", "omega_a_hz"]),
        "sweep" | "sweep2" => Some(&["quantity", "start", "stop", "points"]),
        "pulse" => Some(&["shots", "t0_s", "amplitude", "jitter", "duration_s", "dt_s"]),
        "heterodyne" => Some(&["band_hz", "lo_hz", "lo_offset_hz"]),
        "bandwidth" => Some(&["branch"]),
        "run" => Some(&["seed", "out"]),
        _ => None,
    }
}

struct Section<'a> {
    name: &'a str,
    map: Option<&'a BTreeMap<String, String>>,
}

impl<'a> Section<'a> {
    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        let Some(value) = self.map.and_then(|m| m.get(key)) else {
            return Ok(None);
        };
        let parsed: f64 = value.parse().map_err(|_| {
            CliError::Config(format!("{}.{key}: `{value}` is not a number", self.name))
        })?;
        if !parsed.is_finite() {
            return Err(CliError::Config(format!(
                "{}.{key}: `{value}` must be finite",
                self.name
            )));
        }
        Ok(Some(parsed))
    }

    fn req_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?.ok_or_else(|| {
            CliError::Config(format!("missing required key {}.{key}", self.name))
        })
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        let Some(value) = self.map.and_then(|m| m.get(key)) else {
            return Ok(None);
        };
        value.parse().map(Some).map_err(|_| {
            CliError::Config(format!(
                "{}.{key}: `{value}` is not a non-negative integer",
                self.name
            ))
        })
    }

    fn str(&self, key: &str) -> Option<&'a str> {
        self.map.and_then(|m| m.get(key)).map(|s| s.as_str())
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        for (sec, keys) in &raw.sections {
            let Some(known) = known_keys(sec) else {
                return Err(CliError::Config(format!("unknown config section [{sec}]")));
            };
            for key in keys.keys() {
                if !known.contains(&key.as_str()) {
                    return Err(CliError::Config(format!("unknown config key {sec}.{key}")));
                }
            }
        }
        let sec = |name: &'static str| Section { name, map: raw.sections.get(name) };

        let system = sec("system");
        if system.map.is_none() {
            return Err(CliError::Config("missing required section [system]".into()));
        }
        let system = SystemSection {
            omega_c_hz: system.req_f64("omega_c_hz")?,
            gamma_c_hz: system.req_f64("gamma_c_hz")?,
            gamma_m_hz: system.req_f64("gamma_m_hz")?,
            g_cm_hz: system.req_f64("g_cm_hz")?,
            omega_m_hz: system.f64("omega_m_hz")?,
        };

        let drive_sec = sec("drive");
        let drive = if drive_sec.map.is_some() {
            Some(DriveSection {
                g_am_hz: drive_sec.req_f64("g_am_hz")?,
                n_a: drive_sec.req_f64("n_a")?,
                omega_a_hz: drive_sec.f64("omega_a_hz")?,
            })
        } else {
            None
        };

        let parse_sweep = |name: &'static str| -> Result<Option<SweepSpec>, CliError> {
            let s = sec(name);
            if s.map.is_none() {
                return Ok(None);
            }
            let quantity = SweepQuantity::parse(s.str("quantity").ok_or_else(|| {
                CliError::Config(format!("missing required key {name}.quantity"))
            })?)?;
            let start = s.req_f64("start")?;
            let stop = s.req_f64("stop")?;
            let points = s.usize("points")?.ok_or_else(|| {
                CliError::Config(format!("missing required key {name}.points"))
            })?;
            if points < 2 {
                return Err(CliError::Config(format!(
                    "{name}.points = {points}: a sweep needs at least 2 points"
                )));
            }
            if !(start < stop) {
                return Err(CliError::Config(format!(
                    "{name}: start ({start}) must be below stop ({stop})"
                )));
            }
            if quantity == SweepQuantity::B0 && start < 0.0 {
                return Err(CliError::Config(format!(
                    "{name}: magnetic field sweep must be non-negative, starts at {start} T"
                )));
            }
            Ok(Some(SweepSpec { quantity, start, stop, points }))
        };
        let sweep = parse_sweep("sweep")?;
        let sweep2 = parse_sweep("sweep2")?;

        let pulse_sec = sec("pulse");
        let pulse = if pulse_sec.map.is_some() {
            let shots = pulse_sec
                .usize("shots")?
                .ok_or_else(|| CliError::Config("missing required key pulse.shots".into()))?;
            if shots == 0 {
                return Err(CliError::Config("pulse.shots must be at least 1".into()));
            }
            Some(PulseSection {
                shots,
                t0_s: pulse_sec.f64("t0_s")?.unwrap_or(0.0),
                amplitude: pulse_sec.f64("amplitude")?.unwrap_or(1.0),
                jitter: pulse_sec.f64("jitter")?.unwrap_or(0.0),
                duration_s: pulse_sec.f64("duration_s")?,
                dt_s: pulse_sec.f64("dt_s")?,
            })
        } else {
            None
        };

        let het_sec = sec("heterodyne");
        let heterodyne = if het_sec.map.is_some() {
            Some(HeterodyneSection {
                band_hz: het_sec.req_f64("band_hz")?,
                lo_hz: het_sec.f64("lo_hz")?,
                lo_offset_hz: het_sec.f64("lo_offset_hz")?.unwrap_or(0.0),
            })
        } else {
            None
        };

        let branch = match sec("bandwidth").str("branch") {
            None | Some("lower") => Branch::Lower,
            Some("upper") => Branch::Upper,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "bandwidth.branch: `{other}` is neither lower nor upper"
                )))
            }
        };

        let run = sec("run");
        let seed = match run.str("seed") {
            None => 0,
            Some(v) => v.parse().map_err(|_| {
                CliError::Config(format!("run.seed: `{v}` is not a non-negative integer"))
            })?,
        };
        let out = run.str("out").map(PathBuf::from);

        Ok(RunConfig {
            system,
            drive,
            sweep,
            sweep2,
            pulse,
            heterodyne,
            branch,
            seed,
            out,
        })
    }

    /// Angular-frequency model parameters. `omega_m` defaults to the cavity
    /// frequency (degenerate tuning) when not configured.
    pub fn hybrid_params(&self) -> Result<HybridParams, CliError> {
        let s = &self.system;
        HybridParams::new(
            TAU * s.omega_c_hz,
            TAU * s.omega_m_hz.unwrap_or(s.omega_c_hz),
            TAU * s.gamma_c_hz,
            TAU * s.gamma_m_hz,
            TAU * s.g_cm_hz,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Drive in angular units; the drive frequency defaults to the cavity.
    pub fn axion_drive(&self) -> Result<AxionDrive, CliError> {
        let d = self
            .drive
            .ok_or_else(|| CliError::Config("missing required section [drive]".into()))?;
        AxionDrive::new(
            TAU * d.g_am_hz,
            d.n_a,
            TAU * d.omega_a_hz.unwrap_or(self.system.omega_c_hz),
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical `section.key = value` lines in fixed order, excluding the
    /// output path: two configs with equal lines produce identical runs.
    pub fn canonical_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let mut push = |key: &str, value: String| lines.push(format!("{key} = {value}"));

        push("bandwidth.branch", match self.branch {
            Branch::Lower => "lower".into(),
            Branch::Upper => "upper".into(),
        });
        if let Some(d) = &self.drive {
            push("drive.g_am_hz", fmt_f64(d.g_am_hz));
            push("drive.n_a", fmt_f64(d.n_a));
            if let Some(v) = d.omega_a_hz {
                push("drive.omega_a_hz", fmt_f64(v));
            }
        }
        if let Some(h) = &self.heterodyne {
            push("heterodyne.band_hz", fmt_f64(h.band_hz));
            if let Some(v) = h.lo_hz {
                push("heterodyne.lo_hz", fmt_f64(v));
            }
            push("heterodyne.lo_offset_hz", fmt_f64(h.lo_offset_hz));
        }
        if let Some(p) = &self.pulse {
            push("pulse.amplitude", fmt_f64(p.amplitude));
            if let Some(v) = p.dt_s {
                push("pulse.dt_s", fmt_f64(v));
            }
            if let Some(v) = p.duration_s {
                push("pulse.duration_s", fmt_f64(v));
            }
            push("pulse.jitter", fmt_f64(p.jitter));
            push("pulse.shots", p.shots.to_string());
            push("pulse.t0_s", fmt_f64(p.t0_s));
        }
        push("run.seed", self.seed.to_string());
        for (name, spec) in [("sweep", &self.sweep), ("sweep2", &self.sweep2)] {
            if let Some(s) = spec {
                push(&format!("{name}.points"), s.points.to_string());
                push(&format!("{name}.quantity"), s.quantity.name().to_string());
                push(&format!("{name}.start"), fmt_f64(s.start));
                push(&format!("{name}.stop"), fmt_f64(s.stop));
            }
        }
        push("system.gamma_c_hz", fmt_f64(self.system.gamma_c_hz));
        push("system.gamma_m_hz", fmt_f64(self.system.gamma_m_hz));
        push("system.g_cm_hz", fmt_f64(self.system.g_cm_hz));
        push("system.omega_c_hz", fmt_f64(self.system.omega_c_hz));
        if let Some(v) = self.system.omega_m_hz {
            push("system.omega_m_hz", fmt_f64(v));
        }
        lines
    }

    /// Hex SHA-256 of the subcommand name and the canonical lines.
    pub fn digest(&self, subcommand: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(subcommand.as_bytes());
        for line in self.canonical_lines() {
            hasher.update(b"\n");
            hasher.update(line.as_bytes());
        }
        let mut hex = String::with_capacity(64);
        for byte in hasher.finalize() {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }
}

use std::f64::consts::TAU;

/// Shortest round-trip exponent form: parsing the text recovers the exact
/// f64, so embedded configs reproduce runs bit for bit.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Recover `(subcommand, raw config)` from the `# cfg` metadata lines of an
/// emitted CSV. Never panics on arbitrary text.
pub fn parse_embedded_config(csv_text: &str) -> Result<(String, RawConfig), CliError> {
    let mut subcommand = None;
    let mut raw = RawConfig::default();
    for line in csv_text.lines() {
        if let Some(rest) = line.strip_prefix("# subcommand: ") {
            subcommand = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("# cfg ") {
            let Some((path, value)) = rest.split_once('=') else {
                return Err(CliError::Config(format!("malformed embedded config line `{line}`")));
            };
            let Some((section, key)) = path.trim().split_once('.') else {
                return Err(CliError::Config(format!(
                    "embedded config key `{}` has no section",
                    path.trim()
                )));
            };
            raw.sections
                .entry(section.trim().to_string())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
    }
    let subcommand = subcommand
        .ok_or_else(|| CliError::Config("no `# subcommand:` line in CSV metadata".into()))?;
    if raw.sections.is_empty() {
        return Err(CliError::Config("no `# cfg` lines in CSV metadata".into()));
    }
    Ok((subcommand, raw))
}
