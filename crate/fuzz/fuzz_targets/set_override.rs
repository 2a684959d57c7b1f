#![no_main]

use libfuzzer_sys::fuzz_target;
use magnonics_cli::config::{apply_set_override, parse_config_str, RawConfig, RunConfig};

const BASE: &str = "\
[system]
omega_c_hz = 4.7e9
gamma_c_hz = 1.1e6
gamma_m_hz = 3.5e6
g_cm_hz = 26.5e6
";

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else {
        return;
    };
    let mut raw = parse_config_str(BASE).unwrap_or_else(|_| RawConfig::default());
    if apply_set_override(&mut raw, spec).is_ok() {
        let _ = RunConfig::from_raw(&raw);
    }
});
