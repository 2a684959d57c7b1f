#![no_main]

use libfuzzer_sys::fuzz_target;
use magnonics_cli::config::{parse_config_str, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // parsing and typed validation must never panic, whatever the input
    if let Ok(raw) = parse_config_str(text) {
        if let Ok(cfg) = RunConfig::from_raw(&raw) {
            // canonical form must survive its own round trip
            let _ = cfg.digest("fuzz");
            let _ = cfg.canonical_lines();
        }
    }
});
