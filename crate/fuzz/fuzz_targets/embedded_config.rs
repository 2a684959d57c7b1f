#![no_main]

use libfuzzer_sys::fuzz_target;
use magnonics_cli::config::{parse_embedded_config, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((_subcommand, raw)) = parse_embedded_config(text) {
        let _ = RunConfig::from_raw(&raw);
    }
});
