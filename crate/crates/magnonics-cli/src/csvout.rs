//! CSV emission with reproducibility metadata.
//!
//! Every file starts with `#`-prefixed lines carrying the tool version, the
//! subcommand, the config digest and the full canonical configuration, so a
//! result file is also a recipe for reproducing itself byte for byte.

use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Assemble the complete CSV text: metadata, header row, data rows.
pub fn render_csv(cfg: &RunConfig, subcommand: &str, header: &str, rows: &[String]) -> String {
    let mut text = String::new();
    text.push_str(&format!("# magnonics {TOOL_VERSION}\n"));
    text.push_str(&format!("# subcommand: {subcommand}\n"));
    text.push_str(&format!("# config_digest: sha256:{}\n", cfg.digest(subcommand)));
    for line in cfg.canonical_lines() {
        text.push_str("# cfg ");
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    text
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(contents.as_bytes()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
