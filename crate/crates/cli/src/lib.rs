//! Configuration parsing, output formats and subcommands of the `wqed` tool.

pub mod commands;
pub mod config;
pub mod emit;

use std::path::{Path, PathBuf};

/// Environment variable that redirects every output file into a directory.
pub const OUTPUT_DIR_VAR: &str = "WQED_OUTPUT_DIR";

/// Output stem: `output.path` if set, else the config file's stem next to
/// it; `dir_override` replaces the directory part.
pub fn output_base(config_path: &Path, output_path: Option<&Path>, dir_override: Option<&Path>) -> PathBuf {
    let base = match output_path {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => config_path.parent().unwrap_or(Path::new("")).join(p),
        None => config_path.with_extension(""),
    };
    match (dir_override, base.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => base,
    }
}
