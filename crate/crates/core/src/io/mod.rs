//! Edge lists, trace files and run configuration.

pub mod config;
pub mod edgelist;
pub mod trace_io;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::{GenerateBlock, IoBlock, McmcBlock, ModelBlock, PerCommunity, RunConfig};
pub use edgelist::{load_edge_list, parse_edge_list, save_edge_list};
pub use trace_io::{load_traces, save_traces};

/// Write to a temporary file next to `path`, then rename over it.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("path", format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// JSON with a trailing newline, written atomically.
pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}
