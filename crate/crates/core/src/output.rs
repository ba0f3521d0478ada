//! Result files: traces, steady-state tables, run metadata, plot script.
//!
//! All files are written atomically (temp file in the target directory,
//! then rename) so a crash mid-run never leaves a truncated artifact.
//! Floats are printed in Rust's shortest round-trip form, which both
//! preserves the value exactly on re-parse and keeps output byte-stable
//! across runs with the same seed.

use std::io::Write;
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// Write `bytes` to `path` via a temporary sibling file and rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(display.clone(), std::io::Error::other("not a file path")))?;
    let mut tmp = path.to_path_buf();
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp.{}", std::process::id()));
    tmp.set_file_name(tmp_name);

    let write = (|| -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(())
    })();
    if let Err(e) = write {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(display, e));
    }
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(display, e)
    })
}
