use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::CliError;

pub enum Output<'a> {
    Stdout,
    File(&'a Path),
}

impl<'a> From<Option<&'a Path>> for Output<'a> {
    fn from(path: Option<&'a Path>) -> Self {
        match path {
            Some(p) if p != Path::new("-") => Output::File(p),
            _ => Output::Stdout,
        }
    }
}

/// Writes `bytes` to stdout, or atomically to a file via a sibling temp file.
pub fn write_output(target: Output<'_>, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |path: &Path, e: io::Error| CliError::Input(format!("{}: {e}", path.display()));
    match target {
        Output::Stdout => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| fail(Path::new("<stdout>"), e))
        }
        Output::File(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = NamedTempFile::new_in(dir).map_err(|e| fail(path, e))?;
            tmp.write_all(bytes).map_err(|e| fail(path, e))?;
            tmp.as_file().sync_all().map_err(|e| fail(path, e))?;
            tmp.persist(path).map_err(|e| fail(path, e.error))?;
            Ok(())
        }
    }
}
