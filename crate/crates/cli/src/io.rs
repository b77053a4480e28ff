//! Stream helpers: `-` names stdin/stdout; everything is UTF-8.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use aoci::{parse_index, Index};

use crate::error::CliError;

pub const STDIO: &str = "-";

pub fn read_text(path: &str) -> Result<String, CliError> {
    let bytes = if path == STDIO {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::io("<stdin>", e))?;
        buf
    } else {
        fs::read(path).map_err(|e| CliError::io(path, e))?
    };
    String::from_utf8(bytes)
        .map_err(|e| CliError::io(display_name(path), io::Error::new(io::ErrorKind::InvalidData, e)))
}

pub fn read_index(path: &str) -> Result<(String, Index), CliError> {
    let text = read_text(path)?;
    let index = parse_index(&text).map_err(|source| CliError::Parse {
        path: display_name(path).to_string(),
        source,
    })?;
    Ok((text, index))
}

pub fn write_text(path: &str, text: &str) -> Result<(), CliError> {
    if path == STDIO {
        let mut out = io::stdout().lock();
        return out
            .write_all(text.as_bytes())
            .and_then(|()| out.flush())
            .map_err(|e| CliError::io("<stdout>", e));
    }
    // write beside the target, then rename, so readers never see half a file
    let target = Path::new(path);
    let tmp = sibling(target, ".tmp");
    fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, target).map_err(|e| CliError::io(target, e))
}

pub fn print(text: &str) -> Result<(), CliError> {
    write_text(STDIO, text)
}

fn display_name(path: &str) -> &str {
    if path == STDIO {
        "<stdin>"
    } else {
        path
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// Advisory single-writer lock: `<index>.lock`, created exclusively and
/// removed on drop.
#[derive(Debug)]
pub struct IndexLock {
    path: PathBuf,
    _file: File,
}

impl IndexLock {
    pub fn acquire(index: &Path) -> Result<Self, CliError> {
        let path = sibling(index, ".lock");
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == io::ErrorKind::AlreadyExists {
                    CliError::io(&path, io::Error::new(e.kind(), "index is locked by another writer"))
                } else {
                    CliError::io(&path, e)
                }
            })?;
        Ok(Self { path, _file: file })
    }
}

impl Drop for IndexLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
