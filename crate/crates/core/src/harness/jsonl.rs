use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn write<W: Write, T: Serialize>(w: &mut W, value: &T, path: &Path) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(|e| Error::json(path.display().to_string(), e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// Every non-blank line of a JSONL file, parsed.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e)))
        .collect()
}
