//! Small helpers shared by the text file formats.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes to a sibling temporary file, then renames it over `path`.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(contents.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Line cursor over a `key value...` text format with 1-based line numbers.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a Path,
    pub line: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str, origin: &'a Path) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            origin,
            line: 0,
        }
    }

    pub fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.origin, self.line, message)
    }

    /// Next non-blank line.
    pub fn next_line(&mut self) -> Result<&'a str> {
        for (no, l) in self.inner.by_ref() {
            self.line = no + 1;
            if !l.trim().is_empty() {
                return Ok(l.trim());
            }
        }
        Err(Error::parse(self.origin, self.line + 1, "unexpected end of file"))
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    pub fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let l = self.next_line()?;
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok(toks.collect()),
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    pub fn keyed_f64(&mut self, key: &str) -> Result<f64> {
        let toks = self.keyed(key)?;
        if toks.len() != 1 {
            return Err(self.err(format!("`{key}` takes exactly one value")));
        }
        self.parse_f64(toks[0])
    }

    pub fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let toks = self.keyed(key)?;
        if toks.len() != 1 {
            return Err(self.err(format!("`{key}` takes exactly one value")));
        }
        self.parse_usize(toks[0])
    }

    /// `key v1 v2 ...` with exactly `len` values.
    pub fn keyed_vec(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let toks = self.keyed(key)?;
        if toks.len() != len {
            return Err(self.err(format!("`{key}` expects {len} values, found {}", toks.len())));
        }
        toks.iter().map(|t| self.parse_f64(t)).collect()
    }

    pub fn parse_f64(&self, tok: &str) -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("not a finite number: {tok:?}")))
    }

    pub fn parse_usize(&self, tok: &str) -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| self.err(format!("not a nonnegative integer: {tok:?}")))
    }
}

pub(crate) fn join<T: std::fmt::Display>(vals: impl IntoIterator<Item = T>) -> String {
    vals.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}
