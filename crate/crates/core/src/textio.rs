use std::io::BufRead;

use crate::error::{Error, Result};

/// Line reader that tracks 1-based line numbers for error messages and
/// leaves the underlying reader positioned right after the last line read.
pub(crate) struct LineReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> LineReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        LineReader {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    pub(crate) fn line_number(&self) -> usize {
        self.line
    }

    /// Next line without its terminator, or `None` at end of stream.
    pub(crate) fn next_line(&mut self) -> Result<Option<&str>> {
        self.buf.clear();
        let n = self.inner.read_line(&mut self.buf)?;
        if n == 0 {
            return Ok(None);
        }
        self.line += 1;
        while self.buf.ends_with('\n') || self.buf.ends_with('\r') {
            self.buf.pop();
        }
        Ok(Some(&self.buf))
    }

    pub(crate) fn expect_line(&mut self, what: &str) -> Result<String> {
        let line = self.line + 1;
        match self.next_line()? {
            Some(s) => Ok(s.to_owned()),
            None => Err(Error::Truncated(format!("expected {what} at line {line}"))),
        }
    }

    pub(crate) fn into_inner(self) -> R {
        self.inner
    }
}

/// Parses `key=value` tokens out of a header line such as `VOCAB v1 N=3 C=1`.
pub(crate) fn header_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

pub(crate) fn header_usize(line: &str, key: &str, lineno: usize) -> Result<usize> {
    header_field(line, key)
        .ok_or_else(|| Error::parse(lineno, format!("missing `{key}=` in header")))?
        .parse()
        .map_err(|_| Error::parse(lineno, format!("`{key}=` is not an integer")))
}
