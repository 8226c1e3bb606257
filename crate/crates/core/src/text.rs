//! Line-oriented reading shared by the plain-text formats.

use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct LineCursor {
    lines: Vec<String>,
    pos: usize,
    source: String,
}

impl LineCursor {
    pub(crate) fn new(reader: impl BufRead, source: &str) -> Result<Self> {
        let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
        Ok(LineCursor {
            lines,
            pos: 0,
            source: source.to_string(),
        })
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.source.clone(),
            line: self.pos,
            message: message.into(),
        }
    }

    /// Next line that is not blank and not a `#` comment, trimmed.
    pub(crate) fn next_content(&mut self) -> Option<String> {
        while self.pos < self.lines.len() {
            self.pos += 1;
            let t = self.lines[self.pos - 1].trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some(t.to_string());
            }
        }
        None
    }

    pub(crate) fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_content().ok_or_else(|| {
            self.pos = self.lines.len() + 1;
            self.error(format!("unexpected end of input, expected {what}"))
        })
    }

    /// `key value` line with the given key.
    pub(crate) fn keyed<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.expect_line(key)?;
        let mut it = line.splitn(2, char::is_whitespace);
        if it.next() != Some(key) {
            return Err(self.error(format!("expected `{key}`, found `{line}`")));
        }
        let rest = it.next().unwrap_or("").trim();
        rest.parse().map_err(|_| self.error(format!("cannot parse value of `{key}`: `{rest}`")))
    }

    /// Exactly `count` whitespace-separated values from the next line.
    pub(crate) fn values<T: FromStr>(&mut self, count: usize, what: &str) -> Result<Vec<T>> {
        let line = self.expect_line(what)?;
        let parsed: Vec<T> = line
            .split_whitespace()
            .map(|tok| tok.parse().map_err(|_| self.error(format!("cannot parse `{tok}` in {what}"))))
            .collect::<Result<_>>()?;
        if parsed.len() != count {
            return Err(self.error(format!("{what}: expected {count} values, found {}", parsed.len())));
        }
        Ok(parsed)
    }

    pub(crate) fn expect_tag(&mut self, tag: &str) -> Result<()> {
        let line = self.expect_line(tag)?;
        if line != tag {
            return Err(self.error(format!("expected section `{tag}`, found `{line}`")));
        }
        Ok(())
    }

    pub(crate) fn finish(&mut self) -> Result<()> {
        match self.next_content() {
            None => Ok(()),
            Some(extra) => Err(self.error(format!("trailing content `{extra}`"))),
        }
    }
}
