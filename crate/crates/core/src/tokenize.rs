//! Corpus normalization: byte-level tokenizer with document-boundary events.
//!
//! Tokens are lowercased ASCII alphanumerics; punctuation and non-ASCII
//! bytes are deleted before splitting on whitespace, so the stream never
//! aborts on invalid UTF-8. A blank line marks a document boundary and is
//! reported as [`TokenEvent::Break`] so the window does not span documents.

use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenEvent {
    Token(String),
    /// Document boundary (blank line). The co-occurrence window resets here.
    Break,
}

pub struct Tokenizer<R: BufRead> {
    reader: R,
    current: Vec<u8>,
    /// Token held back while a queued Break is delivered first.
    queued: Option<TokenEvent>,
    /// Any token byte seen on the current line (distinguishes blank lines).
    token_on_line: bool,
    emitted_token: bool,
    pending_break: bool,
    done: bool,
}

impl<R: BufRead> Tokenizer<R> {
    pub fn new(reader: R) -> Self {
        Tokenizer {
            reader,
            current: Vec::new(),
            queued: None,
            token_on_line: false,
            emitted_token: false,
            pending_break: false,
            done: false,
        }
    }

    /// Finish the buffered token. A queued break is delivered first so that
    /// breaks only ever appear between tokens.
    fn complete(&mut self) -> TokenEvent {
        self.emitted_token = true;
        // Bytes are pure ASCII by construction.
        let tok = String::from_utf8(std::mem::take(&mut self.current)).expect("ascii token");
        if self.pending_break {
            self.pending_break = false;
            self.queued = Some(TokenEvent::Token(tok));
            TokenEvent::Break
        } else {
            TokenEvent::Token(tok)
        }
    }

    fn next_event(&mut self) -> Result<Option<TokenEvent>> {
        loop {
            if let Some(ev) = self.queued.take() {
                return Ok(Some(ev));
            }
            if self.done {
                return Ok(None);
            }
            let buf = self
                .reader
                .fill_buf()
                .map_err(|e| Error::io("reading corpus", e))?;
            if buf.is_empty() {
                self.done = true;
                if !self.current.is_empty() {
                    return Ok(Some(self.complete()));
                }
                continue;
            }
            let mut consumed = 0;
            let mut out = None;
            for &b in buf {
                consumed += 1;
                match b {
                    b'a'..=b'z' | b'0'..=b'9' => {
                        self.current.push(b);
                        self.token_on_line = true;
                    }
                    b'A'..=b'Z' => {
                        self.current.push(b | 0x20);
                        self.token_on_line = true;
                    }
                    b'\n' => {
                        if !self.token_on_line && self.emitted_token {
                            self.pending_break = true;
                        }
                        self.token_on_line = false;
                        if !self.current.is_empty() {
                            out = Some(self.complete());
                            break;
                        }
                    }
                    b' ' | b'\t' | b'\r' | b'\x0b' | b'\x0c'
                        if !self.current.is_empty() =>
                    {
                        out = Some(self.complete());
                        break;
                    }
                    // Punctuation, control bytes and non-ASCII are deleted:
                    // "don't" tokenizes as "dont", invalid UTF-8 is dropped.
                    _ => {}
                }
            }
            self.reader.consume(consumed);
            if let Some(ev) = out {
                return Ok(Some(ev));
            }
        }
    }
}

impl<R: BufRead> Iterator for Tokenizer<R> {
    type Item = Result<TokenEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_event().transpose()
    }
}

/// Convenience for tests and small inputs: tokens only, boundaries dropped.
pub fn tokenize_str(text: &str) -> Vec<String> {
    Tokenizer::new(text.as_bytes())
        .filter_map(|ev| match ev {
            Ok(TokenEvent::Token(t)) => Some(t),
            _ => None,
        })
        .collect()
}
