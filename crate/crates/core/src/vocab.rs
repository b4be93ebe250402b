//! Frequency-ranked vocabulary over a token stream.
//!
//! Ids are assigned by non-increasing count, ties broken by ascending token
//! order, so the mapping is deterministic for a given token multiset. The
//! same vocabulary serves as both the word set and the context set.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::cooccur::CooccurConfig;
use crate::error::{Error, Result};
use crate::tokenize::TokenEvent;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Rank raw counts into a vocabulary: filter by `min_count`, order by
    /// (count desc, token asc), keep the top `vocab_size_cap` entries.
    pub fn from_counts(counts: HashMap<String, u64>, cfg: &CooccurConfig) -> Vocabulary {
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c > 0 && *c >= cfg.min_count)
            .collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(cfg.vocab_size_cap);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        Vocabulary { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|(t, _)| t.as_str())
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.entries.get(id as usize).map(|(_, c)| *c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(t, c)| (t.as_str(), *c))
    }

    /// One "token<SPACE>count" line per entry, in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        for (token, count) in &self.entries {
            writeln!(w, "{token} {count}").map_err(|e| Error::io("writing vocabulary", e))?;
        }
        w.flush().map_err(|e| Error::io("writing vocabulary", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io("reading vocabulary", e))?;
            if line.is_empty() {
                continue;
            }
            let (token, count) = line.rsplit_once(' ').ok_or_else(|| {
                Error::Format(format!("vocabulary line {}: missing count", lineno + 1))
            })?;
            let count: u64 = count.parse().map_err(|_| {
                Error::Format(format!("vocabulary line {}: bad count {count:?}", lineno + 1))
            })?;
            if count == 0 {
                return Err(Error::Format(format!(
                    "vocabulary line {}: zero count",
                    lineno + 1
                )));
            }
            if index.insert(token.to_string(), entries.len() as u32).is_some() {
                return Err(Error::Format(format!(
                    "vocabulary line {}: duplicate token {token:?}",
                    lineno + 1
                )));
            }
            entries.push((token.to_string(), count));
        }
        Ok(Vocabulary { entries, index })
    }
}

/// Count tokens from an event stream and rank them into a vocabulary.
/// An empty stream yields an empty vocabulary.
pub fn build_vocabulary<I>(events: I, cfg: &CooccurConfig) -> Result<Vocabulary>
where
    I: IntoIterator<Item = Result<TokenEvent>>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for ev in events {
        if let TokenEvent::Token(tok) = ev? {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    Ok(Vocabulary::from_counts(counts, cfg))
}
