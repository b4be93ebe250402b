//! Windowed co-occurrence counting with memory-bounded shards.
//!
//! Every in-vocabulary token pair at distance `d <= window` inside one
//! document segment contributes `1/d` to both ordered entries `(w, c)` and
//! `(c, w)`. Out-of-vocabulary tokens still occupy positions, so distances
//! are measured over the raw token sequence. Counts accumulate in a hash
//! map that spills sorted runs to temporary files once it reaches the
//! configured shard size; a k-way merge then produces the sorted record
//! list, so corpora larger than RAM are supported.

use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fs::File;
use std::hash::{BuildHasherDefault, Hasher};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::binio;
use crate::error::{Error, Result};
use crate::tokenize::TokenEvent;
use crate::vocab::Vocabulary;

pub const RECORD_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooccurrenceRecord {
    pub word_id: u32,
    pub context_id: u32,
    /// Accumulated 1/d weights; always > 0 for stored records.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct CooccurConfig {
    /// Symmetric window size `win`; pairs up to this distance are counted.
    pub window: usize,
    /// Kept for completeness; only symmetric windows are implemented.
    pub symmetric: bool,
    pub vocab_size_cap: usize,
    pub min_count: u64,
    /// Approximate in-memory accumulator budget before spilling a run.
    pub shard_bytes: usize,
}

impl Default for CooccurConfig {
    fn default() -> Self {
        CooccurConfig {
            window: 15,
            symmetric: true,
            vocab_size_cap: 71_000,
            min_count: 5,
            shard_bytes: 1 << 30,
        }
    }
}

/// Sparse co-occurrence matrix: records sorted by (word_id, context_id),
/// plus per-row offsets for contiguous row access.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    words: usize,
    contexts: usize,
    records: Vec<CooccurrenceRecord>,
    row_offsets: Vec<usize>,
}

impl CooccurrenceMatrix {
    /// Build from records that are already sorted by (word_id, context_id)
    /// and free of duplicates; validates ids, ordering and positivity.
    pub fn from_sorted_records(
        words: usize,
        contexts: usize,
        records: Vec<CooccurrenceRecord>,
    ) -> Result<CooccurrenceMatrix> {
        for (i, r) in records.iter().enumerate() {
            if (r.word_id as usize) >= words || (r.context_id as usize) >= contexts {
                return Err(Error::Validation(format!(
                    "record {i}: pair ({}, {}) out of range for {words}x{contexts}",
                    r.word_id, r.context_id
                )));
            }
            if !(r.value.is_finite() && r.value > 0.0) {
                return Err(Error::Validation(format!(
                    "record {i}: non-positive value {}",
                    r.value
                )));
            }
            if i > 0 {
                let p = &records[i - 1];
                if (p.word_id, p.context_id) >= (r.word_id, r.context_id) {
                    return Err(Error::Validation(format!(
                        "records not strictly sorted at index {i}"
                    )));
                }
            }
        }
        let mut row_offsets = vec![0usize; words + 1];
        for r in &records {
            row_offsets[r.word_id as usize + 1] += 1;
        }
        for w in 0..words {
            row_offsets[w + 1] += row_offsets[w];
        }
        Ok(CooccurrenceMatrix { words, contexts, records, row_offsets })
    }

    /// Build from unsorted (possibly duplicated) entries, summing duplicates.
    /// Intended for tests and synthetic datasets.
    pub fn from_entries(
        words: usize,
        contexts: usize,
        entries: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<CooccurrenceMatrix> {
        let mut acc: HashMap<u64, f64> = HashMap::new();
        for (w, c, x) in entries {
            *acc.entry(pair_key(w, c)).or_insert(0.0) += x;
        }
        let mut flat: Vec<(u64, f64)> = acc.into_iter().collect();
        flat.sort_unstable_by_key(|&(k, _)| k);
        let records = flat
            .into_iter()
            .map(|(k, value)| CooccurrenceRecord {
                word_id: (k >> 32) as u32,
                context_id: k as u32,
                value,
            })
            .collect();
        CooccurrenceMatrix::from_sorted_records(words, contexts, records)
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CooccurrenceRecord] {
        &self.records
    }

    /// Record range of one word row.
    pub fn row_range(&self, word_id: u32) -> std::ops::Range<usize> {
        self.row_offsets[word_id as usize]..self.row_offsets[word_id as usize + 1]
    }

    pub fn row(&self, word_id: u32) -> &[CooccurrenceRecord] {
        &self.records[self.row_range(word_id)]
    }

    /// Index of the record for (w, c), if observed.
    pub fn find(&self, word_id: u32, context_id: u32) -> Option<usize> {
        let range = self.row_range(word_id);
        let row = &self.records[range.clone()];
        row.binary_search_by_key(&context_id, |r| r.context_id)
            .ok()
            .map(|i| range.start + i)
    }

    /// Binary record section plus an adjacent `<path>.meta` text file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        for r in &self.records {
            binio::write_u32(&mut w, r.word_id)
                .and_then(|_| binio::write_u32(&mut w, r.context_id))
                .and_then(|_| binio::write_f64(&mut w, r.value))
                .map_err(|e| Error::io("writing co-occurrence records", e))?;
        }
        w.flush().map_err(|e| Error::io("writing co-occurrence records", e))?;
        let meta = format!(
            "words={}\ncontexts={}\nrecords={}\n",
            self.words,
            self.contexts,
            self.records.len()
        );
        std::fs::write(meta_path(path), meta)
            .map_err(|e| Error::io("writing co-occurrence meta", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CooccurrenceMatrix> {
        let meta_file = meta_path(path);
        let meta = std::fs::read_to_string(&meta_file)
            .map_err(|e| Error::io(meta_file.display().to_string(), e))?;
        let mut words = None;
        let mut contexts = None;
        let mut count = None;
        for line in meta.lines() {
            let Some((key, val)) = line.split_once('=') else { continue };
            let val: usize = val
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("meta: bad value for {key}")))?;
            match key.trim() {
                "words" => words = Some(val),
                "contexts" => contexts = Some(val),
                "records" => count = Some(val),
                other => return Err(Error::Format(format!("meta: unknown key {other:?}"))),
            }
        }
        let (words, contexts, count) = match (words, contexts, count) {
            (Some(w), Some(c), Some(n)) => (w, c, n),
            _ => return Err(Error::Format("meta: missing words/contexts/records".into())),
        };

        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let bytes = file
            .metadata()
            .map_err(|e| Error::io("stat co-occurrence file", e))?
            .len() as usize;
        if !bytes.is_multiple_of(RECORD_BYTES) {
            return Err(Error::Format(format!(
                "co-occurrence file is {bytes} bytes, not a multiple of the {RECORD_BYTES}-byte record size"
            )));
        }
        if bytes / RECORD_BYTES != count {
            return Err(Error::Format(format!(
                "co-occurrence file holds {} records but meta says {count}",
                bytes / RECORD_BYTES
            )));
        }
        let mut reader = BufReader::new(file);
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let word_id = binio::read_u32(&mut reader)
                .map_err(|e| Error::io("reading co-occurrence records", e))?;
            let context_id = binio::read_u32(&mut reader)
                .map_err(|e| Error::io("reading co-occurrence records", e))?;
            let value = binio::read_f64(&mut reader)
                .map_err(|e| Error::io("reading co-occurrence records", e))?;
            records.push(CooccurrenceRecord { word_id, context_id, value });
        }
        CooccurrenceMatrix::from_sorted_records(words, contexts, records)
    }
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".meta");
    os.into()
}

fn pair_key(w: u32, c: u32) -> u64 {
    ((w as u64) << 32) | c as u64
}

/// Multiplicative hasher for (word, context) keys; the workload is a single
/// 8-byte key per lookup, where SipHash overhead dominates.
#[derive(Default)]
struct PairHasher(u64);

impl Hasher for PairHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = binio::mix64(self.0 ^ v);
    }
}

type PairMap = HashMap<u64, f64, BuildHasherDefault<PairHasher>>;

/// Rough per-entry budget for the spill threshold: key + value + table slack.
const ENTRY_BYTES: usize = 48;

struct ShardAccumulator {
    map: PairMap,
    runs: Vec<BufReader<File>>,
    max_entries: usize,
}

impl ShardAccumulator {
    fn new(shard_bytes: usize) -> ShardAccumulator {
        ShardAccumulator {
            map: PairMap::default(),
            runs: Vec::new(),
            max_entries: (shard_bytes / ENTRY_BYTES).max(1),
        }
    }

    fn add(&mut self, w: u32, c: u32, x: f64) -> Result<()> {
        *self.map.entry(pair_key(w, c)).or_insert(0.0) += x;
        if self.map.len() >= self.max_entries {
            self.spill()?;
        }
        Ok(())
    }

    /// Write the map as a sorted run to an anonymous temp file.
    fn spill(&mut self) -> Result<()> {
        if self.map.is_empty() {
            return Ok(());
        }
        let mut entries: Vec<(u64, f64)> = self.map.drain().collect();
        entries.sort_unstable_by_key(|&(k, _)| k);
        let mut file = tempfile::tempfile().map_err(|e| Error::io("creating spill file", e))?;
        {
            let mut w = BufWriter::new(&mut file);
            for (key, value) in entries {
                binio::write_u64(&mut w, key)
                    .and_then(|_| binio::write_f64(&mut w, value))
                    .map_err(|e| Error::io("writing spill run", e))?;
            }
            w.flush().map_err(|e| Error::io("writing spill run", e))?;
        }
        file.seek(SeekFrom::Start(0))
            .map_err(|e| Error::io("rewinding spill run", e))?;
        self.runs.push(BufReader::new(file));
        Ok(())
    }

    /// Merge all runs (plus the live map) into one sorted, deduplicated list.
    fn finish(mut self) -> Result<Vec<CooccurrenceRecord>> {
        if self.runs.is_empty() {
            let mut entries: Vec<(u64, f64)> = self.map.drain().collect();
            entries.sort_unstable_by_key(|&(k, _)| k);
            return Ok(entries
                .into_iter()
                .map(|(k, value)| CooccurrenceRecord {
                    word_id: (k >> 32) as u32,
                    context_id: k as u32,
                    value,
                })
                .collect());
        }
        self.spill()?;

        struct HeapItem {
            key: u64,
            value: f64,
            run: usize,
        }
        impl PartialEq for HeapItem {
            fn eq(&self, other: &Self) -> bool {
                self.key == other.key && self.run == other.run
            }
        }
        impl Eq for HeapItem {}
        impl Ord for HeapItem {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // Reversed for a min-heap; run index keeps ordering total.
                other.key.cmp(&self.key).then(other.run.cmp(&self.run))
            }
        }
        impl PartialOrd for HeapItem {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        fn next_entry(run: &mut BufReader<File>) -> Result<Option<(u64, f64)>> {
            let mut key_buf = [0u8; 8];
            match run.read_exact(&mut key_buf) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
                Err(e) => return Err(Error::io("reading spill run", e)),
            }
            let value =
                binio::read_f64(run).map_err(|e| Error::io("reading spill run", e))?;
            Ok(Some((u64::from_le_bytes(key_buf), value)))
        }

        let mut heap = BinaryHeap::new();
        for (i, run) in self.runs.iter_mut().enumerate() {
            if let Some((key, value)) = next_entry(run)? {
                heap.push(HeapItem { key, value, run: i });
            }
        }
        let mut out: Vec<CooccurrenceRecord> = Vec::new();
        while let Some(item) = heap.pop() {
            if let Some(last) = out.last_mut() {
                if pair_key(last.word_id, last.context_id) == item.key {
                    last.value += item.value;
                    if let Some((key, value)) = next_entry(&mut self.runs[item.run])? {
                        heap.push(HeapItem { key, value, run: item.run });
                    }
                    continue;
                }
            }
            out.push(CooccurrenceRecord {
                word_id: (item.key >> 32) as u32,
                context_id: item.key as u32,
                value: item.value,
            });
            if let Some((key, value)) = next_entry(&mut self.runs[item.run])? {
                heap.push(HeapItem { key, value, run: item.run });
            }
        }
        Ok(out)
    }
}

/// Stream token events into the sparse co-occurrence matrix.
pub fn build_cooccurrence<I>(
    events: I,
    vocab: &Vocabulary,
    cfg: &CooccurConfig,
) -> Result<CooccurrenceMatrix>
where
    I: IntoIterator<Item = Result<TokenEvent>>,
{
    if vocab.is_empty() {
        return Err(Error::Validation(
            "cannot build co-occurrences over an empty vocabulary".into(),
        ));
    }
    if cfg.window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    if !cfg.symmetric {
        return Err(Error::Config("only symmetric windows are implemented".into()));
    }
    let mut acc = ShardAccumulator::new(cfg.shard_bytes);
    // Ids of the last `window` positions; None marks an OOV token, which
    // still occupies a slot so distances span it.
    let mut ring: VecDeque<Option<u32>> = VecDeque::with_capacity(cfg.window + 1);
    for ev in events {
        match ev? {
            TokenEvent::Token(tok) => {
                let id = vocab.id(&tok);
                if let Some(w) = id {
                    for (back, past) in ring.iter().rev().enumerate() {
                        if let Some(c) = *past {
                            let weight = 1.0 / (back + 1) as f64;
                            acc.add(w, c, weight)?;
                            acc.add(c, w, weight)?;
                        }
                    }
                }
                ring.push_back(id);
                if ring.len() > cfg.window {
                    ring.pop_front();
                }
            }
            TokenEvent::Break => ring.clear(),
        }
    }
    let records = acc.finish()?;
    CooccurrenceMatrix::from_sorted_records(vocab.len(), vocab.len(), records)
}
