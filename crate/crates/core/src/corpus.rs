//! ABC corpus loading, character vocabulary and stateful batch layout.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::numerics::Matrix;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus is empty: no tune with an X: header found")]
    Empty,
    #[error("character {ch:?} at offset {offset} is not in the vocabulary")]
    UnknownChar { ch: char, offset: usize },
    #[error("id {id} at offset {offset} is out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, offset: usize, size: usize },
    #[error("corpus has {len} ids; at least {min} (batch_size * (seq_len + 1)) are needed")]
    TooSmall { len: usize, min: usize },
    #[error("invalid batch config: batch_size and seq_len must be at least 1")]
    BadBatchConfig,
}

/// Tunes as raw text, one entry per blank-line separated block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusText {
    pub tunes: Vec<String>,
    pub source_paths: Vec<PathBuf>,
    /// Blocks discarded because they had no `X:` line.
    pub dropped: usize,
}

fn has_index_header(block: &str) -> bool {
    block.lines().any(|l| l.starts_with("X:"))
}

/// Line endings to `\n`.
pub fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Splits text into blank-line separated blocks, keeping those that carry
/// an `X:` header. Returns the kept tunes and the number dropped.
pub fn split_tunes(text: &str) -> (Vec<String>, usize) {
    let text = normalize_newlines(text);
    let mut tunes = Vec::new();
    let mut dropped = 0;
    let mut current: Vec<&str> = Vec::new();
    let mut flush = |current: &mut Vec<&str>| {
        if current.is_empty() {
            return;
        }
        let block = current.join("\n");
        current.clear();
        if has_index_header(&block) {
            tunes.push(block);
        } else {
            dropped += 1;
        }
    };
    for line in text.split('\n') {
        if line.trim().is_empty() {
            flush(&mut current);
        } else {
            current.push(line);
        }
    }
    flush(&mut current);
    (tunes, dropped)
}

impl CorpusText {
    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let (tunes, dropped) = split_tunes(text);
        if tunes.is_empty() {
            return Err(CorpusError::Empty);
        }
        Ok(Self {
            tunes,
            source_paths: Vec::new(),
            dropped,
        })
    }

    pub fn from_tunes(tunes: Vec<String>) -> Result<Self, CorpusError> {
        let text = tunes.join("\n\n");
        Self::from_text(&text)
    }

    /// The training stream: tunes joined by a blank line.
    pub fn text(&self) -> String {
        self.tunes.join("\n\n")
    }

    /// Keeps only the first `n` tunes.
    pub fn truncated(&self, n: usize) -> CorpusText {
        CorpusText {
            tunes: self.tunes.iter().take(n).cloned().collect(),
            source_paths: self.source_paths.clone(),
            dropped: self.dropped,
        }
    }
}

pub fn load_corpus<P: AsRef<Path>>(paths: &[P]) -> Result<CorpusText, CorpusError> {
    let mut tunes = Vec::new();
    let mut dropped = 0;
    let mut source_paths = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let bytes = fs::read(p).map_err(|source| CorpusError::Io {
            path: p.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let (mut t, d) = split_tunes(&text);
        if d > 0 {
            log::warn!("{}: dropped {d} block(s) without an X: header", p.display());
        }
        tunes.append(&mut t);
        dropped += d;
        source_paths.push(p.to_path_buf());
    }
    if tunes.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(CorpusText {
        tunes,
        source_paths,
        dropped,
    })
}

/// All `*.abc` files under `dir` (recursively), sorted by path.
pub fn abc_files_in(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
        let io = |source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        };
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("abc")) {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Bijection between characters and ids, ordered by code point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    pub fn from_text(text: &str) -> Self {
        let set: BTreeSet<char> = text.chars().collect();
        Self::from_chars(set.into_iter().collect())
    }

    /// `chars` must be sorted and unique.
    fn from_chars(chars: Vec<char>) -> Self {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self { chars, index }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn id(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn char(&self, id: usize) -> Option<char> {
        self.chars.get(id).copied()
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>, CorpusError> {
        text.chars()
            .enumerate()
            .map(|(offset, ch)| self.id(ch).ok_or(CorpusError::UnknownChar { ch, offset }))
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Result<String, CorpusError> {
        ids.iter()
            .enumerate()
            .map(|(offset, &id)| {
                self.char(id).ok_or(CorpusError::IdOutOfRange {
                    id,
                    offset,
                    size: self.len(),
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let s: String = self.chars.iter().collect();
        serde_json::to_string(&serde_json::json!({ "chars": s })).expect("string serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            chars: String,
        }
        let raw: Raw = serde_json::from_str(json)?;
        let set: BTreeSet<char> = raw.chars.chars().collect();
        Ok(Self::from_chars(set.into_iter().collect()))
    }
}

pub fn build_vocabulary(corpus: &CorpusText) -> Vocabulary {
    Vocabulary::from_text(&corpus.text())
}

/// A `batch x steps` grid of character ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdGrid {
    batch: usize,
    steps: usize,
    data: Vec<usize>,
}

impl IdGrid {
    pub fn new(batch: usize, steps: usize, data: Vec<usize>) -> Self {
        assert_eq!(data.len(), batch * steps, "id grid size");
        Self { batch, steps, data }
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Self {
        let steps = rows.first().map_or(0, Vec::len);
        let data: Vec<usize> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), steps, data)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, b: usize, t: usize) -> usize {
        self.data[b * self.steps + t]
    }

    pub fn row(&self, b: usize) -> &[usize] {
        &self.data[b * self.steps..(b + 1) * self.steps]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.data
    }

    /// Ids in time-major order (`t * batch + b`), the layout the model uses.
    pub fn time_major(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.data.len());
        for t in 0..self.steps {
            for b in 0..self.batch {
                out.push(self.get(b, t));
            }
        }
        out
    }
}

/// One-hot expansion; row `b * steps + t` holds the vector for `ids[b][t]`.
pub fn one_hot(ids: &IdGrid, vocab_size: usize) -> Result<Matrix, CorpusError> {
    let mut m = Matrix::zeros(ids.batch * ids.steps, vocab_size);
    for (offset, &id) in ids.data.iter().enumerate() {
        if id >= vocab_size {
            return Err(CorpusError::IdOutOfRange {
                id,
                offset,
                size: vocab_size,
            });
        }
        m.set(offset, id, 1.0);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    pub batch_size: usize,
    pub seq_len: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            seq_len: 64,
        }
    }
}

impl BatchConfig {
    pub fn min_ids(&self) -> usize {
        self.batch_size * (self.seq_len + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub inputs: IdGrid,
    pub targets: IdGrid,
}

/// Corpus cut into `batch_size` parallel streams; segment `k` row `b`
/// continues exactly where segment `k - 1` row `b` stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSet {
    pub config: BatchConfig,
    pub segments: Vec<Segment>,
}

impl BatchSet {
    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    /// Supervised positions per epoch.
    pub fn positions(&self) -> usize {
        self.segments.len() * self.config.batch_size * self.config.seq_len
    }
}

/// Number of segments `make_batches` yields for `len` ids, 0 if too short.
pub fn segment_count(len: usize, cfg: BatchConfig) -> usize {
    if cfg.batch_size == 0 || cfg.seq_len == 0 || len < cfg.min_ids() {
        return 0;
    }
    (len / cfg.batch_size - 1) / cfg.seq_len
}

pub fn make_batches(ids: &[usize], cfg: BatchConfig) -> Result<BatchSet, CorpusError> {
    let (b, l) = (cfg.batch_size, cfg.seq_len);
    if b == 0 || l == 0 {
        return Err(CorpusError::BadBatchConfig);
    }
    if ids.len() < cfg.min_ids() {
        return Err(CorpusError::TooSmall {
            len: ids.len(),
            min: cfg.min_ids(),
        });
    }
    let stream_len = ids.len() / b;
    let num_segments = (stream_len - 1) / l;
    let streams: Vec<&[usize]> = ids[..b * stream_len].chunks(stream_len).collect();
    let segments = (0..num_segments)
        .map(|k| {
            let mut inputs = Vec::with_capacity(b * l);
            let mut targets = Vec::with_capacity(b * l);
            for s in &streams {
                inputs.extend_from_slice(&s[k * l..(k + 1) * l]);
                targets.extend_from_slice(&s[k * l + 1..(k + 1) * l + 1]);
            }
            Segment {
                inputs: IdGrid::new(b, l, inputs),
                targets: IdGrid::new(b, l, targets),
            }
        })
        .collect();
    Ok(BatchSet {
        config: cfg,
        segments,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CorpusStats {
    pub tunes: usize,
    pub chars: usize,
    pub vocab_size: usize,
    pub segments_at_default_batching: usize,
}

pub fn corpus_stats(corpus: &CorpusText) -> CorpusStats {
    let text = corpus.text();
    let chars = text.chars().count();
    CorpusStats {
        tunes: corpus.tunes.len(),
        chars,
        vocab_size: Vocabulary::from_text(&text).len(),
        segments_at_default_batching: segment_count(chars, BatchConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_TUNES: &str = "X:1\nT:One\nK:C\nCDE|\n\nX:2\nT:Two\nK:G\nGAB|\n";

    #[test]
    fn splits_on_blank_lines() {
        let c = CorpusText::from_text(TWO_TUNES).unwrap();
        assert_eq!(c.tunes.len(), 2);
        assert_eq!(c.text(), "X:1\nT:One\nK:C\nCDE|\n\nX:2\nT:Two\nK:G\nGAB|");
    }

    #[test]
    fn fragment_without_index_is_dropped() {
        assert!(matches!(
            CorpusText::from_text("T:No index\nK:C\nCDE|\n"),
            Err(CorpusError::Empty)
        ));
        let c = CorpusText::from_text("%comment block\n\nX:1\nK:C\nC|").unwrap();
        assert_eq!((c.tunes.len(), c.dropped), (1, 1));
    }

    #[test]
    fn crlf_and_whitespace_only_separators() {
        let c = CorpusText::from_text("X:1\r\nK:C\r\nC|\r\n   \r\nX:2\r\nK:C\r\nD|").unwrap();
        assert_eq!(c.tunes, vec!["X:1\nK:C\nC|", "X:2\nK:C\nD|"]);
    }

    #[test]
    fn load_reports_missing_path() {
        let err = load_corpus(&["/definitely/not/here.abc"]).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.abc"));
    }

    #[test]
    fn vocabulary_examples() {
        let v = Vocabulary::from_text("abcabc\n");
        assert_eq!(v.chars(), &['\n', 'a', 'b', 'c']);
        assert_eq!(v.encode("cab").unwrap(), vec![3, 1, 2]);
        assert_eq!(v.encode("").unwrap(), Vec::<usize>::new());
        assert_eq!(v.decode(&[3, 1, 2]).unwrap(), "cab");
        assert_eq!(v.decode(&[]).unwrap(), "");
        assert!(matches!(
            v.decode(&[99]),
            Err(CorpusError::IdOutOfRange { id: 99, offset: 0, size: 4 })
        ));
        assert_eq!(Vocabulary::from_text("AA").len(), 1);
        let abc = Vocabulary::from_text("abc");
        assert!(matches!(
            abc.encode("z"),
            Err(CorpusError::UnknownChar { ch: 'z', offset: 0 })
        ));
    }

    #[test]
    fn vocabulary_json_roundtrip() {
        let v = Vocabulary::from_text("X:1\n\"Am\"|^c'");
        assert_eq!(Vocabulary::from_json(&v.to_json()).unwrap(), v);
    }

    #[test]
    fn one_hot_examples() {
        let ids = IdGrid::from_rows(&[vec![2]]);
        assert_eq!(one_hot(&ids, 4).unwrap().data(), &[0.0, 0.0, 1.0, 0.0]);
        assert!(one_hot(&ids, 2).is_err());
    }

    #[test]
    fn batches_for_1300_ids() {
        let ids: Vec<usize> = (0..1300).map(|i| i % 50).collect();
        let cfg = BatchConfig::default();
        let set = make_batches(&ids, cfg).unwrap();
        assert_eq!(set.num_segments(), 1);
        assert_eq!(segment_count(1300, cfg), 1);
        let seg = &set.segments[0];
        assert_eq!((seg.inputs.batch(), seg.inputs.steps()), (16, 64));
    }

    #[test]
    fn exact_minimum_length() {
        let cfg = BatchConfig {
            batch_size: 3,
            seq_len: 4,
        };
        let ids: Vec<usize> = (0..15).collect();
        let set = make_batches(&ids, cfg).unwrap();
        assert_eq!(set.num_segments(), 1);
        // every target position of every stream is used
        assert_eq!(set.segments[0].targets.row(2), &[11, 12, 13, 14]);
        let err = make_batches(&ids[..14], cfg).unwrap_err();
        assert!(err.to_string().contains("at least 15"));
    }

    fn random_ids() -> impl Strategy<Value = (Vec<usize>, usize, usize)> {
        (1usize..6, 1usize..9).prop_flat_map(|(b, l)| {
            let min = b * (l + 1);
            (proptest::collection::vec(0usize..20, min..min + 300), Just(b), Just(l))
        })
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(s in "[a-g|:/ 0-9\n]{0,80}") {
            let v = Vocabulary::from_text("abcdefg|:/ 0123456789\n");
            prop_assert_eq!(v.decode(&v.encode(&s).unwrap()).unwrap(), s);
        }

        #[test]
        fn batch_adjacency_and_coverage((ids, b, l) in random_ids()) {
            let cfg = BatchConfig { batch_size: b, seq_len: l };
            let set = make_batches(&ids, cfg).unwrap();
            prop_assert!(set.positions() <= ids.len() - b);
            for seg in &set.segments {
                for r in 0..b {
                    for t in 0..l - 1 {
                        prop_assert_eq!(seg.targets.get(r, t), seg.inputs.get(r, t + 1));
                    }
                }
            }
            for k in 1..set.num_segments() {
                let (prev, cur) = (&set.segments[k - 1], &set.segments[k]);
                for r in 0..b {
                    prop_assert_eq!(cur.inputs.get(r, 0), prev.targets.get(r, l - 1));
                }
            }
            prop_assert_eq!(make_batches(&ids, cfg).unwrap(), set);
        }
    }
}
