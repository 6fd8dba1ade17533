//! Labeled short-text corpora: AG News CSV ingest, seeded sampling, and the
//! JSON-lines cache format.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{Preprocessor, Token};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub label: String,
    pub raw: String,
    #[serde(default)]
    pub tokens: Vec<Token>,
    /// Position in the corpus this document was sampled from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub docs: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from `(label, raw)` pairs, assigning ids in order.
    pub fn from_pairs<I, L, R>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (L, R)>,
        L: Into<String>,
        R: Into<String>,
    {
        Corpus {
            docs: pairs
                .into_iter()
                .enumerate()
                .map(|(id, (label, raw))| Document {
                    id,
                    label: label.into(),
                    raw: raw.into(),
                    tokens: Vec::new(),
                    source_id: None,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn label_set(&self) -> BTreeSet<&str> {
        self.docs.iter().map(|d| d.label.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.label.clone()).collect()
    }

    pub fn token_lists(&self) -> Vec<&[Token]> {
        self.docs.iter().map(|d| d.tokens.as_slice()).collect()
    }

    /// Document count per label.
    pub fn class_histogram(&self) -> BTreeMap<String, usize> {
        let mut hist = BTreeMap::new();
        for d in &self.docs {
            *hist.entry(d.label.clone()).or_insert(0) += 1;
        }
        hist
    }

    /// Source positions of a sampled corpus, in selection order.
    pub fn selection(&self) -> Option<Vec<usize>> {
        self.docs.iter().map(|d| d.source_id).collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for doc in &self.docs {
            serde_json::to_writer(&mut w, doc).expect("document serializes");
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a cache written by [`Corpus::write_jsonl`]. Ids must run
    /// `0..n` in file order and labels must be non-empty.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut docs = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|source| Error::BadCache {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
            if doc.id != docs.len() || doc.label.is_empty() {
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    reason: format!("expected id {} with a non-empty label", docs.len()),
                });
            }
            docs.push(doc);
        }
        Ok(Corpus { docs })
    }
}

/// Class-index to label names for the AG News CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMap(pub BTreeMap<String, String>);

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap(
            [
                ("1", "World"),
                ("2", "Sports"),
                ("3", "Business"),
                ("4", "Sci/Tech"),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        )
    }
}

impl LabelMap {
    /// Parses `1=World,2=Sports,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::Config(format!("label map entry {part:?} is not key=label"))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::Config(format!(
                    "label map entry {part:?} has an empty side"
                )));
            }
            map.insert(k.to_string(), v.to_string());
        }
        Ok(LabelMap(map))
    }

    /// Unmapped class indices pass through unchanged.
    pub fn label_for(&self, class: &str) -> String {
        self.0
            .get(class)
            .cloned()
            .unwrap_or_else(|| class.to_string())
    }
}

/// Loads the 3-column AG News layout (`class, title, description`, RFC 4180
/// quoting). The document text is title and description joined by a space.
pub fn load_agnews_csv(path: &Path, labels: &LabelMap) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_agnews_csv(file, path, labels)
}

pub fn read_agnews_csv<R: std::io::Read>(
    reader: R,
    origin: &Path,
    labels: &LabelMap,
) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::MalformedRow {
                path: origin.to_path_buf(),
                line,
                reason: format!("expected 3 columns, found {}", record.len()),
            });
        }
        let class = record[0].trim();
        if class.is_empty() {
            return Err(Error::MalformedRow {
                path: origin.to_path_buf(),
                line,
                reason: "empty class index".into(),
            });
        }
        // AG News escapes embedded line breaks as a literal backslash-n.
        let raw = format!("{} {}", &record[1], &record[2]).replace("\\n", " ");
        pairs.push((labels.label_for(class), raw));
    }
    Ok(Corpus::from_pairs(pairs))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason: format!("{kind:?}"),
        },
    }
}

/// Draws `n` documents without replacement.
///
/// The generator is ChaCha8 (`rand_chacha`) seeded with `seed` via
/// `SeedableRng::seed_from_u64`, and indices come from `rand::seq::index::sample`,
/// so the selection is reproducible for a fixed seed and corpus size. Selected
/// documents keep their selection order, get ids `0..n`, and remember their
/// original id in `source_id`.
pub fn sample(corpus: &Corpus, n: usize, seed: u64) -> Result<Corpus> {
    if n == 0 || n > corpus.len() {
        return Err(Error::BadSampleSize {
            requested: n,
            available: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, corpus.len(), n);
    let docs = picked
        .into_iter()
        .enumerate()
        .map(|(id, src)| {
            let orig = &corpus.docs[src];
            Document {
                id,
                label: orig.label.clone(),
                raw: orig.raw.clone(),
                tokens: orig.tokens.clone(),
                source_id: Some(orig.source_id.unwrap_or(orig.id)),
            }
        })
        .collect();
    Ok(Corpus { docs })
}

/// Fills every document's tokens. Documents that preprocess to nothing are kept.
pub fn preprocess_corpus(mut corpus: Corpus, pre: &Preprocessor) -> Corpus {
    corpus
        .docs
        .par_iter_mut()
        .for_each(|d| d.tokens = pre.run(&d.raw));
    corpus
}
