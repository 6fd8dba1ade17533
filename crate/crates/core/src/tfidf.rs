//! Vocabulary with document frequencies, sparse vectors, and the tf-idf model.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Token;
use crate::scalar::{format_sig6, Scalar};

/// Sorted `(term_id, weight)` pairs with no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector<T> {
    dim: usize,
    entries: Vec<(u32, T)>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Validates ordering, bounds, and that no weight is zero or non-finite.
    pub fn new(dim: usize, entries: Vec<(u32, T)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Config(format!(
                    "sparse term ids not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some(&(id, _)) = entries.iter().find(|(id, _)| *id as usize >= dim) {
            return Err(Error::DimensionMismatch {
                context: format!("sparse term id {id}"),
                expected: dim,
                found: id as usize + 1,
            });
        }
        if entries.iter().any(|(_, w)| w.is_zero() || !w.is_finite()) {
            return Err(Error::Config(
                "sparse weights must be finite and non-zero".into(),
            ));
        }
        Ok(SparseVector { dim, entries })
    }

    /// Sums duplicate ids and drops zeros.
    pub fn from_unsorted(dim: usize, pairs: impl IntoIterator<Item = (u32, T)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, T> = BTreeMap::new();
        for (id, w) in pairs {
            *acc.entry(id).or_insert_with(T::zero) += w;
        }
        Self::new(dim, acc.into_iter().filter(|(_, w)| !w.is_zero()).collect())
    }

    pub fn from_dense(dense: &[T]) -> Self {
        SparseVector {
            dim: dense.len(),
            entries: dense
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(i, &w)| (i as u32, w))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, T)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> T {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .map_or_else(|_| T::zero(), |pos| self.entries[pos].1)
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }

    pub fn squared_norm(&self) -> T {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    pub fn norm(&self) -> T {
        self.squared_norm().sqrt()
    }

    /// Merge-join dot product. Callers check dimensions.
    pub fn dot(&self, other: &Self) -> T {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = T::zero();
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Unit L2 norm; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > T::zero() {
            for (_, w) in &mut self.entries {
                *w /= norm;
            }
            self.entries.retain(|(_, w)| !w.is_zero());
        }
        self
    }
}

/// Terms seen in a fitted corpus, with ids assigned in sorted term order.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<usize>,
    n_docs: usize,
}

/// Optional document-frequency pruning; both off by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfPruning {
    /// Keep terms appearing in at least this many documents.
    pub min_df: usize,
    /// Keep terms appearing in at most this fraction of documents.
    pub max_df: f64,
}

impl Default for DfPruning {
    fn default() -> Self {
        DfPruning {
            min_df: 1,
            max_df: 1.0,
        }
    }
}

impl Vocabulary {
    pub fn build<D: AsRef<[Token]>>(docs: &[D]) -> Result<Self> {
        Self::build_pruned(docs, DfPruning::default())
    }

    pub fn build_pruned<D: AsRef<[Token]>>(docs: &[D], pruning: DfPruning) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.as_ref().iter().map(Token::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n_docs = docs.len();
        let max_count = pruning.max_df * n_docs as f64;
        let kept = df
            .into_iter()
            .filter(|&(_, c)| c >= pruning.min_df.max(1) && c as f64 <= max_count + 1e-9);
        Ok(Self::from_parts(
            kept.map(|(t, c)| (t.to_string(), c)),
            n_docs,
        ))
    }

    fn from_parts(pairs: impl Iterator<Item = (String, usize)>, n_docs: usize) -> Self {
        let (terms, df): (Vec<_>, Vec<_>) = pairs.unzip();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms,
            index,
            df,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, id: u32) -> usize {
        self.df[id as usize]
    }

    pub fn dfs(&self) -> &[usize] {
        &self.df
    }

    /// Raw term counts; out-of-vocabulary tokens are ignored.
    pub fn counts<T: Scalar>(&self, tokens: &[Token]) -> SparseVector<T> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for id in tokens.iter().filter_map(|t| self.id(t.as_str())) {
            *counts.entry(id).or_insert(0) += 1;
        }
        SparseVector {
            dim: self.len(),
            entries: counts
                .into_iter()
                .map(|(i, c)| (i, T::from_count(c)))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfIdfConfig {
    /// `ln((1+N)/(1+df)) + 1` when on, `ln(N/df)` when off.
    pub smoothing: bool,
    pub normalize: bool,
    #[serde(flatten)]
    pub pruning: DfPruning,
}

impl Default for TfIdfConfig {
    fn default() -> Self {
        TfIdfConfig {
            smoothing: true,
            normalize: true,
            pruning: DfPruning::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TfIdfModel<T> {
    vocab: Vocabulary,
    idf: Vec<T>,
    config: TfIdfConfig,
}

/// Natural-log inverse document frequency.
pub fn idf_weight(n_docs: usize, df: usize, smoothing: bool) -> f64 {
    let (n, df) = (n_docs as f64, df as f64);
    if smoothing {
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    } else {
        (n / df).ln()
    }
}

impl<T: Scalar> TfIdfModel<T> {
    pub fn fit<D: AsRef<[Token]>>(docs: &[D], config: TfIdfConfig) -> Result<Self> {
        let vocab = Vocabulary::build_pruned(docs, config.pruning)?;
        Ok(Self::from_vocabulary(vocab, config))
    }

    pub fn from_vocabulary(vocab: Vocabulary, config: TfIdfConfig) -> Self {
        let idf = vocab
            .dfs()
            .iter()
            .map(|&df| T::from_f64_lossy(idf_weight(vocab.n_docs(), df, config.smoothing)))
            .collect();
        TfIdfModel { vocab, idf, config }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> TfIdfConfig {
        self.config
    }

    pub fn idf(&self, id: u32) -> T {
        self.idf[id as usize]
    }

    /// Per-term weight `count × idf`, L2-normalized when configured.
    pub fn transform(&self, tokens: &[Token]) -> SparseVector<T> {
        let counts = self.vocab.counts::<T>(tokens);
        let mut entries: Vec<(u32, T)> = counts
            .entries
            .into_iter()
            .map(|(i, c)| (i, c * self.idf[i as usize]))
            .collect();
        // Unsmoothed idf is zero for terms present in every document.
        entries.retain(|(_, w)| !w.is_zero());
        let v = SparseVector {
            dim: self.vocab.len(),
            entries,
        };
        if self.config.normalize {
            v.normalized()
        } else {
            v
        }
    }

    pub fn transform_corpus<D: AsRef<[Token]> + Sync>(&self, docs: &[D]) -> Vec<SparseVector<T>> {
        docs.par_iter()
            .map(|d| self.transform(d.as_ref()))
            .collect()
    }

    pub fn to_dump(&self) -> ModelDump {
        ModelDump {
            vocabulary: self.vocab.terms.clone(),
            df: self.vocab.df.clone(),
            n_docs: self.vocab.n_docs,
            smoothing: self.config.smoothing,
            normalize: self.config.normalize,
        }
    }

    pub fn from_dump(dump: ModelDump) -> Result<Self> {
        if dump.vocabulary.len() != dump.df.len() {
            return Err(Error::DimensionMismatch {
                context: "model dump df array".into(),
                expected: dump.vocabulary.len(),
                found: dump.df.len(),
            });
        }
        if dump.df.iter().any(|&d| d == 0 || d > dump.n_docs) {
            return Err(Error::Config("model dump df outside 1..=N".into()));
        }
        let vocab = Vocabulary::from_parts(dump.vocabulary.into_iter().zip(dump.df), dump.n_docs);
        let config = TfIdfConfig {
            smoothing: dump.smoothing,
            normalize: dump.normalize,
            pruning: DfPruning::default(),
        };
        Ok(Self::from_vocabulary(vocab, config))
    }
}

/// JSON form of a fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub vocabulary: Vec<String>,
    pub df: Vec<usize>,
    #[serde(rename = "N")]
    pub n_docs: usize,
    pub smoothing: bool,
    pub normalize: bool,
}

/// One line per document: `doc_id term_id:weight ...`, weights to six
/// significant digits.
pub fn write_vector_dump<T: Scalar, W: Write>(
    vectors: &[SparseVector<T>],
    mut w: W,
) -> io::Result<()> {
    for (doc, v) in vectors.iter().enumerate() {
        write!(w, "{doc}")?;
        for &(id, weight) in v.entries() {
            write!(w, " {id}:{}", format_sig6(weight.to_f64_lossy()))?;
        }
        writeln!(w)?;
    }
    Ok(())
}
