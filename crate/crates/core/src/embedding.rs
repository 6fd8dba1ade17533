//! Pre-trained word vectors in the word2vec text format, and averaged
//! document vectors.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Token;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector<T>(Vec<T>);

impl<T: Scalar> DenseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![T::zero(); dim])
    }

    /// Rejects NaN and infinite components.
    pub fn new(components: Vec<T>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(
                "dense vector components must be finite".into(),
            ));
        }
        Ok(DenseVector(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }
}

impl<T> AsRef<[T]> for DenseVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Read at most this many rows.
    pub limit: Option<usize>,
    /// Removed from the start of keys that carry it, e.g. `/c/en/`.
    pub strip_prefix: Option<String>,
}

impl LoadOptions {
    fn normalize_key(&self, raw: &str) -> String {
        let key = match &self.strip_prefix {
            Some(p) if !p.is_empty() => raw.strip_prefix(p.as_str()).unwrap_or(raw),
            _ => raw,
        };
        key.to_lowercase()
    }
}

/// Word vectors of one fixed dimension, row-major.
#[derive(Clone, Debug)]
pub struct EmbeddingTable<T> {
    name: String,
    dim: usize,
    terms: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            name: name.into(),
            dim,
            terms: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Builds a table from `(term, vector)` pairs; keys are lowercased and
    /// the first occurrence of a key wins.
    pub fn from_pairs<I, S>(name: impl Into<String>, dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: AsRef<str>,
    {
        let mut table = Self::new(name, dim)?;
        for (term, v) in pairs {
            let term = term.as_ref().to_lowercase();
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!("vector for {term:?}"),
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("vector for {term:?} is not finite")));
            }
            table.insert(term, &v);
        }
        Ok(table)
    }

    fn insert(&mut self, term: String, v: &[T]) -> bool {
        if self.index.contains_key(&term) {
            return false;
        }
        self.index.insert(term.clone(), self.terms.len());
        self.terms.push(term);
        self.data.extend_from_slice(v);
        true
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn get(&self, term: &str) -> Option<&[T]> {
        self.index
            .get(term)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    /// Stored vector, or the zero vector for out-of-vocabulary terms.
    pub fn lookup(&self, term: &str) -> DenseVector<T> {
        match self.get(term) {
            Some(v) => DenseVector(v.to_vec()),
            None => DenseVector::zeros(self.dim),
        }
    }

    /// Writes the table back out in word2vec text format.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, term) in self.terms.iter().enumerate() {
            write!(w, "{term}")?;
            for c in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("gz") || e.eq_ignore_ascii_case("gzip"));
    let reader: Box<dyn Read> = if gz {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 16, reader)))
}

fn parse_header(line: Option<io::Result<String>>, path: &Path) -> Result<(usize, usize)> {
    let bad = |reason: &str| Error::BadHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let line = line
        .ok_or_else(|| bad("file is empty"))?
        .map_err(|e| Error::io(path, e))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [count, dim] = fields[..] else {
        return Err(bad(&format!("expected `<count> <dim>`, got {line:?}")));
    };
    let count = count
        .parse()
        .map_err(|_| bad(&format!("bad count {count:?}")))?;
    let dim: usize = dim
        .parse()
        .map_err(|_| bad(&format!("bad dimension {dim:?}")))?;
    if dim == 0 {
        return Err(bad("dimension must be positive"));
    }
    Ok((count, dim))
}

/// Loads a word2vec text file (`<count> <dim>` header, then one
/// `<token> <v1> ... <v_dim>` row per line). Files ending in `.gz` are
/// decompressed on the fly.
pub fn load_word2vec_text<T: Scalar>(path: &Path, opts: &LoadOptions) -> Result<EmbeddingTable<T>> {
    let mut lines = open_maybe_gz(path)?.lines();
    let (count, dim) = parse_header(lines.next(), path)?;
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let mut table = EmbeddingTable::new(name, dim)?;
    let wanted = opts.limit.map_or(count, |l| l.min(count));
    let mut row = Vec::with_capacity(dim);
    let mut read = 0;
    for (i, line) in lines.enumerate() {
        if read == wanted {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let mut fields = line.split_whitespace();
        let key = fields.next().expect("non-blank line has a field");
        row.clear();
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::MalformedRow {
                path: path.to_path_buf(),
                line: lineno as u64,
                reason: format!("component {f:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    line: lineno,
                });
            }
            row.push(T::from_f64_lossy(v));
        }
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("{}:{lineno}", path.display()),
                expected: dim,
                found: row.len(),
            });
        }
        table.insert(opts.normalize_key(key), &row);
        read += 1;
    }
    if read < wanted {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: wanted,
            found: read,
        });
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterStats {
    pub dim: usize,
    pub rows_scanned: usize,
    pub kept: usize,
    pub vocab_size: usize,
}

impl FilterStats {
    /// Percentage of the requested vocabulary absent from the table.
    pub fn oov_rate(&self) -> f64 {
        if self.vocab_size == 0 {
            0.0
        } else {
            100.0 * (self.vocab_size - self.kept) as f64 / self.vocab_size as f64
        }
    }
}

/// Streams a word2vec text file and writes only rows whose normalized key is
/// in `vocab`, with a rewritten header. Component text is copied verbatim,
/// so filtering an already-filtered file reproduces it.
pub fn filter_word2vec_text<W: Write>(
    path: &Path,
    vocab: &HashSet<String>,
    opts: &LoadOptions,
    mut out: W,
) -> Result<FilterStats> {
    let mut lines = open_maybe_gz(path)?.lines();
    let (count, dim) = parse_header(lines.next(), path)?;
    let wanted = opts.limit.map_or(count, |l| l.min(count));
    let mut kept: HashSet<String> = HashSet::new();
    let mut body = String::new();
    let mut scanned = 0;
    for (i, line) in lines.enumerate() {
        if scanned == wanted {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        scanned += 1;
        let mut fields = line.split_whitespace();
        let key = opts.normalize_key(fields.next().expect("non-blank line has a field"));
        if !vocab.contains(&key) || kept.contains(&key) {
            continue;
        }
        let components: Vec<&str> = fields.collect();
        if components.len() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("{}:{}", path.display(), i + 2),
                expected: dim,
                found: components.len(),
            });
        }
        body.push_str(&key);
        for c in components {
            body.push(' ');
            body.push_str(c);
        }
        body.push('\n');
        kept.insert(key);
    }
    let io_err = |e| Error::io(path, e);
    writeln!(out, "{} {}", kept.len(), dim).map_err(io_err)?;
    out.write_all(body.as_bytes()).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(FilterStats {
        dim,
        rows_scanned: scanned,
        kept: kept.len(),
        vocab_size: vocab.len(),
    })
}

/// How out-of-vocabulary tokens enter the document average.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// Zero vector that still counts in the divisor.
    #[default]
    ZeroInMean,
    /// Ignored entirely; divide by the in-vocabulary count.
    Skip,
}

/// Component-wise mean of the token vectors. The empty document, and under
/// [`OovPolicy::Skip`] an all-OOV document, map to the zero vector.
pub fn doc_vector<T: Scalar>(
    tokens: &[Token],
    table: &EmbeddingTable<T>,
    oov: OovPolicy,
) -> DenseVector<T> {
    let mut sum = vec![T::zero(); table.dim()];
    let mut found = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t.as_str())) {
        for (s, &c) in sum.iter_mut().zip(v) {
            *s += c;
        }
        found += 1;
    }
    let divisor = match oov {
        OovPolicy::ZeroInMean => tokens.len(),
        OovPolicy::Skip => found,
    };
    if divisor == 0 {
        return DenseVector::zeros(table.dim());
    }
    let d = T::from_count(divisor);
    DenseVector(sum.into_iter().map(|s| s / d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn toy() -> EmbeddingTable<f64> {
        EmbeddingTable::from_pairs(
            "toy",
            3,
            [("cat", vec![1.0, 0.0, 0.0]), ("dog", vec![0.0, 1.0, 0.0])],
        )
        .unwrap()
    }

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(*w).unwrap()).collect()
    }

    #[test]
    fn loads_toy_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "toy.txt", "2 3\ncat 1 0 0\ndog 0 1 0\n");
        let t: EmbeddingTable<f64> = load_word2vec_text(&p, &LoadOptions::default()).unwrap();
        assert_eq!((t.dim(), t.len(), t.name()), (3, 2, "toy.txt"));
        assert_eq!(t.lookup("cat").as_slice(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_table_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "e.txt", "0 3\n");
        let t: EmbeddingTable<f64> = load_word2vec_text(&p, &LoadOptions::default()).unwrap();
        assert_eq!((t.dim(), t.len()), (3, 0));
        assert_eq!(t.lookup("cat").as_slice(), [0.0; 3]);
    }

    #[test]
    fn short_row_is_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "bad.txt", "2 3\ncat 1 0 0\ndog 1 0\n");
        let err = load_word2vec_text::<f64>(&p, &LoadOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                found: 2,
                ..
            }
        ));
        assert!(err.to_string().contains("bad.txt:3"), "{err}");
    }

    #[test]
    fn header_and_value_errors() {
        let dir = tempfile::tempdir().unwrap();
        for text in ["", "3\n", "a b\n", "1 0\n", "1 2 3\n"] {
            let p = write_tmp(&dir, "h.txt", text);
            assert!(matches!(
                load_word2vec_text::<f64>(&p, &LoadOptions::default()),
                Err(Error::BadHeader { .. })
            ));
        }
        let p = write_tmp(&dir, "n.txt", "1 2\ncat nan 1\n");
        assert!(matches!(
            load_word2vec_text::<f64>(&p, &LoadOptions::default()),
            Err(Error::NonFinite { line: 2, .. })
        ));
        let p = write_tmp(&dir, "t.txt", "3 2\ncat 1 1\n");
        assert!(matches!(
            load_word2vec_text::<f64>(&p, &LoadOptions::default()),
            Err(Error::Truncated {
                expected: 3,
                found: 1,
                ..
            })
        ));
    }

    #[test]
    fn limit_prefix_lowercase_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "nb.txt",
            "4 2\n/c/en/Cat 1 2\n/c/en/cat 9 9\n/c/de/katze 3 4\n/c/en/dog 5 6\n",
        );
        let opts = LoadOptions {
            limit: Some(3),
            strip_prefix: Some("/c/en/".into()),
        };
        let t: EmbeddingTable<f32> = load_word2vec_text(&p, &opts).unwrap();
        assert_eq!(t.terms(), ["cat", "/c/de/katze"]);
        assert_eq!(t.get("cat").unwrap(), [1.0, 2.0]);
        assert!(!t.contains("dog"));
    }

    #[test]
    fn gzip_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt.gz");
        let mut enc =
            flate2::write::GzEncoder::new(File::create(&p).unwrap(), flate2::Compression::fast());
        enc.write_all(b"1 2\ncat 0.5 -0.5\n").unwrap();
        enc.finish().unwrap();
        let t: EmbeddingTable<f64> = load_word2vec_text(&p, &LoadOptions::default()).unwrap();
        assert_eq!(t.get("cat").unwrap(), [0.5, -0.5]);
    }

    #[test]
    fn lookup_oov_is_zero() {
        assert_eq!(toy().lookup("unknownword").as_slice(), [0.0; 3]);
    }

    #[test]
    fn doc_vector_examples() {
        let t = toy();
        let z = OovPolicy::ZeroInMean;
        assert_eq!(
            doc_vector(&toks(&["cat", "dog"]), &t, z).as_slice(),
            [0.5, 0.5, 0.0]
        );
        assert_eq!(doc_vector(&[], &t, z).as_slice(), [0.0; 3]);
        assert_eq!(
            doc_vector(&toks(&["cat", "oov"]), &t, z).as_slice(),
            [0.5, 0.0, 0.0]
        );
        assert_eq!(
            doc_vector(&toks(&["cat", "oov"]), &t, OovPolicy::Skip).as_slice(),
            [1.0, 0.0, 0.0]
        );
        assert_eq!(
            doc_vector(&toks(&["oov"]), &t, OovPolicy::Skip).as_slice(),
            [0.0; 3]
        );
    }

    #[test]
    fn filter_keeps_intersection_and_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let full = write_tmp(
            &dir,
            "full.txt",
            "5 2\ncat 1 0.25\nbird 0 1\ndog  0.8   0.6\nfish 1 1\ncow 2 2\n",
        );
        let vocab: HashSet<String> = ["cat", "dog", "yak"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut out = Vec::new();
        let stats = filter_word2vec_text(&full, &vocab, &LoadOptions::default(), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "2 2\ncat 1 0.25\ndog 0.8 0.6\n"
        );
        assert_eq!(stats.kept, 2);
        assert!((stats.oov_rate() - 100.0 / 3.0).abs() < 1e-12);
        let once = write_tmp(&dir, "once.txt", std::str::from_utf8(&out).unwrap());
        let mut again = Vec::new();
        filter_word2vec_text(&once, &vocab, &LoadOptions::default(), &mut again).unwrap();
        assert_eq!(again, out);

        let none: HashSet<String> = ["zebra".to_string()].into();
        let mut empty = Vec::new();
        filter_word2vec_text(&full, &none, &LoadOptions::default(), &mut empty).unwrap();
        assert_eq!(empty, b"0 2\n");
    }

    #[test]
    fn write_text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        toy().write_text(File::create(&p).unwrap()).unwrap();
        let back: EmbeddingTable<f64> = load_word2vec_text(&p, &LoadOptions::default()).unwrap();
        assert_eq!(back.terms(), toy().terms());
        assert_eq!(back.get("dog"), toy().get("dog"));
    }

    fn word() -> impl Strategy<Value = Token> {
        prop::sample::select(vec!["cat", "dog", "oov", "yak"]).prop_map(|w| Token::new(w).unwrap())
    }

    proptest! {
        #[test]
        fn doc_vector_invariants(mut tokens in prop::collection::vec(word(), 0..12), skip in any::<bool>()) {
            let t = toy();
            let oov = if skip { OovPolicy::Skip } else { OovPolicy::ZeroInMean };
            let v = doc_vector(&tokens, &t, oov);
            prop_assert_eq!(v.dim(), t.dim());
            let doubled: Vec<Token> = tokens.iter().chain(tokens.iter()).cloned().collect();
            let vd = doc_vector(&doubled, &t, oov);
            for (a, b) in v.as_slice().iter().zip(vd.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            tokens.reverse();
            let vr = doc_vector(&tokens, &t, oov);
            for (a, b) in v.as_slice().iter().zip(vr.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
