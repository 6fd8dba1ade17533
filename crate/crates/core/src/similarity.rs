//! Cosine and soft cosine measures, the embedding-derived term similarity
//! matrix, and all-pairs document similarity with self-exclusion.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{DenseVector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::{format_sig6, Scalar};
use crate::tfidf::{SparseVector, Vocabulary};

/// Radicands at or below this are treated as a zero document.
pub const SOFT_COSINE_EPSILON: f64 = 1e-12;

/// The three document similarity pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "tfidf-cosine")]
    TfidfCosine,
    #[serde(rename = "w2v-cosine")]
    W2vCosine,
    #[serde(rename = "w2v-softcosine")]
    W2vSoftCosine,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::TfidfCosine,
        Method::W2vCosine,
        Method::W2vSoftCosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TfidfCosine => "tfidf-cosine",
            Method::W2vCosine => "w2v-cosine",
            Method::W2vSoftCosine => "w2v-softcosine",
        }
    }

    /// Row label used in summary tables.
    pub fn description(self) -> &'static str {
        match self {
            Method::TfidfCosine => "Cosine Similarity using tf-idf Vectors",
            Method::W2vCosine => "Cosine Similarity using Word2Vec Vectors",
            Method::W2vSoftCosine => "Soft Cosine Similarity using Word2Vec Vectors",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Method::TfidfCosine => 0,
            Method::W2vCosine => 1,
            Method::W2vSoftCosine => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn needs_embeddings(self) -> bool {
        self != Method::TfidfCosine
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

fn check_dims(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: context.to_string(),
            expected,
            found,
        })
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `a·b / (|a||b|)`, or 0 when either vector is zero; clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    check_dims("cosine", a.len(), b.len())?;
    let denom = dot(a, a).sqrt() * dot(b, b).sqrt();
    if denom.is_zero() {
        return Ok(T::zero());
    }
    Ok((dot(a, b) / denom).clamp_unit())
}

/// Cosine over sparse vectors by merge-join; same value as on the densified vectors.
pub fn sparse_cosine<T: Scalar>(a: &SparseVector<T>, b: &SparseVector<T>) -> Result<T> {
    check_dims("sparse cosine", a.dim(), b.dim())?;
    let denom = a.squared_norm().sqrt() * b.squared_norm().sqrt();
    if denom.is_zero() {
        return Ok(T::zero());
    }
    Ok((a.dot(b) / denom).clamp_unit())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermMatrixParams {
    pub exponent: f64,
    pub threshold: f64,
    pub topk: usize,
}

impl Default for TermMatrixParams {
    fn default() -> Self {
        TermMatrixParams {
            exponent: 2.0,
            threshold: 0.0,
            topk: 100,
        }
    }
}

/// Sparse symmetric term similarities `s_ij` with unit diagonal and entries in `[0, 1]`.
///
/// Rows are stored sorted by column and always contain the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct TermSimilarityMatrix<T> {
    rows: Vec<Vec<(u32, T)>>,
    params: TermMatrixParams,
}

impl<T: Scalar> TermSimilarityMatrix<T> {
    pub fn identity(vocab_dim: usize) -> Self {
        TermSimilarityMatrix {
            rows: (0..vocab_dim as u32).map(|i| vec![(i, T::one())]).collect(),
            params: TermMatrixParams {
                exponent: 1.0,
                threshold: 1.0,
                topk: 0,
            },
        }
    }

    /// Unit diagonal plus the given entries, each mirrored to `(j, i)`.
    /// Diagonal entries, if supplied, must equal 1; zero entries are dropped.
    pub fn from_entries(
        vocab_dim: usize,
        entries: impl IntoIterator<Item = (u32, u32, T)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, T)>> =
            (0..vocab_dim as u32).map(|i| vec![(i, T::one())]).collect();
        let invalid = |msg: String| Error::InvalidTermMatrix(msg);
        let mut topk = 0;
        for (i, j, s) in entries {
            if i as usize >= vocab_dim || j as usize >= vocab_dim {
                return Err(invalid(format!(
                    "entry ({i}, {j}) outside {vocab_dim} terms"
                )));
            }
            if !(s >= T::zero() && s <= T::one()) {
                return Err(invalid(format!("s[{i}][{j}] = {s} outside [0, 1]")));
            }
            if i == j {
                if s != T::one() {
                    return Err(invalid(format!("diagonal s[{i}][{i}] = {s}")));
                }
                continue;
            }
            if s.is_zero() {
                continue;
            }
            for (r, c) in [(i, j), (j, i)] {
                let row = &mut rows[r as usize];
                match row.binary_search_by_key(&c, |&(k, _)| k) {
                    Ok(pos) if row[pos].1 != s => {
                        return Err(invalid(format!("conflicting values for ({r}, {c})")));
                    }
                    Ok(_) => {}
                    Err(pos) => row.insert(pos, (c, s)),
                }
            }
        }
        for row in &rows {
            topk = topk.max(row.len() - 1);
        }
        Ok(TermSimilarityMatrix {
            rows,
            params: TermMatrixParams {
                exponent: 1.0,
                threshold: 0.0,
                topk,
            },
        })
    }

    pub fn vocab_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn params(&self) -> TermMatrixParams {
        self.params
    }

    pub fn row(&self, i: u32) -> &[(u32, T)] {
        &self.rows[i as usize]
    }

    pub fn get(&self, i: u32, j: u32) -> T {
        let row = self.row(i);
        row.binary_search_by_key(&j, |&(k, _)| k)
            .map_or_else(|_| T::zero(), |pos| row[pos].1)
    }

    /// Stored entries including the diagonal.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![T::zero(); self.vocab_dim()];
                for &(j, s) in row {
                    dense[j as usize] = s;
                }
                dense
            })
            .collect()
    }

    /// `Σ_j s_ij v_j` for one row.
    fn row_dot(&self, i: u32, v: &SparseVector<T>) -> T {
        let (row, other) = (self.row(i), v.entries());
        let (mut p, mut q) = (0, 0);
        let mut acc = T::zero();
        while p < row.len() && q < other.len() {
            match row[p].0.cmp(&other[q].0) {
                Ordering::Less => p += 1,
                Ordering::Greater => q += 1,
                Ordering::Equal => {
                    acc += row[p].1 * other[q].1;
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    /// `a^T S b`.
    pub fn bilinear(&self, a: &SparseVector<T>, b: &SparseVector<T>) -> T {
        a.entries()
            .iter()
            .fold(T::zero(), |acc, &(i, ai)| acc + ai * self.row_dot(i, b))
    }

    /// Adds `S v` into a dense accumulator of length `vocab_dim`.
    fn scatter(&self, v: &SparseVector<T>, out: &mut [T]) {
        for &(i, vi) in v.entries() {
            for &(j, s) in self.row(i) {
                out[j as usize] += vi * s;
            }
        }
    }

    /// Text dump: a `#` header with the construction parameters, then one
    /// `i j s_ij` line per stored entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        let p = self.params;
        writeln!(
            w,
            "# V={} exponent={} threshold={} topk={}",
            self.vocab_dim(),
            p.exponent,
            p.threshold,
            p.topk
        )?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, s) in row {
                writeln!(w, "{i} {j} {}", format_sig6(s.to_f64_lossy()))?;
            }
        }
        Ok(())
    }
}

/// Builds `s_ij = max(0, cos(e_i, e_j))^exponent` for pairs whose cosine
/// exceeds `threshold`, keeping each row's `topk` largest and then the union
/// of both directions. Terms without an embedding get only the diagonal.
pub fn build_term_similarity<T: Scalar>(
    vocab: &Vocabulary,
    table: &EmbeddingTable<T>,
    params: TermMatrixParams,
) -> TermSimilarityMatrix<T> {
    let v = vocab.len();
    let dim = table.dim();
    // Unit vectors of terms that have a non-zero embedding.
    let mut present: Vec<u32> = Vec::new();
    let mut unit: Vec<T> = Vec::new();
    for id in 0..v as u32 {
        if let Some(e) = table.get(vocab.term(id)) {
            let norm = dot(e, e).sqrt();
            if norm > T::zero() {
                present.push(id);
                unit.extend(e.iter().map(|&c| c / norm));
            }
        }
    }
    let m = present.len();
    let unit = Array2::from_shape_vec((m, dim), unit).expect("row-major unit vectors");
    let exponent = T::from_f64_lossy(params.exponent);
    let threshold = T::from_f64_lossy(params.threshold);
    let weight = |raw: T| -> Option<T> {
        if raw > threshold {
            let s = raw.max(T::zero()).powf(exponent).min(T::one());
            (s > T::zero()).then_some(s)
        } else {
            None
        }
    };

    // Candidate ranking uses a blocked Gram product; retained pairs are
    // re-scored below so both directions get the identical value.
    const BLOCK: usize = 256;
    let selected: Vec<Vec<usize>> = if params.topk == 0 || m < 2 {
        vec![Vec::new(); m]
    } else {
        let blocks: Vec<usize> = (0..m).step_by(BLOCK).collect();
        blocks
            .into_par_iter()
            .flat_map_iter(|start| {
                let end = (start + BLOCK).min(m);
                let gram = unit.slice(ndarray::s![start..end, ..]).dot(&unit.t());
                let weight = &weight;
                (start..end).map(move |r| {
                    let scores = gram.index_axis(Axis(0), r - start);
                    let mut cands: Vec<(T, usize)> = scores
                        .iter()
                        .enumerate()
                        .filter(|&(c, _)| c != r)
                        .filter_map(|(c, &raw)| weight(raw.clamp_unit()).map(|s| (s, c)))
                        .collect();
                    let by_rank = |a: &(T, usize), b: &(T, usize)| {
                        b.0.partial_cmp(&a.0)
                            .unwrap_or(Ordering::Equal)
                            .then(a.1.cmp(&b.1))
                    };
                    if cands.len() > params.topk {
                        cands.select_nth_unstable_by(params.topk - 1, by_rank);
                        cands.truncate(params.topk);
                    }
                    cands.into_iter().map(|(_, c)| c).collect()
                })
            })
            .collect()
    };

    let mut pairs: Vec<(usize, usize)> = selected
        .iter()
        .enumerate()
        .flat_map(|(r, cs)| cs.iter().map(move |&c| (r.min(c), r.max(c))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();

    let row_of = |r: usize| unit.index_axis(Axis(0), r);
    let scored: Vec<(usize, usize, T)> = pairs
        .into_par_iter()
        .filter_map(|(a, b)| {
            let raw = dot(
                row_of(a).as_slice().expect("contiguous row"),
                row_of(b).as_slice().expect("contiguous row"),
            )
            .clamp_unit();
            weight(raw).map(|s| (a, b, s))
        })
        .collect();

    let mut rows: Vec<Vec<(u32, T)>> = (0..v as u32).map(|i| vec![(i, T::one())]).collect();
    for (a, b, s) in scored {
        let (ia, ib) = (present[a], present[b]);
        rows[ia as usize].push((ib, s));
        rows[ib as usize].push((ia, s));
    }
    rows.par_iter_mut()
        .for_each(|row| row.sort_unstable_by_key(|&(j, _)| j));
    TermSimilarityMatrix { rows, params }
}

/// Soft cosine `a^T S b / (sqrt(a^T S a) sqrt(b^T S b))`; 0 when either
/// radicand is at most [`SOFT_COSINE_EPSILON`]; clamped to `[-1, 1]`.
pub fn soft_cosine<T: Scalar>(
    a: &SparseVector<T>,
    b: &SparseVector<T>,
    s: &TermSimilarityMatrix<T>,
) -> Result<T> {
    check_dims("soft cosine", a.dim(), b.dim())?;
    check_dims("soft cosine term matrix", s.vocab_dim(), a.dim())?;
    let eps = T::from_f64_lossy(SOFT_COSINE_EPSILON);
    let aa = s.bilinear(a, a);
    let bb = s.bilinear(b, b);
    if aa <= eps || bb <= eps {
        return Ok(T::zero());
    }
    Ok((s.bilinear(a, b) / (aa.sqrt() * bb.sqrt())).clamp_unit())
}

/// Square document-by-document score matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<T> {
    n: usize,
    scores: Vec<T>,
    method: Method,
    self_excluded: bool,
}

impl<T: Scalar> SimilarityMatrix<T> {
    /// Row-major scores; must be finite and symmetric to 1e-9.
    pub fn from_scores(n: usize, scores: Vec<T>, method: Method) -> Result<Self> {
        check_dims("similarity matrix cells", n * n, scores.len())?;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("similarity scores must be finite".into()));
        }
        let tol = T::from_f64_lossy(1e-9);
        for i in 0..n {
            for j in (i + 1)..n {
                if (scores[i * n + j] - scores[j * n + i]).abs() > tol {
                    return Err(Error::Config(format!(
                        "similarity matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let self_excluded = (0..n).all(|i| scores[i * n + i].is_zero());
        Ok(SimilarityMatrix {
            n,
            scores,
            method,
            self_excluded,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn self_excluded(&self) -> bool {
        self.self_excluded
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.scores[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.scores[i * self.n..(i + 1) * self.n]
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn scaled(&self, factor: T) -> Self {
        SimilarityMatrix {
            scores: self.scores.iter().map(|&s| s * factor).collect(),
            ..self.clone()
        }
    }

    /// Zeroes the diagonal.
    pub fn exclude_self(mut self) -> Self {
        for i in 0..self.n {
            self.scores[i * self.n + i] = T::zero();
        }
        self.self_excluded = true;
        self
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if self.n < 2 {
            return Err(Error::MatrixTooSmall(self.n));
        }
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Highest-scoring `j != i`, lowest index on ties. The diagonal is
    /// skipped by index, never by its value.
    pub fn most_similar(&self, i: usize) -> Result<(usize, T)> {
        self.check_index(i)?;
        let mut best: Option<(usize, T)> = None;
        for (j, &s) in self.row(i).iter().enumerate() {
            if j == i {
                continue;
            }
            match best {
                Some((_, b)) if s <= b => {}
                _ => best = Some((j, s)),
            }
        }
        Ok(best.expect("n >= 2 leaves at least one candidate"))
    }

    /// Up to `k` other documents by descending score, lowest index on ties.
    pub fn ranked_neighbors(&self, i: usize, k: usize) -> Result<Vec<(usize, T)>> {
        self.check_index(i)?;
        Ok(rank_row(self.row(i), Some(i), k))
    }

    /// `SIMM1` magic, `u32` n, method tag byte, then n² little-endian `f64`s row-major.
    pub fn write_simm<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"SIMM1")?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&[self.method.tag()])?;
        for &s in &self.scores {
            w.write_all(&s.to_f64_lossy().to_le_bytes())?;
        }
        w.flush()
    }

    pub fn save_simm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_simm(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_simm<R: Read>(mut r: R, origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::BadMatrixFile {
            path: origin.to_path_buf(),
            reason,
        };
        let io_err = |e: io::Error| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                bad("file is truncated".into())
            } else {
                Error::io(origin, e)
            }
        };
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != b"SIMM1" {
            return Err(bad("missing SIMM1 magic".into()));
        }
        let mut n = [0u8; 4];
        r.read_exact(&mut n).map_err(io_err)?;
        let n = u32::from_le_bytes(n) as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(io_err)?;
        let method = Method::from_tag(tag[0])
            .ok_or_else(|| bad(format!("unknown method tag {}", tag[0])))?;
        let mut scores = Vec::with_capacity(n * n);
        let mut cell = [0u8; 8];
        for _ in 0..n * n {
            r.read_exact(&mut cell).map_err(io_err)?;
            scores.push(T::from_f64_lossy(f64::from_le_bytes(cell)));
        }
        if r.read(&mut cell).map_err(|e| Error::io(origin, e))? != 0 {
            return Err(bad("trailing bytes after matrix".into()));
        }
        Self::from_scores(n, scores, method).map_err(|e| bad(e.to_string()))
    }

    pub fn load_simm(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_simm(BufReader::new(file), path)
    }

    /// Tab-separated rows, six significant digits.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.n {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|s| format_sig6(s.to_f64_lossy()))
                .collect();
            writeln!(w, "{}", row.join("\t"))?;
        }
        w.flush()
    }
}

/// Document vectors for one of the pipelines.
#[derive(Clone, Copy, Debug)]
pub enum DocVectors<'a, T> {
    Sparse(&'a [SparseVector<T>]),
    Dense(&'a [DenseVector<T>]),
}

impl<T> DocVectors<'_, T> {
    pub fn len(&self) -> usize {
        match self {
            DocVectors::Sparse(v) => v.len(),
            DocVectors::Dense(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn fill_symmetric<T, F>(n: usize, score: F) -> Vec<T>
where
    T: Scalar,
    F: Fn(usize, usize) -> T + Sync,
{
    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| score(i, j)).collect())
        .collect();
    mirror(n, upper)
}

/// `upper[i]` holds columns `i..n` of row `i`.
fn mirror<T: Scalar>(n: usize, upper: Vec<Vec<T>>) -> Vec<T> {
    let mut scores = vec![T::zero(); n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, s) in row.into_iter().enumerate() {
            let j = i + off;
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    scores
}

/// All-pairs scores: the upper triangle (diagonal included) is computed in
/// parallel by row and mirrored.
pub fn pairwise_matrix<T: Scalar>(
    vectors: DocVectors<'_, T>,
    method: Method,
    term_matrix: Option<&TermSimilarityMatrix<T>>,
) -> Result<SimilarityMatrix<T>> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::MatrixTooSmall(n));
    }
    let scores = match (method, vectors) {
        (Method::TfidfCosine, DocVectors::Sparse(vs)) => {
            check_uniform(vs.iter().map(SparseVector::dim))?;
            fill_symmetric(n, |i, j| {
                sparse_cosine(&vs[i], &vs[j]).expect("dimensions checked")
            })
        }
        (Method::W2vCosine, DocVectors::Dense(vs)) => {
            check_uniform(vs.iter().map(DenseVector::dim))?;
            fill_symmetric(n, |i, j| {
                cosine(vs[i].as_slice(), vs[j].as_slice()).expect("dimensions checked")
            })
        }
        (Method::W2vSoftCosine, DocVectors::Sparse(vs)) => {
            let s = term_matrix.ok_or(Error::MissingTermMatrix)?;
            check_uniform(std::iter::once(s.vocab_dim()).chain(vs.iter().map(SparseVector::dim)))?;
            soft_cosine_matrix(vs, s)
        }
        (m, _) => {
            return Err(Error::Config(format!(
                "{m} received the wrong kind of document vectors"
            )));
        }
    };
    SimilarityMatrix::from_scores(n, scores, method)
}

fn check_uniform(mut dims: impl Iterator<Item = usize>) -> Result<()> {
    let Some(first) = dims.next() else {
        return Ok(());
    };
    dims.try_for_each(|d| check_dims("document vectors", first, d))
}

/// Up to `k` entries of `row` by descending score, lowest index on ties,
/// skipping index `skip`.
pub fn rank_row<T: Scalar>(row: &[T], skip: Option<usize>, k: usize) -> Vec<(usize, T)> {
    let mut ranked: Vec<(usize, T)> = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != skip)
        .map(|(j, &s)| (j, s))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    ranked
}

/// Precomputed self-radicands `a^T S a` for a document set.
///
/// Pair `(i, j)` with `i <= j` scatters `S a_i` into a dense scratch row and
/// then costs one pass over `a_j`'s entries; both the full matrix and single
/// rows go through [`SoftCosineIndex::upper_row`] so they agree bit for bit.
struct SoftCosineIndex<'a, T> {
    vs: &'a [SparseVector<T>],
    s: &'a TermSimilarityMatrix<T>,
    radicands: Vec<T>,
}

impl<'a, T: Scalar> SoftCosineIndex<'a, T> {
    fn new(vs: &'a [SparseVector<T>], s: &'a TermSimilarityMatrix<T>) -> Self {
        let v = s.vocab_dim();
        let radicands = vs
            .par_iter()
            .map_init(
                || vec![T::zero(); v],
                |scratch, a| {
                    s.scatter(a, scratch);
                    let r = dot_projected(a, scratch);
                    clear(scratch, a, s);
                    r
                },
            )
            .collect();
        SoftCosineIndex { vs, s, radicands }
    }

    fn scratch(&self) -> Vec<T> {
        vec![T::zero(); self.s.vocab_dim()]
    }

    /// Scores of document `i` against `cols`, all of which must be `>= i`.
    fn upper_row(&self, i: usize, cols: impl Iterator<Item = usize>, scratch: &mut [T]) -> Vec<T> {
        let eps = T::from_f64_lossy(SOFT_COSINE_EPSILON);
        let a = &self.vs[i];
        self.s.scatter(a, scratch);
        let row = cols
            .map(|j| {
                let (ra, rb) = (self.radicands[i], self.radicands[j]);
                if ra <= eps || rb <= eps {
                    T::zero()
                } else {
                    (dot_projected(&self.vs[j], scratch) / (ra.sqrt() * rb.sqrt())).clamp_unit()
                }
            })
            .collect();
        clear(scratch, a, self.s);
        row
    }

    fn matrix(&self) -> Vec<T> {
        let n = self.vs.len();
        let upper: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |scratch, i| self.upper_row(i, i..n, scratch),
            )
            .collect();
        mirror(n, upper)
    }

    fn row(&self, i: usize) -> Vec<T> {
        let n = self.vs.len();
        let lower: Vec<T> = (0..i)
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |scratch, j| self.upper_row(j, std::iter::once(i), scratch)[0],
            )
            .collect();
        let mut scratch = self.scratch();
        let mut row = lower;
        row.extend(self.upper_row(i, i..n, &mut scratch));
        row
    }
}

fn dot_projected<T: Scalar>(b: &SparseVector<T>, projected: &[T]) -> T {
    b.entries()
        .iter()
        .fold(T::zero(), |acc, &(t, bt)| acc + bt * projected[t as usize])
}

fn soft_cosine_matrix<T: Scalar>(vs: &[SparseVector<T>], s: &TermSimilarityMatrix<T>) -> Vec<T> {
    SoftCosineIndex::new(vs, s).matrix()
}

/// Row `i` of the matrix [`pairwise_matrix`] would build, without building it.
pub fn similarity_row<T: Scalar>(
    vectors: DocVectors<'_, T>,
    method: Method,
    term_matrix: Option<&TermSimilarityMatrix<T>>,
    i: usize,
) -> Result<Vec<T>> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::MatrixTooSmall(n));
    }
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    // Matrix cells are computed as score(min, max); mirror that argument order.
    let ordered = |j: usize| (i.min(j), i.max(j));
    match (method, vectors) {
        (Method::TfidfCosine, DocVectors::Sparse(vs)) => {
            check_uniform(vs.iter().map(SparseVector::dim))?;
            Ok((0..n)
                .map(|j| {
                    let (a, b) = ordered(j);
                    sparse_cosine(&vs[a], &vs[b]).expect("dimensions checked")
                })
                .collect())
        }
        (Method::W2vCosine, DocVectors::Dense(vs)) => {
            check_uniform(vs.iter().map(DenseVector::dim))?;
            Ok((0..n)
                .map(|j| {
                    let (a, b) = ordered(j);
                    cosine(vs[a].as_slice(), vs[b].as_slice()).expect("dimensions checked")
                })
                .collect())
        }
        (Method::W2vSoftCosine, DocVectors::Sparse(vs)) => {
            let s = term_matrix.ok_or(Error::MissingTermMatrix)?;
            check_uniform(std::iter::once(s.vocab_dim()).chain(vs.iter().map(SparseVector::dim)))?;
            Ok(SoftCosineIndex::new(vs, s).row(i))
        }
        (m, _) => Err(Error::Config(format!(
            "{m} received the wrong kind of document vectors"
        ))),
    }
}

fn clear<T: Scalar>(scratch: &mut [T], v: &SparseVector<T>, s: &TermSimilarityMatrix<T>) {
    for &(i, _) in v.entries() {
        for &(j, _) in s.row(i) {
            scratch[j as usize] = T::zero();
        }
    }
}
