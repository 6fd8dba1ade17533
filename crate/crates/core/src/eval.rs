//! Nearest-neighbour label agreement (top-1 accuracy) and method comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::preprocess::Token;
use crate::scalar::Scalar;
use crate::similarity::{Method, SimilarityMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub n: usize,
    pub n_correct: usize,
}

/// A document and the neighbour it was matched with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborPair {
    pub doc_id: usize,
    pub neighbor_id: usize,
    pub score: f64,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub n_docs: usize,
    pub n_correct: usize,
    /// Percentage in `[0, 100]`.
    pub accuracy: f64,
    pub per_class: BTreeMap<String, ClassCount>,
    /// Unknown when scoring a precomputed matrix.
    pub zero_vector_docs: Option<usize>,
    pub config_echo: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<NeighborPair>>,
}

/// Matches each document with its most similar other document and counts
/// label agreement. Pairs are always returned; drop them if not wanted.
pub fn top1_accuracy<T: Scalar, L: AsRef<str>>(
    matrix: &SimilarityMatrix<T>,
    labels: &[L],
) -> Result<EvalReport> {
    let n = matrix.n();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            labels: labels.len(),
            n,
        });
    }
    if n < 2 {
        return Err(Error::MatrixTooSmall(n));
    }
    let mut per_class: BTreeMap<String, ClassCount> = BTreeMap::new();
    let mut pairs = Vec::with_capacity(n);
    for (i, label) in labels.iter().enumerate() {
        let (j, score) = matrix.most_similar(i)?;
        let correct = labels[j].as_ref() == label.as_ref();
        let class = per_class.entry(label.as_ref().to_string()).or_default();
        class.n += 1;
        class.n_correct += usize::from(correct);
        pairs.push(NeighborPair {
            doc_id: i,
            neighbor_id: j,
            score: score.to_f64_lossy(),
            correct,
        });
    }
    let n_correct = pairs.iter().filter(|p| p.correct).count();
    Ok(EvalReport {
        method: matrix.method(),
        n_docs: n,
        n_correct,
        accuracy: 100.0 * n_correct as f64 / n as f64,
        per_class,
        zero_vector_docs: None,
        config_echo: serde_json::Value::Null,
        pairs: Some(pairs),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub methods: Vec<Method>,
    pub pipeline: PipelineConfig,
    pub include_pairs: bool,
    /// Effective run configuration copied into every report.
    pub config_echo: serde_json::Value,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            methods: Method::ALL.to_vec(),
            pipeline: PipelineConfig::default(),
            include_pairs: false,
            config_echo: serde_json::Value::Null,
        }
    }
}

/// Evaluates one fitted pipeline.
pub fn evaluate_pipeline<T: Scalar>(
    pipeline: &Pipeline<'_, T>,
    labels: &[String],
    config: &EvalConfig,
) -> Result<(SimilarityMatrix<T>, EvalReport)> {
    let matrix = pipeline.similarity_matrix()?.exclude_self();
    let mut report = top1_accuracy(&matrix, labels)?;
    report.zero_vector_docs = Some(pipeline.zero_vector_docs());
    report.config_echo = config.config_echo.clone();
    if !config.include_pairs {
        report.pairs = None;
    }
    Ok((matrix, report))
}

/// Runs every requested method on the same preprocessed corpus.
pub fn compare_methods<T: Scalar>(
    corpus: &Corpus,
    table: Option<&EmbeddingTable<T>>,
    config: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    let docs: Vec<Vec<Token>> = corpus.docs.iter().map(|d| d.tokens.clone()).collect();
    let labels = corpus.labels();
    config
        .methods
        .iter()
        .map(|&method| {
            let with_context = |source: Error| Error::Method {
                method: method.to_string(),
                source: Box::new(source),
            };
            let pipeline =
                Pipeline::build(method, &docs, table, &config.pipeline).map_err(with_context)?;
            evaluate_pipeline(&pipeline, &labels, config)
                .map(|(_, report)| report)
                .map_err(with_context)
        })
        .collect()
}

/// Side-by-side accuracy table, two decimals.
pub fn summary_table(reports: &[EvalReport]) -> String {
    const HEAD: &str = "Methods used to calculate text similarity";
    let width = reports
        .iter()
        .map(|r| r.method.description().len())
        .chain([HEAD.len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{HEAD:<width$}  Top-1 Accuracy (in %)");
    let _ = writeln!(out, "{}  {}", "-".repeat(width), "-".repeat(21));
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>21.2}",
            r.method.description(),
            r.accuracy
        );
    }
    if let Some(first) = reports.first() {
        let _ = writeln!(out, "\ndocuments: {}", first.n_docs);
    }
    if let Some(note) = ordering_note(reports) {
        let _ = writeln!(out, "{note}");
    }
    out
}

/// Informational: whether tf-idf >= soft cosine >= averaged-embedding cosine.
pub fn ordering_note(reports: &[EvalReport]) -> Option<String> {
    let acc = |m: Method| reports.iter().find(|r| r.method == m).map(|r| r.accuracy);
    let (t, w, s) = (
        acc(Method::TfidfCosine)?,
        acc(Method::W2vCosine)?,
        acc(Method::W2vSoftCosine)?,
    );
    let holds = t >= s && s >= w;
    Some(format!(
        "ordering tfidf-cosine >= w2v-softcosine >= w2v-cosine: {}",
        if holds { "holds" } else { "does not hold" }
    ))
}

/// Human-readable single-method report.
pub fn report_text(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "method: {} ({})", r.method, r.method.description());
    let _ = writeln!(out, "documents: {}", r.n_docs);
    let _ = writeln!(out, "correct: {}", r.n_correct);
    let _ = writeln!(out, "top-1 accuracy: {:.2}%", r.accuracy);
    match r.zero_vector_docs {
        Some(z) => {
            let _ = writeln!(out, "zero-vector documents: {z}");
        }
        None => {
            let _ = writeln!(out, "zero-vector documents: n/a");
        }
    }
    let width = r
        .per_class
        .keys()
        .map(String::len)
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "\n{:<width$}  {:>6}  {:>7}  {:>8}",
        "class", "n", "correct", "accuracy"
    );
    for (label, c) in &r.per_class {
        let pct = if c.n == 0 {
            0.0
        } else {
            100.0 * c.n_correct as f64 / c.n as f64
        };
        let _ = writeln!(
            out,
            "{label:<width$}  {:>6}  {:>7}  {pct:>8.2}",
            c.n, c.n_correct
        );
    }
    if !r.config_echo.is_null() {
        let _ = writeln!(
            out,
            "\nconfig: {}",
            serde_json::to_string(&r.config_echo).expect("json value serializes")
        );
    }
    out
}

/// One `doc_id neighbor_id score correct` line per document, tab separated.
pub fn write_pairs<W: Write>(pairs: &[NeighborPair], mut w: W) -> io::Result<()> {
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            p.doc_id,
            p.neighbor_id,
            p.score,
            u8::from(p.correct)
        )?;
    }
    w.flush()
}
