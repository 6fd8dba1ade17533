//! The three end-to-end similarity pipelines: fitted artifacts plus the
//! vectorized corpus, ready to produce a similarity matrix or answer queries.

use serde::{Deserialize, Serialize};

use crate::embedding::{doc_vector, DenseVector, EmbeddingTable, OovPolicy};
use crate::error::{Error, Result};
use crate::preprocess::Token;
use crate::scalar::Scalar;
use crate::similarity::{
    build_term_similarity, cosine, pairwise_matrix, similarity_row, soft_cosine, sparse_cosine,
    DocVectors, Method, SimilarityMatrix, TermMatrixParams, TermSimilarityMatrix,
};
use crate::tfidf::{SparseVector, TfIdfConfig, TfIdfModel, Vocabulary};

/// Document weighting fed to the soft cosine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoftWeighting {
    /// Raw bag-of-words counts.
    #[default]
    Counts,
    Tfidf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tfidf: TfIdfConfig,
    pub oov: OovPolicy,
    pub term_matrix: TermMatrixParams,
    pub soft_weighting: SoftWeighting,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DocVector<T> {
    Sparse(SparseVector<T>),
    Dense(DenseVector<T>),
}

impl<T: Scalar> DocVector<T> {
    pub fn is_zero(&self) -> bool {
        match self {
            DocVector::Sparse(v) => v.is_zero(),
            DocVector::Dense(v) => v.is_zero(),
        }
    }
}

enum Vectors<T> {
    Sparse(Vec<SparseVector<T>>),
    Dense(Vec<DenseVector<T>>),
}

enum Featurizer<'t, T> {
    Tfidf(TfIdfModel<T>),
    Counts(Vocabulary),
    Average(&'t EmbeddingTable<T>, OovPolicy),
}

impl<T: Scalar> Featurizer<'_, T> {
    fn sparse(&self, tokens: &[Token]) -> SparseVector<T> {
        match self {
            Featurizer::Tfidf(m) => m.transform(tokens),
            Featurizer::Counts(v) => v.counts(tokens),
            Featurizer::Average(..) => unreachable!("dense featurizer"),
        }
    }
}

/// One similarity method fitted to a corpus.
pub struct Pipeline<'t, T> {
    method: Method,
    featurizer: Featurizer<'t, T>,
    term_matrix: Option<TermSimilarityMatrix<T>>,
    vectors: Vectors<T>,
}

impl<'t, T: Scalar> Pipeline<'t, T> {
    /// Fits on `docs` and vectorizes them.
    pub fn build(
        method: Method,
        docs: &[Vec<Token>],
        table: Option<&'t EmbeddingTable<T>>,
        config: &PipelineConfig,
    ) -> Result<Self> {
        Self::build_with_fit(method, docs, None, table, config)
    }

    /// Like [`Pipeline::build`], but fits tf-idf statistics on `fit_docs`
    /// when given.
    pub fn build_with_fit(
        method: Method,
        docs: &[Vec<Token>],
        fit_docs: Option<&[Vec<Token>]>,
        table: Option<&'t EmbeddingTable<T>>,
        config: &PipelineConfig,
    ) -> Result<Self> {
        let fit_on = fit_docs.unwrap_or(docs);
        let need_table = || {
            table.ok_or_else(|| Error::MissingEmbeddings {
                method: method.to_string(),
            })
        };
        let (featurizer, term_matrix) = match method {
            Method::TfidfCosine => (
                Featurizer::Tfidf(TfIdfModel::fit(fit_on, config.tfidf)?),
                None,
            ),
            Method::W2vCosine => {
                if docs.is_empty() {
                    return Err(Error::EmptyCorpus);
                }
                (Featurizer::Average(need_table()?, config.oov), None)
            }
            Method::W2vSoftCosine => {
                let table = need_table()?;
                let featurizer = match config.soft_weighting {
                    SoftWeighting::Counts => Featurizer::Counts(Vocabulary::build(docs)?),
                    SoftWeighting::Tfidf => {
                        Featurizer::Tfidf(TfIdfModel::fit(fit_on, config.tfidf)?)
                    }
                };
                let vocab = match &featurizer {
                    Featurizer::Tfidf(m) => m.vocabulary(),
                    Featurizer::Counts(v) => v,
                    Featurizer::Average(..) => unreachable!(),
                };
                let s = build_term_similarity(vocab, table, config.term_matrix);
                (featurizer, Some(s))
            }
        };
        let vectors = match &featurizer {
            Featurizer::Average(table, oov) => {
                use rayon::prelude::*;
                Vectors::Dense(
                    docs.par_iter()
                        .map(|d| doc_vector(d, table, *oov))
                        .collect(),
                )
            }
            Featurizer::Tfidf(m) => Vectors::Sparse(m.transform_corpus(docs)),
            Featurizer::Counts(v) => Vectors::Sparse(docs.iter().map(|d| v.counts(d)).collect()),
        };
        Ok(Pipeline {
            method,
            featurizer,
            term_matrix,
            vectors,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        match &self.vectors {
            Vectors::Sparse(v) => v.len(),
            Vectors::Dense(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn term_matrix(&self) -> Option<&TermSimilarityMatrix<T>> {
        self.term_matrix.as_ref()
    }

    pub fn tfidf_model(&self) -> Option<&TfIdfModel<T>> {
        match &self.featurizer {
            Featurizer::Tfidf(m) => Some(m),
            _ => None,
        }
    }

    pub fn sparse_vectors(&self) -> Option<&[SparseVector<T>]> {
        match &self.vectors {
            Vectors::Sparse(v) => Some(v),
            Vectors::Dense(_) => None,
        }
    }

    /// Documents whose feature vector is all zeros.
    pub fn zero_vector_docs(&self) -> usize {
        match &self.vectors {
            Vectors::Sparse(v) => v.iter().filter(|x| x.is_zero()).count(),
            Vectors::Dense(v) => v.iter().filter(|x| x.is_zero()).count(),
        }
    }

    pub fn vectorize(&self, tokens: &[Token]) -> DocVector<T> {
        match &self.featurizer {
            Featurizer::Average(table, oov) => DocVector::Dense(doc_vector(tokens, table, *oov)),
            f => DocVector::Sparse(f.sparse(tokens)),
        }
    }

    /// Similarity of an arbitrary vector against corpus document `doc`.
    pub fn score(&self, query: &DocVector<T>, doc: usize) -> Result<T> {
        if doc >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: doc,
                n: self.len(),
            });
        }
        match (&self.vectors, query) {
            (Vectors::Dense(vs), DocVector::Dense(q)) => cosine(q.as_slice(), vs[doc].as_slice()),
            (Vectors::Sparse(vs), DocVector::Sparse(q)) => match &self.term_matrix {
                Some(s) => soft_cosine(q, &vs[doc], s),
                None => sparse_cosine(q, &vs[doc]),
            },
            _ => Err(Error::Config(format!(
                "{} query vector has the wrong kind",
                self.method
            ))),
        }
    }

    fn doc_vectors(&self) -> DocVectors<'_, T> {
        match &self.vectors {
            Vectors::Sparse(v) => DocVectors::Sparse(v),
            Vectors::Dense(v) => DocVectors::Dense(v),
        }
    }

    /// Full document-by-document matrix, diagonal not yet excluded.
    pub fn similarity_matrix(&self) -> Result<SimilarityMatrix<T>> {
        pairwise_matrix(self.doc_vectors(), self.method, self.term_matrix.as_ref())
    }

    /// Row `doc` of [`Pipeline::similarity_matrix`], computed on its own.
    pub fn similarity_row(&self, doc: usize) -> Result<Vec<T>> {
        similarity_row(
            self.doc_vectors(),
            self.method,
            self.term_matrix.as_ref(),
            doc,
        )
    }
}
