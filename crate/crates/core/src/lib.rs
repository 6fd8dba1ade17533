//! Semantic similarity between short texts.
//!
//! Three document similarity methods share one preprocessing front end:
//!
//! - cosine over L2-normalized tf-idf vectors ([`tfidf`]),
//! - cosine over averaged pre-trained word embeddings ([`embedding`]),
//! - soft cosine over bag-of-words counts with a term similarity matrix
//!   derived from embedding cosines ([`similarity`]).
//!
//! [`eval`] scores each method by top-1 nearest-neighbour label agreement
//! on a labeled corpus. Numeric types are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix `f64`, which the command-line tool uses.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod similarity;
pub mod tfidf;

pub use corpus::{load_agnews_csv, preprocess_corpus, sample, Corpus, Document, LabelMap};
pub use embedding::{
    doc_vector, filter_word2vec_text, load_word2vec_text, FilterStats, LoadOptions, OovPolicy,
};
pub use error::{Error, Result};
pub use eval::{
    compare_methods, evaluate_pipeline, report_text, summary_table, top1_accuracy, write_pairs,
    ClassCount, EvalConfig, EvalReport, NeighborPair,
};
pub use pipeline::{DocVector, PipelineConfig, SoftWeighting};
pub use preprocess::{
    preprocess, LemmaLexicon, PreprocessConfig, Preprocessor, StopwordList, Token,
};
pub use scalar::Scalar;
pub use similarity::{
    build_term_similarity, cosine, pairwise_matrix, rank_row, similarity_row, soft_cosine,
    sparse_cosine, DocVectors, Method, TermMatrixParams,
};
pub use tfidf::{write_vector_dump, DfPruning, ModelDump, TfIdfConfig, Vocabulary};

pub type SparseVector = tfidf::SparseVector<f64>;
pub type SparseVectorF32 = tfidf::SparseVector<f32>;
pub type DenseVector = embedding::DenseVector<f64>;
pub type DenseVectorF32 = embedding::DenseVector<f32>;
pub type EmbeddingTable = embedding::EmbeddingTable<f64>;
pub type EmbeddingTableF32 = embedding::EmbeddingTable<f32>;
pub type TfIdfModel = tfidf::TfIdfModel<f64>;
pub type TfIdfModelF32 = tfidf::TfIdfModel<f32>;
pub type TermSimilarityMatrix = similarity::TermSimilarityMatrix<f64>;
pub type TermSimilarityMatrixF32 = similarity::TermSimilarityMatrix<f32>;
pub type SimilarityMatrix = similarity::SimilarityMatrix<f64>;
pub type SimilarityMatrixF32 = similarity::SimilarityMatrix<f32>;
pub type Pipeline<'t> = pipeline::Pipeline<'t, f64>;
