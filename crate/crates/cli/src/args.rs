use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use semsim::{
    DfPruning, LoadOptions, Method, OovPolicy, PipelineConfig, SoftWeighting, TermMatrixParams,
    TfIdfConfig,
};
use serde::Serialize;

/// Short-text semantic similarity: tf-idf cosine, averaged word2vec cosine,
/// and soft cosine, with top-1 nearest-neighbour evaluation.
///
/// Every flag can also be set through a `SEMSIM_*` environment variable,
/// shown in each subcommand's help.
#[derive(Parser, Debug)]
#[command(name = "semsim", version)]
pub struct Cli {
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = ArgAction::Count, env = "SEMSIM_VERBOSE")]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Load an AG News CSV, optionally sample it, preprocess, and write a corpus cache.
    Ingest(IngestArgs),
    /// Keep only the embedding rows whose key occurs in a corpus cache.
    FilterEmbeddings(FilterArgs),
    /// Build the document similarity matrix for one method.
    Simmatrix(SimmatrixArgs),
    /// Top-1 nearest-neighbour accuracy per method plus a summary table.
    Evaluate(EvaluateArgs),
    /// Rank the documents most similar to a corpus document or a free text.
    Query(QueryArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PreprocessArgs {
    /// Stopword file, one word per line; defaults to the bundled English list.
    #[arg(long, env = "SEMSIM_STOPWORDS")]
    pub stopwords: Option<PathBuf>,
    /// Tab-separated `surface<TAB>lemma` file; defaults to the bundled lexicon.
    #[arg(long, env = "SEMSIM_LEXICON")]
    pub lexicon: Option<PathBuf>,
    /// Drop tokens shorter than this many characters.
    #[arg(long, default_value_t = 2, env = "SEMSIM_MIN_TOKEN_LENGTH")]
    pub min_token_length: usize,
    /// Keep the original letter case.
    #[arg(long, env = "SEMSIM_NO_LOWERCASE")]
    pub no_lowercase: bool,
}

impl PreprocessArgs {
    pub fn config(&self) -> semsim::PreprocessConfig {
        semsim::PreprocessConfig {
            lowercase: !self.no_lowercase,
            min_token_length: self.min_token_length,
            stopword_path: self.stopwords.clone(),
            lexicon_path: self.lexicon.clone(),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    /// AG News CSV: class index, title, description.
    #[arg(long, env = "SEMSIM_INPUT")]
    pub input: PathBuf,
    /// Corpus cache to write (JSON lines).
    #[arg(long, env = "SEMSIM_CORPUS")]
    pub output: PathBuf,
    /// Keep a uniform random sample of this many documents.
    #[arg(long, env = "SEMSIM_SAMPLE")]
    pub sample: Option<usize>,
    /// Seed for sampling.
    #[arg(long, default_value_t = 42, env = "SEMSIM_SEED")]
    pub seed: u64,
    /// Class index to label mapping, e.g. `1=World,2=Sports`.
    #[arg(long, env = "SEMSIM_LABEL_MAP")]
    pub label_map: Option<String>,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EmbeddingArgs {
    /// word2vec text file, optionally gzipped.
    #[arg(long, env = "SEMSIM_EMBEDDINGS")]
    pub embeddings: Option<PathBuf>,
    /// Read at most this many embedding rows.
    #[arg(long, env = "SEMSIM_LIMIT")]
    pub limit: Option<usize>,
    /// Prefix stripped from embedding keys before lookup, e.g. `/c/en/`.
    #[arg(long, env = "SEMSIM_STRIP_PREFIX")]
    pub strip_prefix: Option<String>,
}

impl EmbeddingArgs {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            limit: self.limit,
            strip_prefix: self.strip_prefix.clone(),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct FilterArgs {
    #[arg(long, env = "SEMSIM_CORPUS")]
    pub corpus: PathBuf,
    /// Full embedding table to filter.
    #[arg(long, env = "SEMSIM_EMBEDDINGS")]
    pub embeddings: PathBuf,
    /// Filtered word2vec text file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, env = "SEMSIM_STRIP_PREFIX")]
    pub strip_prefix: Option<String>,
    #[arg(long, env = "SEMSIM_LIMIT")]
    pub limit: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Counts,
    Tfidf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub embedding: EmbeddingArgs,
    /// Average only over in-vocabulary tokens instead of counting OOV tokens as zeros.
    #[arg(long, env = "SEMSIM_SKIP_OOV")]
    pub skip_oov: bool,
    /// Smoothed idf `ln((1+N)/(1+df))+1`; `false` selects `ln(N/df)`.
    #[arg(long, default_value_t = true, action = ArgAction::Set, env = "SEMSIM_SMOOTHING")]
    pub smoothing: bool,
    /// Leave tf-idf vectors unnormalized.
    #[arg(long, env = "SEMSIM_NO_NORMALIZE")]
    pub no_normalize: bool,
    /// Drop terms found in fewer documents.
    #[arg(long, default_value_t = 1, env = "SEMSIM_MIN_DF")]
    pub min_df: usize,
    /// Drop terms found in more than this fraction of documents.
    #[arg(long, default_value_t = 1.0, env = "SEMSIM_MAX_DF")]
    pub max_df: f64,
    /// Term similarities are raised to this power.
    #[arg(long, default_value_t = 2.0, env = "SEMSIM_EXPONENT")]
    pub exponent: f64,
    /// Term similarities at or below this are dropped.
    #[arg(long, default_value_t = 0.0, env = "SEMSIM_THRESHOLD")]
    pub threshold: f64,
    /// Nearest terms kept per vocabulary row.
    #[arg(long, default_value_t = 100, env = "SEMSIM_TOPK")]
    pub topk: usize,
    /// Document weighting for the soft cosine.
    #[arg(long, value_enum, default_value_t = Weighting::Counts, env = "SEMSIM_SOFT_WEIGHTING")]
    pub soft_weighting: Weighting,
    /// Corpus cache to fit idf statistics on instead of the evaluated corpus.
    #[arg(long, env = "SEMSIM_FIT_CORPUS")]
    pub fit_corpus: Option<PathBuf>,
}

impl ModelArgs {
    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            tfidf: TfIdfConfig {
                smoothing: self.smoothing,
                normalize: !self.no_normalize,
                pruning: DfPruning {
                    min_df: self.min_df,
                    max_df: self.max_df,
                },
            },
            oov: if self.skip_oov {
                OovPolicy::Skip
            } else {
                OovPolicy::ZeroInMean
            },
            term_matrix: TermMatrixParams {
                exponent: self.exponent,
                threshold: self.threshold,
                topk: self.topk,
            },
            soft_weighting: match self.soft_weighting {
                Weighting::Counts => SoftWeighting::Counts,
                Weighting::Tfidf => SoftWeighting::Tfidf,
            },
        }
    }
}

fn parse_method(s: &str) -> Result<Method, semsim::Error> {
    s.parse()
}

#[derive(Args, Debug, Serialize)]
pub struct SimmatrixArgs {
    #[arg(long, env = "SEMSIM_CORPUS")]
    pub corpus: PathBuf,
    /// tfidf-cosine, w2v-cosine or w2v-softcosine.
    #[arg(long, default_value = "tfidf-cosine", value_parser = parse_method, env = "SEMSIM_METHOD")]
    pub method: Method,
    /// Binary matrix file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the matrix as tab-separated text.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// Write the term similarity matrix (soft cosine only).
    #[arg(long)]
    pub term_matrix_out: Option<PathBuf>,
    /// Write the sparse document vectors.
    #[arg(long)]
    pub vectors_out: Option<PathBuf>,
    /// Write the fitted tf-idf model as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, env = "SEMSIM_CORPUS")]
    pub corpus: PathBuf,
    /// Score a matrix written by `simmatrix` instead of computing one.
    #[arg(long, conflicts_with = "method")]
    pub matrix: Option<PathBuf>,
    /// Comma-separated methods, or `all`.
    #[arg(
        long,
        default_value = "all",
        value_delimiter = ',',
        env = "SEMSIM_METHOD"
    )]
    pub method: Vec<String>,
    /// Directory for the report files.
    #[arg(long, default_value = "reports", env = "SEMSIM_OUT_DIR")]
    pub out_dir: PathBuf,
    /// Also write each document's matched neighbour.
    #[arg(long)]
    pub pairs: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

impl EvaluateArgs {
    pub fn methods(&self) -> Result<Vec<Method>, semsim::Error> {
        let mut out = Vec::new();
        for name in &self.method {
            if name == "all" {
                out.extend(Method::ALL);
            } else {
                out.push(name.parse()?);
            }
        }
        out.dedup();
        Ok(out)
    }
}

#[derive(Args, Debug, Serialize)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["id", "text"])))]
pub struct QueryArgs {
    #[arg(long, env = "SEMSIM_CORPUS")]
    pub corpus: PathBuf,
    /// Corpus document id.
    #[arg(long)]
    pub id: Option<usize>,
    /// Free text, preprocessed like the corpus.
    #[arg(long)]
    pub text: Option<String>,
    /// Number of neighbours.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value = "tfidf-cosine", value_parser = parse_method, env = "SEMSIM_METHOD")]
    pub method: Method,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub preprocess: PreprocessArgs,
}
