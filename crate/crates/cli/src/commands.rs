use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use semsim::eval::ordering_note;
use semsim::tfidf::write_vector_dump;
use semsim::{
    Corpus, EmbeddingTable, EvalConfig, EvalReport, LabelMap, Method, Pipeline, Preprocessor,
    SimilarityMatrix, Token,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Cli, Command, EvaluateArgs, FilterArgs, IngestArgs, ModelArgs, QueryArgs, SimmatrixArgs,
};

struct Ctx {
    verbose: u8,
    echo: serde_json::Value,
    started: Instant,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!(
                "[{:7.2}s] {}",
                self.started.elapsed().as_secs_f64(),
                msg.as_ref()
            );
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut echo = serde_json::to_value(&cli.command).context("serializing run configuration")?;
    echo["verbose"] = json!(cli.verbose);
    let ctx = Ctx {
        verbose: cli.verbose,
        echo,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::FilterEmbeddings(a) => filter_embeddings(&ctx, a),
        Command::Simmatrix(a) => simmatrix(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Query(a) => query(&ctx, a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|()| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing json")?;
    text.push('\n');
    write_with(path, |w| w.write_all(text.as_bytes()))
}

fn read_corpus(ctx: &Ctx, path: &Path) -> Result<Corpus> {
    let corpus = Corpus::read_jsonl(path)?;
    ctx.log(format!(
        "read {} documents from {}",
        corpus.len(),
        path.display()
    ));
    Ok(corpus)
}

fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<()> {
    let labels = match &a.label_map {
        Some(spec) => LabelMap::parse(spec)?,
        None => LabelMap::default(),
    };
    let pre = Preprocessor::from_config(a.preprocess.config())?;
    let mut corpus = semsim::load_agnews_csv(&a.input, &labels)?;
    ctx.log(format!(
        "loaded {} rows from {}",
        corpus.len(),
        a.input.display()
    ));
    if let Some(n) = a.sample {
        corpus = semsim::sample(&corpus, n, a.seed)?;
        ctx.log(format!("sampled {n} documents with seed {}", a.seed));
    }
    let corpus = semsim::preprocess_corpus(corpus, &pre);
    corpus.write_jsonl(&a.output)?;
    println!("documents: {}", corpus.len());
    for (label, count) in corpus.class_histogram() {
        println!("  {label}: {count}");
    }
    let empty = corpus.docs.iter().filter(|d| d.tokens.is_empty()).count();
    if empty > 0 {
        eprintln!("warning: {empty} documents have no tokens after preprocessing");
    }
    Ok(())
}

fn filter_embeddings(ctx: &Ctx, a: &FilterArgs) -> Result<()> {
    let corpus = read_corpus(ctx, &a.corpus)?;
    let vocab: HashSet<String> = corpus
        .docs
        .iter()
        .flat_map(|d| d.tokens.iter().map(|t| t.as_str().to_string()))
        .collect();
    let opts = semsim::LoadOptions {
        limit: a.limit,
        strip_prefix: a.strip_prefix.clone(),
    };
    let out = create(&a.output)?;
    let stats = semsim::filter_word2vec_text(&a.embeddings, &vocab, &opts, out)?;
    ctx.log(format!("scanned {} embedding rows", stats.rows_scanned));
    println!(
        "kept {} of {} corpus terms (dim {}) in {}",
        stats.kept,
        stats.vocab_size,
        stats.dim,
        a.output.display()
    );
    if stats.kept < stats.vocab_size {
        eprintln!(
            "warning: {:.2}% of corpus vocabulary ({} terms) not found in {}",
            stats.oov_rate(),
            stats.vocab_size - stats.kept,
            a.embeddings.display()
        );
    }
    Ok(())
}

fn load_table(ctx: &Ctx, model: &ModelArgs, methods: &[Method]) -> Result<Option<EmbeddingTable>> {
    if !methods.iter().any(|m| m.needs_embeddings()) {
        return Ok(None);
    }
    let Some(path) = &model.embedding.embeddings else {
        return Ok(None);
    };
    let table: EmbeddingTable = semsim::load_word2vec_text(path, &model.embedding.load_options())?;
    ctx.log(format!(
        "loaded {} vectors of dim {} from {}",
        table.len(),
        table.dim(),
        path.display()
    ));
    Ok(Some(table))
}

fn fit_docs(ctx: &Ctx, model: &ModelArgs) -> Result<Option<Vec<Vec<Token>>>> {
    match &model.fit_corpus {
        Some(path) => Ok(Some(token_lists(&read_corpus(ctx, path)?))),
        None => Ok(None),
    }
}

fn token_lists(corpus: &Corpus) -> Vec<Vec<Token>> {
    corpus.docs.iter().map(|d| d.tokens.clone()).collect()
}

fn build<'t>(
    ctx: &Ctx,
    method: Method,
    docs: &[Vec<Token>],
    fit: Option<&[Vec<Token>]>,
    table: Option<&'t EmbeddingTable>,
    model: &ModelArgs,
) -> Result<Pipeline<'t>> {
    let p = Pipeline::build_with_fit(method, docs, fit, table, &model.pipeline_config())
        .with_context(|| format!("building {method}"))?;
    ctx.log(format!("built {method} over {} documents", p.len()));
    if let Some(s) = p.term_matrix() {
        ctx.log(format!(
            "term matrix: {} terms, {} stored entries",
            s.vocab_dim(),
            s.nnz()
        ));
    }
    Ok(p)
}

fn simmatrix(ctx: &Ctx, a: &SimmatrixArgs) -> Result<()> {
    let corpus = read_corpus(ctx, &a.corpus)?;
    let docs = token_lists(&corpus);
    let fit = fit_docs(ctx, &a.model)?;
    let table = load_table(ctx, &a.model, &[a.method])?;
    let pipeline = build(
        ctx,
        a.method,
        &docs,
        fit.as_deref(),
        table.as_ref(),
        &a.model,
    )?;
    let matrix = pipeline.similarity_matrix()?.exclude_self();
    ctx.log("matrix computed");
    matrix.save_simm(&a.output)?;
    if let Some(path) = &a.tsv {
        write_with(path, |w| matrix.write_tsv(w))?;
    }
    if let Some(path) = &a.term_matrix_out {
        match pipeline.term_matrix() {
            Some(s) => write_with(path, |w| s.write_text(w))?,
            None => eprintln!(
                "warning: {} has no term matrix; {} not written",
                a.method,
                path.display()
            ),
        }
    }
    if let Some(path) = &a.vectors_out {
        match pipeline.sparse_vectors() {
            Some(v) => write_with(path, |w| write_vector_dump(v, w))?,
            None => eprintln!(
                "warning: {} uses dense vectors; {} not written",
                a.method,
                path.display()
            ),
        }
    }
    if let Some(path) = &a.model_out {
        match pipeline.tfidf_model() {
            Some(m) => write_json(path, &m.to_dump())?,
            None => eprintln!(
                "warning: {} has no tf-idf model; {} not written",
                a.method,
                path.display()
            ),
        }
    }
    println!(
        "{} matrix {n}x{n} written to {}",
        a.method,
        a.output.display(),
        n = matrix.n()
    );
    Ok(())
}

fn write_report(dir: &Path, report: &EvalReport, pairs: bool) -> Result<()> {
    let stem = report.method.name();
    if pairs {
        if let Some(p) = &report.pairs {
            write_with(&dir.join(format!("{stem}.pairs.tsv")), |w| {
                semsim::write_pairs(p, w)
            })?;
        }
    }
    let mut slim = report.clone();
    slim.pairs = None;
    write_json(&dir.join(format!("{stem}.json")), &slim)?;
    let text = semsim::report_text(&slim);
    write_with(&dir.join(format!("{stem}.txt")), |w| {
        w.write_all(text.as_bytes())
    })
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let corpus = read_corpus(ctx, &a.corpus)?;
    let labels = corpus.labels();
    let mut reports = Vec::new();
    if let Some(path) = &a.matrix {
        let matrix = SimilarityMatrix::load_simm(path)?;
        if matrix.n() != corpus.len() {
            return Err(semsim::Error::LengthMismatch {
                labels: corpus.len(),
                n: matrix.n(),
            })
            .with_context(|| format!("{} does not match {}", path.display(), a.corpus.display()));
        }
        let matrix = if matrix.self_excluded() {
            matrix
        } else {
            matrix.exclude_self()
        };
        let mut report = semsim::top1_accuracy(&matrix, &labels)?;
        report.config_echo = ctx.echo.clone();
        reports.push(report);
    } else {
        let methods = a.methods()?;
        let docs = token_lists(&corpus);
        let fit = fit_docs(ctx, &a.model)?;
        let table = load_table(ctx, &a.model, &methods)?;
        let config = EvalConfig {
            methods: methods.clone(),
            pipeline: a.model.pipeline_config(),
            include_pairs: true,
            config_echo: ctx.echo.clone(),
        };
        for method in methods {
            let pipeline = build(ctx, method, &docs, fit.as_deref(), table.as_ref(), &a.model)?;
            let (_, report) = semsim::evaluate_pipeline(&pipeline, &labels, &config)
                .with_context(|| format!("evaluating {method}"))?;
            ctx.log(format!("{method}: {:.2}%", report.accuracy));
            reports.push(report);
        }
    }
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for r in &reports {
        write_report(&a.out_dir, r, a.pairs)?;
    }
    let slim: Vec<EvalReport> = reports
        .iter()
        .map(|r| EvalReport {
            pairs: None,
            ..r.clone()
        })
        .collect();
    let table = semsim::summary_table(&slim);
    write_with(&a.out_dir.join("summary.txt"), |w| {
        w.write_all(table.as_bytes())
    })?;
    write_json(
        &a.out_dir.join("summary.json"),
        &json!({ "reports": slim, "ordering": ordering_note(&slim) }),
    )?;
    print!("{table}");
    Ok(())
}

fn snippet(raw: &str) -> String {
    const MAX: usize = 80;
    let flat: String = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= MAX {
        flat
    } else {
        let cut: String = flat.chars().take(MAX - 3).collect();
        format!("{cut}...")
    }
}

fn query(ctx: &Ctx, a: &QueryArgs) -> Result<()> {
    let corpus = read_corpus(ctx, &a.corpus)?;
    let docs = token_lists(&corpus);
    let fit = fit_docs(ctx, &a.model)?;
    let table = load_table(ctx, &a.model, &[a.method])?;
    let pipeline = build(
        ctx,
        a.method,
        &docs,
        fit.as_deref(),
        table.as_ref(),
        &a.model,
    )?;
    let n = corpus.len();
    let (row, skip, available) = match (a.id, &a.text) {
        (Some(id), _) => {
            if id >= n {
                return Err(semsim::Error::IndexOutOfRange { index: id, n }.into());
            }
            println!(
                "query: document {id} [{}] {}",
                corpus.docs[id].label,
                snippet(&corpus.docs[id].raw)
            );
            (pipeline.similarity_row(id)?, Some(id), n - 1)
        }
        (None, Some(text)) => {
            let pre = Preprocessor::from_config(a.preprocess.config())?;
            let tokens = pre.run(text);
            let tokens_text: Vec<&str> = tokens.iter().map(Token::as_str).collect();
            println!("query: {}", tokens_text.join(" "));
            let v = pipeline.vectorize(&tokens);
            if v.is_zero() {
                eprintln!("warning: query has no known terms; all scores are zero");
            }
            let scores = (0..n)
                .map(|j| pipeline.score(&v, j))
                .collect::<semsim::Result<Vec<_>>>()?;
            (scores, None, n)
        }
        (None, None) => unreachable!("clap requires --id or --text"),
    };
    let k = if a.k > available {
        eprintln!(
            "warning: --k {} exceeds the {available} available documents; showing {available}",
            a.k
        );
        available
    } else {
        a.k
    };
    for (rank, (j, score)) in semsim::rank_row(&row, skip, k).into_iter().enumerate() {
        let d = &corpus.docs[j];
        println!(
            "{}\t{j}\t{}\t{score:.6}\t{}",
            rank + 1,
            d.label,
            snippet(&d.raw)
        );
    }
    Ok(())
}
