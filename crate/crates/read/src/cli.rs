//! The `read` command line tool.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use read_core::docsim::{docsim, nearest_neighbor, similarity_matrix, DocSimConfig, NearestResult};
use read_core::generate::{generate, GenerationConfig, PostProcess};
use read_core::hierarchy::{extract_hierarchy, LayoutTree};
use read_core::metrics::{alignment_index, corpus_stats, overlap_index};
use read_core::model::ModelConfig;
use read_core::spectral::spectral_cluster;
use read_core::train::{train_with, TrainConfig};
use read_core::{DocumentLayout, LabelVocabulary, ModelParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checkpoint::{load_model, save_model, Checkpoint};
use crate::error::{Error, Result};
use crate::layout_io::{
    load_corpus, load_layout, parse_json, read_text, save_layout, vocabulary_from_arg, write_text,
};
use crate::svg::write_svg;

#[derive(Debug, Parser)]
#[command(name = "read", version, about = "Learn, sample and compare document layouts")]
pub struct Cli {
    /// Label vocabulary: `icdar`, `forms`, or a comma-separated list of names.
    #[arg(long, global = true, default_value = "icdar")]
    pub vocab: String,

    /// Serial execution with fixed reduction order. Always on; the flag is
    /// accepted for scripts that pass it explicitly.
    #[arg(
        long,
        global = true,
        default_value_t = true,
        num_args = 0..=1,
        default_missing_value = "true",
        action = clap::ArgAction::Set
    )]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the hierarchy of every layout in a directory, one JSON line each.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a directory of layouts.
    Train(TrainArgs),
    /// Sample layouts from a trained model.
    Generate(GenerateArgs),
    /// Similarity score between two layouts.
    Docsim {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Print the full report with matched pairs as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Rank corpus layouts by similarity to each query layout.
    Nearest {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Overlap and alignment indices plus box-count statistics.
    Metrics {
        #[arg(long)]
        input: PathBuf,
    },
    /// Render a layout as SVG.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering of a corpus under the similarity score.
    Cluster {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the pairwise similarity matrix as CSV.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// JSON training configuration; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the configuration file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV loss log; defaults to the model path with a `.csv` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_postprocess: bool,
    /// Also write an SVG next to every sample.
    #[arg(long)]
    pub svg: bool,
    #[arg(long, default_value = "sample")]
    pub prefix: String,
    #[arg(long, default_value_t = read_core::model::DEFAULT_MAX_NODES)]
    pub max_nodes: usize,
}

/// Training configuration file: every [`TrainConfig`] field plus an optional
/// label list that takes precedence over `--vocab`.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct TrainFile {
    #[serde(flatten)]
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let vocab = || vocabulary_from_arg(&cli.vocab);
    match &cli.command {
        Command::Extract { input, out } => extract(input, out, &vocab()?),
        Command::Train(args) => train_cmd(args, &vocab()?),
        Command::Generate(args) => generate_cmd(args),
        Command::Docsim { a, b, json } => {
            let vocab = vocab()?;
            let (da, db) = (load_layout(a, &vocab)?, load_layout(b, &vocab)?);
            let report = docsim(&da, &db, &DocSimConfig::default());
            if *json {
                let matches: Vec<Value> = report
                    .matches
                    .iter()
                    .map(|m| json!({"i": m.i, "j": m.j, "w": m.w}))
                    .collect();
                print_json(&json!({"score": report.score, "matches": matches}))
            } else {
                println!("{}", report.score);
                Ok(())
            }
        }
        Command::Nearest { query, corpus, top } => nearest(query, corpus, *top, &vocab()?),
        Command::Metrics { input } => metrics(input, &vocab()?),
        Command::Render { input, out } => {
            let vocab = vocab()?;
            write_svg(&load_layout(input, &vocab)?, &vocab, out)
        }
        Command::Cluster {
            corpus,
            k,
            seed,
            out,
            matrix,
        } => cluster(corpus, *k, *seed, out, matrix.as_deref(), &vocab()?),
    }
}

fn print_json(v: &Value) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Invalid(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn rect_json(r: &read_core::Rect) -> Value {
    json!([r.x, r.y, r.w, r.h])
}

/// Nested node records: leaves carry label and box, internal nodes their
/// relation, offset and bounding box.
pub fn tree_json(tree: &LayoutTree, vocab: &LabelVocabulary) -> Value {
    match tree {
        LayoutTree::Leaf(b) => json!({
            "label": vocab.name(b.label).unwrap_or("unknown"),
            "box": rect_json(&b.rect),
        }),
        LayoutTree::Internal(node) => json!({
            "relation": node.relation.name(),
            "rel_pos": [node.rel_pos.dx, node.rel_pos.dy],
            "bbox": rect_json(&node.bbox),
            "left": tree_json(&node.left, vocab),
            "right": tree_json(&node.right, vocab),
        }),
    }
}

fn extract(input: &Path, out: &Path, vocab: &LabelVocabulary) -> Result<()> {
    let corpus = load_corpus(input, vocab)?;
    let mut text = String::new();
    for (path, doc) in &corpus {
        let tree = extract_hierarchy(doc).map_err(|source| Error::Data {
            path: path.clone(),
            source,
        })?;
        let line = json!({"file": file_name(path), "source_id": doc.source_id, "tree": tree_json(&tree, vocab)});
        text.push_str(&line.to_string());
        text.push('\n');
    }
    write_text(out, &text)
}

fn train_cmd(args: &TrainArgs, vocab: &LabelVocabulary) -> Result<()> {
    let mut file = match &args.config {
        Some(p) => parse_json::<TrainFile>(&read_text(p)?, p)?,
        None => TrainFile::default(),
    };
    if let Some(seed) = args.seed {
        file.config.seed = seed;
    }
    file.config.validate()?;
    let vocab = match &file.labels {
        Some(names) => LabelVocabulary::new(names)?,
        None => vocab.clone(),
    };
    let corpus: Vec<DocumentLayout> = load_corpus(&args.data, &vocab)?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    if corpus.is_empty() {
        return Err(read_core::Error::EmptyCorpus.into());
    }

    let mut log = String::from("epoch,leaf,pos,ce,kl,total,aux\n");
    let outcome = train_with(&corpus, vocab.len(), &file.config, |epoch, l| {
        let _ = writeln!(
            log,
            "{epoch},{},{},{},{},{},{}",
            l.leaf, l.pos, l.ce, l.kl, l.total, l.aux
        );
    })?;
    let log_path = args.log.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    write_text(&log_path, &log)?;
    save_model(
        &Checkpoint {
            vocab,
            params: outcome.params,
        },
        &args.out,
    )
}

fn generate_cmd(args: &GenerateArgs) -> Result<()> {
    let Checkpoint { vocab, params } = load_model(&args.model)?;
    let config = GenerationConfig {
        count: args.count,
        seed: args.seed,
        max_nodes: args.max_nodes,
        postprocess: if args.no_postprocess {
            PostProcess::NONE
        } else {
            PostProcess::default()
        },
        ..GenerationConfig::default()
    };
    config.validate()?;
    check_params(&params)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let samples = generate(&params, &config)?;
    let mut entries = Vec::with_capacity(samples.len());
    for (i, mut s) in samples.into_iter().enumerate() {
        let name = format!("{}_{i}", args.prefix);
        s.layout.source_id = name.clone();
        save_layout(&s.layout, &vocab, args.out.join(format!("{name}.json")))?;
        if args.svg {
            write_svg(&s.layout, &vocab, args.out.join(format!("{name}.svg")))?;
        }
        entries.push(json!({
            "file": format!("{name}.json"),
            "index": i,
            "stream": i,
            "boxes": s.layout.len(),
            "truncated": s.truncated,
        }));
    }
    let manifest = json!({
        "seed": args.seed,
        "count": args.count,
        "max_nodes": args.max_nodes,
        "postprocess": !args.no_postprocess,
        "samples": entries,
    });
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    write_text(&args.out.join("manifest.json"), &text)
}

fn check_params(params: &ModelParams) -> Result<()> {
    let ModelConfig {
        code_size, hidden, ..
    } = params.config;
    if code_size == 0 || hidden == 0 {
        return Err(Error::Invalid("checkpoint has empty layers".into()));
    }
    if !params.is_finite() {
        return Err(read_core::Error::NumericalFailure {
            node: 0,
            what: "checkpoint parameters",
        }
        .into());
    }
    Ok(())
}

fn nearest(query: &Path, corpus: &Path, top: usize, vocab: &LabelVocabulary) -> Result<()> {
    let queries = load_corpus(query, vocab)?;
    let (paths, docs): (Vec<PathBuf>, Vec<DocumentLayout>) = load_corpus(corpus, vocab)?.into_iter().unzip();
    let config = DocSimConfig::default();
    let mut out = Vec::with_capacity(queries.len());
    for (qp, q) in &queries {
        let entry = match nearest_neighbor(q, &docs, &config)? {
            NearestResult::Ranked(ranked) => {
                let neighbors: Vec<Value> = ranked
                    .iter()
                    .take(top)
                    .map(|&(i, score)| json!({"file": file_name(&paths[i]), "index": i, "score": score}))
                    .collect();
                json!({"query": file_name(qp), "filtered_all": false, "neighbors": neighbors})
            }
            NearestResult::FilteredAll => {
                json!({"query": file_name(qp), "filtered_all": true, "neighbors": []})
            }
        };
        out.push(entry);
    }
    print_json(&Value::Array(out))
}

fn metrics(input: &Path, vocab: &LabelVocabulary) -> Result<()> {
    let docs: Vec<DocumentLayout> = load_corpus(input, vocab)?.into_iter().map(|(_, d)| d).collect();
    let stats = corpus_stats(&docs, vocab.len())?;
    let n = docs.len() as f64;
    let overlap = docs.iter().map(overlap_index).sum::<f64>() / n;
    let alignment = docs.iter().map(alignment_index).sum::<f64>() / n;
    let per_category: serde_json::Map<String, Value> = vocab
        .names()
        .iter()
        .zip(&stats.per_category)
        .map(|(name, c)| (name.clone(), json!(c)))
        .collect();
    print_json(&json!({
        "overlap_mean": overlap,
        "alignment_mean": alignment,
        "stats": {
            "documents": docs.len(),
            "box_counts": stats.box_counts,
            "mean": stats.mean,
            "min": stats.min,
            "max": stats.max,
            "per_category": per_category,
        },
    }))
}

fn cluster(
    corpus: &Path,
    k: usize,
    seed: u64,
    out: &Path,
    matrix: Option<&Path>,
    vocab: &LabelVocabulary,
) -> Result<()> {
    let (paths, docs): (Vec<PathBuf>, Vec<DocumentLayout>) = load_corpus(corpus, vocab)?.into_iter().unzip();
    if k == 0 || k > docs.len() {
        return Err(Error::Invalid(format!(
            "k = {k} must be between 1 and the corpus size {}",
            docs.len()
        )));
    }
    let sim = similarity_matrix(&docs, &DocSimConfig::default())?;
    let labels = spectral_cluster(&sim, k, seed)?;
    if let Some(mpath) = matrix {
        let mut csv = String::new();
        for row in &sim {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        write_text(mpath, &csv)?;
    }
    let assignments: Vec<Value> = paths
        .iter()
        .zip(&labels)
        .map(|(p, c)| json!({"file": file_name(p), "cluster": c}))
        .collect();
    let mut text = serde_json::to_string_pretty(&json!({"k": k, "seed": seed, "assignments": assignments}))
        .map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    write_text(out, &text)
}
