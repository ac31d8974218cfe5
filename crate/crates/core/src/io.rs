//! Graph loading, feature synthesis, run configuration and the JSON-lines
//! statistics output.
//!
//! # Stats format
//!
//! [`emit_stats`] appends one JSON object per line. Every object has a
//! `kind` field:
//!
//! - `epoch`: `epoch, mode, p, c, batches_trained, chunks, spgemm_calls,
//!   adjacency_products, sparsity_violations, total_words, output_checksum`
//! - `timing`: `epoch, phase` (`sample`, `fetch` or `propagate`),
//!   `duration_secs`
//! - `comm`: `epoch, process, phase` (`gather_cols`, `row_data`,
//!   `all_reduce`, `all_to_allv`), `sent_messages, sent_words,
//!   received_messages, received_words`
//! - `model`: `epoch, mode`, the model inputs `p, c, k, b, s, d, alpha,
//!   beta`, the predictions `predicted_t_rowdata, predicted_t_allreduce,
//!   predicted_t_prob, predicted_rowdata_words, predicted_allreduce_words`
//!   and the measurements `adjacency_products,
//!   measured_rowdata_words_per_product, measured_allreduce_words_per_product`
//!
//! Wall-clock values appear only in fields ending in `_secs`; everything
//! else is a deterministic function of the configuration.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{predict_costs, CostModelParams, Phase, ProcessGrid};
use crate::error::{Error, Result};
use crate::pipeline::{run_epoch, EpochReport, FeaturePartition, Mode, PipelineConfig};
use crate::sampler::{SamplerConfig, SamplerKind};
use crate::sparse::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    MatrixMarket,
    EdgeList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Keep each edge as `src -> dst`.
    AsIs,
    /// Add the reverse of every edge.
    Symmetrize,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: &Path, format: Format, direction: Direction) -> Result<Graph> {
    let (n, edges, symmetric) = match format {
        Format::EdgeList => read_edge_list(path)?,
        Format::MatrixMarket => read_matrix_market(path)?,
    };
    Graph::from_edges(n, &edges, symmetric || direction == Direction::Symmetrize)
}

/// Vertex count, directed edges, and whether the file stores one triangle.
type EdgeSource = (usize, Vec<(usize, usize)>, bool);

fn parse_id(path: &Path, line: usize, tok: Option<&str>) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(path, line, "expected two vertex ids"))?;
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid vertex id {tok:?}")))
}

/// Whitespace-separated `src dst` pairs, 0-based. Lines starting with `#`
/// or `%` are comments, except an optional `# n=<count>` header that fixes
/// the vertex count.
fn read_edge_list(path: &Path) -> Result<EdgeSource> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n=") {
                let n = v
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, lineno, format!("invalid vertex count {v:?}")))?;
                declared = Some(n);
            }
            continue;
        }
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let u = parse_id(path, lineno, toks.next())?;
        let v = parse_id(path, lineno, toks.next())?;
        if let Some(n) = declared {
            if u.max(v) >= n {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("vertex id {} exceeds declared n={n}", u.max(v)),
                ));
            }
        }
        edges.push((u, v));
    }
    let n = declared.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    Ok((n, edges, false))
}

/// MatrixMarket coordinate files with `pattern`, `real` or `integer`
/// entries and `general` or `symmetric` storage. Entry values are ignored.
fn read_matrix_market(path: &Path) -> Result<EdgeSource> {
    let mut lines = open(path)?.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let h: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(parse_err(
            path,
            1,
            "expected a MatrixMarket coordinate header",
        ));
    }
    if !matches!(h[3].as_str(), "pattern" | "real" | "integer") {
        return Err(parse_err(path, 1, format!("unsupported field {:?}", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                path,
                1,
                format!("unsupported symmetry {other:?}"),
            ))
        }
    };

    let mut size = None;
    let mut edges = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        match size {
            None => {
                let rows = parse_id(path, lineno, toks.next())?;
                let cols = parse_id(path, lineno, toks.next())?;
                let nnz = parse_id(path, lineno, toks.next())?;
                if rows != cols {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("adjacency must be square, got {rows}x{cols}"),
                    ));
                }
                edges.reserve(nnz);
                size = Some((rows, nnz));
            }
            Some((n, _)) => {
                let u = parse_id(path, lineno, toks.next())?;
                let v = parse_id(path, lineno, toks.next())?;
                if u == 0 || v == 0 || u > n || v > n {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("index ({u}, {v}) outside 1..={n}"),
                    ));
                }
                edges.push((u - 1, v - 1));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    if edges.len() != nnz {
        return Err(parse_err(
            path,
            1,
            format!("size line declares {nnz} entries, found {}", edges.len()),
        ));
    }
    Ok((n, edges, symmetric))
}

/// Writes every stored edge as a `coordinate pattern general` file.
pub fn write_matrix_market(graph: &Graph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate pattern general")?;
        writeln!(w, "{} {} {}", graph.n(), graph.n(), graph.num_edges())?;
        for (u, v) in graph.edges() {
            writeln!(w, "{} {}", u + 1, v + 1)?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

/// Deterministic `n x f` features, uniform in `[-1, 1)`.
pub fn synthesize_features(n: usize, f: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 || f == 0 {
        return Err(Error::InvalidConfig(format!(
            "feature matrix must be non-empty, got {n}x{f}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Array2::from_shape_simple_fn((n, f), || {
        rng.random::<f64>() * 2.0 - 1.0
    }))
}

/// Training vertices in batch order: every vertex, or the ids listed in
/// `subset` (one per line, `#` comments), shuffled by `seed`.
pub fn training_vertices(n: usize, seed: u64, subset: Option<&Path>) -> Result<Vec<usize>> {
    let mut ids: Vec<usize> = match subset {
        None => (0..n).collect(),
        Some(path) => {
            let mut ids = Vec::new();
            for (i, line) in open(path)?.lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                let v: usize = t
                    .parse()
                    .map_err(|_| parse_err(path, i + 1, format!("invalid vertex id {t:?}")))?;
                if v >= n {
                    return Err(parse_err(
                        path,
                        i + 1,
                        format!("vertex id {v} exceeds n={n}"),
                    ));
                }
                ids.push(v);
            }
            ids.sort_unstable();
            ids.dedup();
            ids
        }
    };
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(ids)
}

/// Everything needed for a command-line run.
#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct RunConfig {
    /// Graph file.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "edge-list")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "as-is")]
    pub direction: Direction,
    #[arg(long, value_enum, default_value = "graphsage")]
    pub sampler: SamplerKind,
    /// Number of layers.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// GraphSAGE fanouts, nearest layer first; defaults to `samples` on
    /// every layer.
    #[arg(long, value_delimiter = ',')]
    pub fanouts: Vec<usize>,
    /// Samples per row (LADIES: per batch) when no fanouts are given.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Minibatches sampled together.
    #[arg(long, default_value_t = 4)]
    pub bulk: usize,
    #[arg(short = 'p', long, default_value_t = 1)]
    pub processes: usize,
    /// Replication factor.
    #[arg(short = 'c', long, default_value_t = 1)]
    pub replication: usize,
    #[arg(long, value_enum, default_value = "partitioned")]
    pub mode: Mode,
    /// Width of the synthesized feature matrix.
    #[arg(long, default_value_t = 16)]
    pub features: usize,
    #[arg(long, default_value_t = 1)]
    pub epochs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append JSON-lines statistics here.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// File of training vertex ids; all vertices when absent.
    #[arg(long)]
    pub train_subset: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

impl RunConfig {
    pub fn new(graph: impl Into<PathBuf>) -> Self {
        Self {
            graph: graph.into(),
            format: Format::EdgeList,
            direction: Direction::AsIs,
            sampler: SamplerKind::GraphSage,
            layers: 2,
            batch_size: 64,
            fanouts: Vec::new(),
            samples: 10,
            bulk: 4,
            processes: 1,
            replication: 1,
            mode: Mode::Partitioned,
            features: 16,
            epochs: 1,
            seed: 0,
            stats: None,
            train_subset: None,
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.sampler_config()?.validate()?;
        if self.features == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "feature width and epochs must be positive".into(),
            ));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidConfig(
                "alpha and beta must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<ProcessGrid> {
        ProcessGrid::new(self.processes, self.replication)
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        if self.layers == 0 {
            return Err(Error::InvalidConfig(
                "at least one layer is required".into(),
            ));
        }
        let fanouts = match self.sampler {
            SamplerKind::GraphSage if !self.fanouts.is_empty() => {
                if self.fanouts.len() != self.layers {
                    return Err(Error::InvalidConfig(format!(
                        "{} fanouts for {} layers",
                        self.fanouts.len(),
                        self.layers
                    )));
                }
                self.fanouts.clone()
            }
            SamplerKind::Ladies if !self.fanouts.is_empty() => {
                return Err(Error::InvalidConfig(
                    "LADIES takes --samples, not --fanouts".into(),
                ));
            }
            _ => vec![self.samples; self.layers],
        };
        Ok(SamplerConfig {
            kind: self.sampler,
            fanouts,
            batch_size: self.batch_size,
            bulk_count: self.bulk,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatsRecord {
    Epoch {
        epoch: u64,
        mode: Mode,
        p: usize,
        c: usize,
        batches_trained: usize,
        chunks: usize,
        spgemm_calls: usize,
        adjacency_products: usize,
        sparsity_violations: usize,
        total_words: u64,
        output_checksum: f64,
    },
    Timing {
        epoch: u64,
        phase: String,
        duration_secs: f64,
    },
    Comm {
        epoch: u64,
        process: usize,
        phase: Phase,
        sent_messages: u64,
        sent_words: u64,
        received_messages: u64,
        received_words: u64,
    },
    Model {
        epoch: u64,
        mode: Mode,
        p: f64,
        c: f64,
        k: f64,
        b: f64,
        s: f64,
        d: f64,
        alpha: f64,
        beta: f64,
        predicted_t_rowdata: f64,
        predicted_t_allreduce: f64,
        predicted_t_prob: f64,
        predicted_rowdata_words: f64,
        predicted_allreduce_words: f64,
        adjacency_products: usize,
        measured_rowdata_words_per_product: f64,
        measured_allreduce_words_per_product: f64,
    },
}

/// The records [`emit_stats`] writes for one epoch.
pub fn stats_records(report: &EpochReport, model: &CostModelParams) -> Result<Vec<StatsRecord>> {
    let epoch = report.epoch;
    let ledger = &report.ledger;
    let p = ledger.p();
    let mut out = vec![StatsRecord::Epoch {
        epoch,
        mode: report.mode,
        p: report.grid.p(),
        c: report.grid.c(),
        batches_trained: report.batches_trained,
        chunks: report.chunks,
        spgemm_calls: report.spgemm_calls,
        adjacency_products: report.adjacency_products,
        sparsity_violations: report.sparsity_violations,
        total_words: ledger.total_words(),
        output_checksum: report.output_checksum,
    }];
    for (phase, secs) in [
        ("sample", report.sample_secs),
        ("fetch", report.fetch_secs),
        ("propagate", report.propagate_secs),
    ] {
        out.push(StatsRecord::Timing {
            epoch,
            phase: phase.into(),
            duration_secs: secs,
        });
    }
    for process in 0..p {
        for phase in Phase::ALL {
            let s = ledger.sent(process, phase);
            let r = ledger.received(process, phase);
            out.push(StatsRecord::Comm {
                epoch,
                process,
                phase,
                sent_messages: s.messages,
                sent_words: s.words,
                received_messages: r.messages,
                received_words: r.words,
            });
        }
    }

    let pred = predict_costs(model)?;
    let products = report.adjacency_products.max(1) as f64;
    let rowdata = report.row_data_words.iter().sum::<u64>() as f64 / p as f64 / products;
    let allreduce = (0..p)
        .map(|r| ledger.received(r, Phase::AllReduce).words)
        .sum::<u64>() as f64
        / p as f64
        / products;
    let kbd = model.k * model.b * model.d;
    out.push(StatsRecord::Model {
        epoch,
        mode: report.mode,
        p: model.p,
        c: model.c,
        k: model.k,
        b: model.b,
        s: model.s,
        d: model.d,
        alpha: model.alpha,
        beta: model.beta,
        predicted_t_rowdata: pred.t_rowdata,
        predicted_t_allreduce: pred.t_allreduce,
        predicted_t_prob: pred.t_prob,
        predicted_rowdata_words: kbd / model.c,
        predicted_allreduce_words: model.c * kbd / model.p,
        adjacency_products: report.adjacency_products,
        measured_rowdata_words_per_product: rowdata,
        measured_allreduce_words_per_product: allreduce,
    });
    Ok(out)
}

/// Appends the epoch's records to `path` as JSON lines.
pub fn emit_stats(report: &EpochReport, model: &CostModelParams, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for rec in stats_records(report, model)? {
        serde_json::to_writer(&mut buf, &rec).expect("records serialize");
        buf.push(b'\n');
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Model inputs for a run on `graph`; `d` is the average degree.
pub fn cost_params(cfg: &RunConfig, graph: &Graph) -> Result<CostModelParams> {
    let sampler = cfg.sampler_config()?;
    Ok(CostModelParams {
        p: cfg.processes as f64,
        c: cfg.replication as f64,
        k: cfg.bulk as f64,
        b: cfg.batch_size as f64,
        s: sampler.fanouts[0] as f64,
        d: (graph.num_edges() as f64 / graph.n().max(1) as f64).max(f64::MIN_POSITIVE),
        alpha: cfg.alpha,
        beta: cfg.beta,
    })
}

/// Loads the graph, synthesizes features and runs every epoch, appending
/// statistics when a stats path is configured.
pub fn run(cfg: &RunConfig) -> Result<Vec<EpochReport>> {
    cfg.validate()?;
    let graph = load_graph(&cfg.graph, cfg.format, cfg.direction)?;
    let grid = cfg.grid()?;
    let h = synthesize_features(graph.n(), cfg.features, cfg.seed)?;
    let features = FeaturePartition::new(&h, grid)?;
    let train = training_vertices(graph.n(), cfg.seed, cfg.train_subset.as_deref())?;
    let pipeline = PipelineConfig {
        sampler: cfg.sampler_config()?,
        grid,
        mode: cfg.mode,
        alpha: cfg.alpha,
        beta: cfg.beta,
    };
    let model = cost_params(cfg, &graph)?;
    let mut reports = Vec::with_capacity(cfg.epochs as usize);
    for epoch in 0..cfg.epochs {
        let report = run_epoch(&graph, &features, &pipeline, &train, epoch)?;
        if let Some(path) = &cfg.stats {
            emit_stats(&report, &model, path)?;
        }
        reports.push(report);
    }
    Ok(reports)
}
