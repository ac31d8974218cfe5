use std::fs;
use std::path::Path;

use bulksample::io::{
    load_graph, run, stats_records, write_matrix_market, Direction, Format, RunConfig, StatsRecord,
};
use bulksample::pipeline::Mode;
use bulksample::sampler::SamplerKind;
use bulksample::synth::{figure1_graph, random_graph};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const FIGURE1: &str = "# n=6\n0 1\n1 4\n2 5\n3 5\n4 5\n0 2\n3 4\n";

#[test]
fn figure1_edge_list_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.txt");
    fs::write(&path, FIGURE1).unwrap();
    let g = load_graph(&path, Format::EdgeList, Direction::Symmetrize).unwrap();
    assert_eq!(g, figure1_graph());
    let mut e = [0; 6];
    for v in [1, 5] {
        for &u in g.neighbors(v) {
            e[u] += 1;
        }
    }
    assert_eq!(e, [1, 0, 1, 1, 2, 0]);
}

#[test]
fn ingestion_ignores_line_order_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_graph(60, 5, 2).unwrap();
    let mut lines: Vec<String> = g.edges().map(|(u, v)| format!("{u} {v}")).collect();
    let reference = {
        let p = dir.path().join("ref.txt");
        fs::write(&p, format!("# n=60\n{}\n", lines.join("\n"))).unwrap();
        load_graph(&p, Format::EdgeList, Direction::AsIs).unwrap()
    };
    assert_eq!(reference, g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..5 {
        lines.shuffle(&mut rng);
        let mut body = lines.clone();
        body.extend(lines.iter().take(i * 3).cloned());
        let p = dir.path().join(format!("perm{i}.txt"));
        fs::write(&p, format!("# n=60\n{}\n", body.join("\n"))).unwrap();
        assert_eq!(
            load_graph(&p, Format::EdgeList, Direction::AsIs).unwrap(),
            reference
        );
    }
}

#[test]
fn matrix_market_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for g in [figure1_graph(), random_graph(100, 6, 9).unwrap()] {
        let p = dir.path().join("g.mtx");
        write_matrix_market(&g, &p).unwrap();
        assert_eq!(
            load_graph(&p, Format::MatrixMarket, Direction::AsIs).unwrap(),
            g
        );
    }
}

fn config(dir: &Path, mode: Mode, epochs: u64) -> RunConfig {
    let graph = dir.join("g.mtx");
    write_matrix_market(&random_graph(400, 8, 1).unwrap(), &graph).unwrap();
    let mut cfg = RunConfig::new(graph);
    cfg.format = Format::MatrixMarket;
    cfg.batch_size = 16;
    cfg.fanouts = vec![4, 3];
    cfg.bulk = 5;
    cfg.processes = 4;
    cfg.replication = 2;
    cfg.mode = mode;
    cfg.features = 8;
    cfg.epochs = epochs;
    cfg.seed = 11;
    cfg.stats = Some(dir.join("stats.jsonl"));
    cfg
}

fn read_lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn strip_secs(v: &mut Value) {
    if let Value::Object(map) = v {
        map.retain(|k, _| !k.ends_with("_secs"));
    }
}

#[test]
fn stats_schema_and_totals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), Mode::Partitioned, 2);
    let reports = run(&cfg).unwrap();
    let records = read_lines(cfg.stats.as_ref().unwrap());

    let kinds = |k: &'static str| records.iter().filter(move |r| r["kind"] == k);
    assert_eq!(kinds("epoch").count(), 2);
    assert_eq!(kinds("timing").count(), 6);
    assert_eq!(kinds("comm").count(), 2 * 4 * 4);
    assert_eq!(kinds("model").count(), 2);

    for field in [
        "predicted_t_rowdata",
        "predicted_t_allreduce",
        "predicted_t_prob",
        "predicted_rowdata_words",
        "predicted_allreduce_words",
        "measured_rowdata_words_per_product",
        "measured_allreduce_words_per_product",
    ] {
        for m in kinds("model") {
            assert!(m[field].is_number(), "model record lacks {field}");
        }
    }
    for t in kinds("timing") {
        assert!(t["duration_secs"].is_number());
    }

    for report in &reports {
        let e = report.epoch;
        let words: u64 = kinds("comm")
            .filter(|r| r["epoch"] == e)
            .map(|r| r["sent_words"].as_u64().unwrap())
            .sum();
        assert_eq!(words, report.ledger.total_words());
        let epoch = kinds("epoch").find(|r| r["epoch"] == e).unwrap();
        assert_eq!(epoch["total_words"].as_u64().unwrap(), words);
        assert_eq!(epoch["batches_trained"].as_u64().unwrap(), 25);
    }

    // Records parse back into the typed schema.
    for line in fs::read_to_string(cfg.stats.as_ref().unwrap())
        .unwrap()
        .lines()
    {
        serde_json::from_str::<StatsRecord>(line).unwrap();
    }
    let model = bulksample::io::cost_params(&cfg, &figure1_graph()).unwrap();
    assert_eq!(
        stats_records(&reports[0], &model).unwrap().len(),
        1 + 3 + 16 + 1
    );
}

#[test]
fn stats_are_deterministic_apart_from_durations() {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Mode::Replicated, 1);
        run(&cfg).unwrap();
        let mut recs = read_lines(cfg.stats.as_ref().unwrap());
        recs.iter_mut().for_each(strip_secs);
        outputs.push(
            recs.iter()
                .map(|r| serde_json::to_string(r).unwrap())
                .collect::<Vec<_>>()
                .join("\n"),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn stats_append() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), Mode::Partitioned, 1);
    run(&cfg).unwrap();
    let first = read_lines(cfg.stats.as_ref().unwrap()).len();
    run(&cfg).unwrap();
    assert_eq!(read_lines(cfg.stats.as_ref().unwrap()).len(), 2 * first);
}

#[test]
fn modes_train_the_same_batches() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), Mode::Replicated, 1);
    cfg.stats = None;
    let rep = run(&cfg).unwrap();
    cfg.mode = Mode::Partitioned;
    let part = run(&cfg).unwrap();
    assert_eq!(rep[0].batch_fingerprints, part[0].batch_fingerprints);
    assert_eq!(rep[0].output_checksum, part[0].output_checksum);

    cfg.sampler = SamplerKind::Ladies;
    cfg.fanouts.clear();
    cfg.samples = 12;
    assert_eq!(run(&cfg).unwrap()[0].batches_trained, 25);
}
