use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use forcelab::affinity::graph_affinities;
use forcelab::forces::{decompose_forces, detect_sinks, SinkParams};
use forcelab::io::{read_edge_list, read_embedding_csv};
use serde_json::Value;

fn forcelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forcelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = forcelab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_graph(dir: &Path) -> std::path::PathBuf {
    let g = dir.join("g.edges");
    ok(&["gen-graph", "--model", "k-regular", "--n", "60", "--k", "6", "--seed", "3", "--out", s(&g)]);
    g
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_graph_writes_header_and_edges_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |p: &Path| {
        ok(&["gen-graph", "--model", "k-regular", "--n", "2000", "--k", "200", "--seed", "7", "--out", s(p)]);
    };
    args(&a);
    args(&b);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 200_001);
    assert_eq!(text.lines().next(), Some("2000 200 7"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_probability_is_a_usage_error() {
    let out = forcelab(&["gen-graph", "--model", "er", "--n", "100", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--p"));

    let out = forcelab(&["gen-graph", "--model", "k-regular", "--n", "5", "--k", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--k"));
}

#[test]
fn embed_echoes_default_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let (e, t) = (dir.path().join("e.csv"), dir.path().join("t.json"));
    ok(&["embed", "--graph", s(&g), "--out", s(&e), "--trajectory", s(&t)]);
    let v = json(&t);
    let cfg = &v["config"];
    assert_eq!(cfg["exaggeration_factor"], 12.0);
    assert_eq!(cfg["exaggeration_iterations"], 250);
    assert_eq!(cfg["total_iterations"], 750);
    assert_eq!(cfg["init"]["kind"], "pca");
    assert_eq!(v["graph"]["seed"], 3);
    let snaps = v["snapshots"].as_array().unwrap();
    assert_eq!(snaps.last().unwrap()["iteration"], 750);
    assert_eq!(read_embedding_csv(fs::File::open(&e).unwrap()).unwrap().n(), 60);
}

#[test]
fn random_init_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let run = |name: &str| {
        let p = dir.path().join(name);
        ok(&["embed", "--graph", s(&g), "--init", "random", "--seed", "5", "--iterations", "200", "--exaggeration-iters", "50", "--out", s(&p)]);
        fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn points_need_perplexity() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let body: String = (0..30).map(|i| format!("{},{}\n", i as f64, (i * i % 7) as f64)).collect();
    fs::write(&pts, format!("x,y\n{body}")).unwrap();
    let out = forcelab(&["embed", "--points", s(&pts)]);
    assert_eq!(out.status.code(), Some(2));
    ok(&["embed", "--points", s(&pts), "--perplexity", "5", "--iterations", "100", "--exaggeration-iters", "50"]);
}

#[test]
fn forces_outputs_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let e = dir.path().join("e.csv");
    ok(&["embed", "--graph", s(&g), "--out", s(&e)]);
    let (f, svg) = (dir.path().join("f.csv"), dir.path().join("f.svg"));
    ok(&["forces", "--embedding", s(&e), "--graph", s(&g), "--color", "sink", "--arrows", "--out", s(&f), "--svg", s(&svg)]);
    assert_eq!(forcelab::svg::count_points(&fs::read_to_string(&svg).unwrap()), 60);

    let emb = read_embedding_csv(fs::File::open(&e).unwrap()).unwrap();
    let graph = read_edge_list(std::io::BufReader::new(fs::File::open(&g).unwrap())).unwrap();
    let field = decompose_forces(&graph_affinities(&graph, true).unwrap(), &emb).unwrap();
    let sinks = detect_sinks(&field, &emb, &SinkParams::default()).unwrap();
    let mut rdr = csv::Reader::from_path(&f).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "sink_label").unwrap();
    let labels: Vec<Option<usize>> = rdr
        .records()
        .map(|r| r.unwrap()[col].parse().ok())
        .collect();
    assert_eq!(labels, sinks.labels);
}

#[test]
fn direction_coloring_uses_fixed_wheel() {
    let dir = tempfile::tempdir().unwrap();
    let (e, p, svg) = (dir.path().join("e.csv"), dir.path().join("p.csv"), dir.path().join("d.svg"));
    fs::write(&e, "index,x,y\n0,0,0\n1,1,0\n").unwrap();
    fs::write(&p, "i,j,p\n0,1,0.5\n1,0,0.5\n").unwrap();
    ok(&["forces", "--embedding", s(&e), "--affinity", s(&p), "--color", "direction", "--sink-neighbors", "1", "--svg", s(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    let fills: Vec<&str> = text.lines().filter(|l| l.starts_with("<circle")).map(|l| &l[l.find("fill=").unwrap()..]).collect();
    // point 0 is pulled along +x, point 1 along −x
    assert_eq!(fills, ["fill=\"#ff0000\"/>", "fill=\"#00ffff\"/>"]);
}

#[test]
fn mismatched_inputs_fail_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let e = dir.path().join("e.csv");
    fs::write(&e, "index,x,y\n0,0,0\n1,1,0\n").unwrap();
    let out = forcelab(&["forces", "--embedding", s(&e), "--graph", s(&g)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_rows_manifest_and_honours_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.conf");
    fs::write(&cfg, "# small sweep\nn = 40,60\np = 0.1,0.2\ntrials = 1\niterations = 150\nexaggeration_iters = 50\nbase_seed = 9\n").unwrap();
    let out_dir = dir.path().join("out");
    ok(&["sweep", "--config", s(&cfg), "--trials", "2", "--out-dir", s(&out_dir)]);

    let mut rdr = csv::Reader::from_path(out_dir.join("stats.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        "n,p,k,trial,seed,actual,expectation,variance,sigma,mean_radius,radial_cv,annularity".split(',').collect::<Vec<_>>()
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        assert!(r[8].parse::<f64>().unwrap().is_finite());
    }
    // n=60, p=0.1 → k=6; n=40, p=0.1 → k=4
    assert!(rows.iter().any(|r| &r[0] == "60" && &r[2] == "6"));

    let m = json(&out_dir.join("manifest.json"));
    assert_eq!(m["config"]["base_seed"], 9);
    assert_eq!(m["config"]["trials"], 2);
    assert_eq!(m["failures"], 0);
    assert_eq!(m["cells"].as_array().unwrap().len(), 8);
    assert_eq!(m["cells"][0]["optimizer"]["total_iterations"], 150);
    assert_eq!(fs::read_dir(out_dir.join("trials")).unwrap().count(), 8);

    let again = dir.path().join("again");
    ok(&["sweep", "--config", s(&cfg), "--trials", "2", "--out-dir", s(&again)]);
    assert_eq!(fs::read(out_dir.join("stats.csv")).unwrap(), fs::read(again.join("stats.csv")).unwrap());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "colour = red\n").unwrap();
    let out = forcelab(&["meanfield", "--c", "-1", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn meanfield_reports_closed_form_and_checks() {
    let v: Value = serde_json::from_slice(&ok(&["meanfield", "--c", "-1"]).stdout).unwrap();
    assert_eq!(v["closed_form"]["b_star"], 0.375);
    assert_eq!(v["scaling"]["lambdas"], serde_json::json!([0.5, 2.0]));
    assert_eq!(v["scaling"]["pass"], true);
    assert_eq!(v["pass"], true);

    let v: Value = serde_json::from_slice(&ok(&["meanfield", "--c", "1"]).stdout).unwrap();
    assert_eq!(v["closed_form"]["radius"], 0.0);
    assert!(v["numeric"]["mass_near_closed_form"].as_f64().unwrap() >= 0.99);
    assert_eq!(v["numeric"]["radii"], serde_json::json!([0.0]));

    let v: Value = serde_json::from_slice(&ok(&["meanfield", "--sigma", "-2", "--delta", "0.01", "--p", "0.04"]).stdout).unwrap();
    assert!((v["c"].as_f64().unwrap() + 0.1).abs() < 1e-12);
}

#[test]
fn ring_stats_reports_energy_with_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let e = dir.path().join("e.csv");
    ok(&["embed", "--graph", s(&g), "--out", s(&e)]);
    let v: Value = serde_json::from_slice(&ok(&["ring-stats", "--embedding", s(&e), "--graph", s(&g)]).stdout).unwrap();
    assert_eq!(v["n"], 60);
    assert!(v["ring"]["annularity"].as_f64().unwrap() > 0.0);
    assert_eq!(v["energy"]["model"], "k_regular");
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_forcelab"))
        .args(["meanfield", "--c", "1"])
        .env("FORCELAB_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
