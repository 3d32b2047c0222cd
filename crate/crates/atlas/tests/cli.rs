use std::path::Path;
use std::process::{Command, Output};

use atlas::config::AtlasConfig;
use atlas::synth::{write_corpus, SynthSpec};
use atlas_core::corpus::{load_manifest, write_embeddings, EmbeddingKind, EmbeddingMatrix};
use atlas_core::manifold::UmapParams;
use atlas_core::Matrix;
use atlas_gateway::stub::{StubConfig, StubServer};

fn atlas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(args)
        .env_remove("ATLAS_GATEWAY_URL")
        .env_remove("ATLAS_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tiny_corpus(dir: &Path) -> usize {
    write_corpus(dir, &SynthSpec { per_theme: 3, noise: 5, ..SynthSpec::default() }).unwrap().len()
}

#[test]
fn reduce_help_documents_defaults() {
    let o = atlas(&["reduce", "--help"]);
    assert!(o.status.success());
    let help = stdout(&o);
    let d = UmapParams::default();
    for (flag, value) in [
        ("--n-components", d.n_components.to_string()),
        ("--n-neighbors", d.n_neighbors.to_string()),
        ("--min-dist", d.min_dist.to_string()),
        ("--negative-sample-rate", d.negative_sample_rate.to_string()),
        ("--n-epochs", d.n_epochs.to_string()),
        ("--metric", d.metric.to_string()),
    ] {
        let line = help.lines().skip_while(|l| !l.contains(flag)).take(2).collect::<String>();
        assert!(line.contains(&format!("[default: {value}]")), "{flag} missing default {value}: {line}");
    }
    assert_eq!((d.n_components, d.n_neighbors, d.min_dist, d.negative_sample_rate, d.n_epochs), (10, 50, 0.05, 20, 1000));
}

#[test]
fn default_config_matches_snapshot_and_reloads() {
    let o = atlas(&["config", "--default"]);
    assert!(o.status.success());
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/default_config.toml")).unwrap();
    assert_eq!(stdout(&o), golden);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("atlas.toml");
    std::fs::write(&path, &golden).unwrap();
    let loaded = AtlasConfig::load(&path).unwrap();
    assert_eq!(AtlasConfig { base_dir: Default::default(), ..loaded }, AtlasConfig::default());
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "[umap]\nn_neighbours = 5\n").unwrap();
    let o = atlas(&["--config", path.to_str().unwrap(), "validate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("n_neighbours"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_error() {
    let o = atlas(&["--config", "/nonexistent/atlas.toml", "validate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("not found"));
}

#[test]
fn validate_names_missing_embedding_row() {
    let tmp = tempfile::tempdir().unwrap();
    let n = tiny_corpus(tmp.path());
    let corpus = load_manifest(tmp.path().join("manifest.csv")).unwrap();
    let mut ids: Vec<String> = corpus.ids().map(str::to_owned).collect();
    let dropped = ids.remove(7);
    let work = tmp.path().join("work");
    std::fs::create_dir_all(&work).unwrap();
    let m = EmbeddingMatrix::new(EmbeddingKind::Image, ids, Matrix::from_vec(n - 1, 4, vec![0.5f32; (n - 1) * 4])).unwrap();
    write_embeddings(&m, work.join("image_embeddings.emb")).unwrap();

    let config = tmp.path().join("atlas.toml");
    let o = atlas(&["--config", config.to_str().unwrap(), "validate"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains(&dropped), "{err}");
    assert!(err.contains("image embedding"), "{err}");
}

#[test]
fn validate_passes_on_bare_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_corpus(tmp.path());
    let config = tmp.path().join("atlas.toml");
    let o = atlas(&["--config", config.to_str().unwrap(), "validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("records 53"), "{out}");
    assert!(out.lines().last().unwrap().starts_with("provenance validate "));
}

#[test]
fn synth_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = atlas(&["synth", "--out", dir.to_str().unwrap(), "--per-theme", "2", "--noise", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("wrote 35 records"));
    }
    for f in ["manifest.csv", "catalog.csv", "planted.csv", "atlas.toml", "images/s00001.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn describe_and_embed_are_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let n = tiny_corpus(tmp.path());
    let stub = StubServer::start("127.0.0.1:0", StubConfig::default()).unwrap();
    let config = tmp.path().join("atlas.toml");
    let base = ["--config", config.to_str().unwrap(), "--gateway-url", &stub.base_url()];
    let run = |cmd: &str| {
        let o = atlas(&[&base[..], &[cmd]].concat());
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        stdout(&o)
    };
    let first = run("describe");
    assert!(first.contains(&format!("described {n}")), "{first}");
    let second = run("describe");
    assert!(second.contains(&format!("already described {n}")), "{second}");
    assert!(second.contains("described 0"), "{second}");
    let provenance = |s: &str| s.lines().last().unwrap().to_owned();
    assert_eq!(provenance(&first), provenance(&second));

    let e1 = run("embed");
    assert!(e1.contains(&format!("description embeddings {n} x 1024")), "{e1}");
    assert!(e1.contains(&format!("image embeddings {n} x 768")), "{e1}");
    let bytes = std::fs::read(tmp.path().join("work/description_embeddings.emb")).unwrap();
    let requests = stub.requests();
    let e2 = run("embed");
    assert!(e2.contains("upstream requests 0"), "{e2}");
    assert_eq!(stub.requests(), requests);
    assert_eq!(std::fs::read(tmp.path().join("work/description_embeddings.emb")).unwrap(), bytes);
    assert!(run("validate").contains("artifacts aligned"));
}
