use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use atlas_core::atlas::{
    build_bundle, build_label_layers, decode_points, encode_points, read_bundle, search, write_bundle, AtlasError,
    BundleInputs, ColorMode, Provenance, SearchField, NOISE_COLOR,
};
use atlas_core::corpus::{join_catalog, AppCatalog, AppCatalogEntry, Corpus, ScreenRecord};
use atlas_core::density::{hdbscan, label_rows, HdbscanParams, LabelRow, NOISE};
use atlas_core::rng::seeded;
use atlas_core::topics::{Topic, NOISE_LABEL};
use atlas_core::Matrix;
use chrono::{TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn nested_blobs(groups: usize, subs: usize, per: usize, seed: u64) -> Matrix<f64> {
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, 0.4).unwrap();
    let mut data = Vec::new();
    for g in 0..groups {
        let ga = g as f64 / groups as f64 * std::f64::consts::TAU;
        let (gx, gy) = (200.0 * ga.cos(), 200.0 * ga.sin());
        for s in 0..subs {
            let sa = s as f64 / subs as f64 * std::f64::consts::TAU;
            let (sx, sy) = (gx + 15.0 * sa.cos(), gy + 15.0 * sa.sin());
            for _ in 0..per {
                data.push(sx + noise.sample(&mut rng));
                data.push(sy + noise.sample(&mut rng));
            }
        }
    }
    Matrix::from_vec(groups * subs * per, 2, data)
}

fn topics_for(n: usize) -> Vec<Topic> {
    (0..n as i64)
        .map(|id| Topic {
            topic_id: id,
            keywords: vec![format!("kw{id}")],
            label: format!("Topic label {id}"),
            size: 0,
            representative_ids: Vec::new(),
            flags: Vec::new(),
        })
        .collect()
}

#[test]
fn two_clusters_give_one_layer() {
    let x = nested_blobs(2, 1, 40, 1);
    let c = hdbscan(&x, &HdbscanParams { min_cluster_size: 10, min_samples: 5, ..Default::default() }).unwrap();
    assert_eq!(c.labels.n_clusters(), 2);
    let layers = build_label_layers(&c.tree, &c.labels, &topics_for(2), &x, 3);
    assert_eq!(layers.len(), 1);
    assert_eq!(layers[0].labels.len(), 2);
}

#[test]
fn nested_hierarchy_refines_and_anchors_stay_inside() {
    let x = nested_blobs(4, 5, 40, 2);
    let c = hdbscan(&x, &HdbscanParams { min_cluster_size: 15, min_samples: 5, ..Default::default() }).unwrap();
    let k = c.labels.n_clusters();
    assert_eq!(k, 20);
    let layers = build_label_layers(&c.tree, &c.labels, &topics_for(k), &x, 3);
    assert!(layers.len() >= 2, "{} layers", layers.len());
    assert!(layers[0].labels.len() <= 12);
    assert_eq!(layers.last().unwrap().labels.len(), 20);

    let non_noise = c.labels.labels.iter().filter(|&&l| l != NOISE).count();
    let covered: usize = layers[0].labels.iter().map(|l| l.size).sum();
    assert!(covered as f64 >= 0.9 * non_noise as f64);

    for w in layers.windows(2) {
        for fine in &w[1].labels {
            let fine_set: BTreeSet<i64> = fine.topic_ids.iter().copied().collect();
            let parents = w[0]
                .labels
                .iter()
                .filter(|coarse| fine_set.is_subset(&coarse.topic_ids.iter().copied().collect()))
                .count();
            assert_eq!(parents, 1);
        }
    }
    for layer in &layers {
        for label in &layer.labels {
            let pts: Vec<usize> = (0..x.rows()).filter(|&i| label.topic_ids.contains(&c.labels.labels[i])).collect();
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &i in &pts {
                for d in 0..2 {
                    lo[d] = lo[d].min(x.row(i)[d]);
                    hi[d] = hi[d].max(x.row(i)[d]);
                }
            }
            assert!(label.x >= lo[0] && label.x <= hi[0] && label.y >= lo[1] && label.y <= hi[1]);
            assert_eq!(label.size, pts.len());
        }
    }
}

struct Fixture {
    corpus: atlas_core::corpus::AnnotatedCorpus,
    layout: Vec<(String, [f32; 2])>,
    labels: Vec<LabelRow>,
    descriptions: HashMap<String, String>,
    topics: Vec<Topic>,
}

fn fixture(n: usize, seed: u64) -> Fixture {
    let mut rng = seeded(seed);
    let apps = ["com.instagram.android", "com.whatsapp", "com.google.android.youtube", "org.unknown.app"];
    let records: Vec<ScreenRecord> = (0..n)
        .map(|i| ScreenRecord {
            record_id: format!("r{i:06}"),
            participant_id: format!("p{:02}", i % 7),
            captured_at: Utc.timestamp_opt(1_608_000_000 + i as i64 * 5, 0).unwrap(),
            app_package: Some(apps[i % apps.len()].to_string()),
            image_ref: None,
        })
        .collect();
    let catalog = AppCatalog::from_entries([
        AppCatalogEntry { app_package: apps[0].into(), app_name: "Instagram".into(), app_category: "Social".into() },
        AppCatalogEntry { app_package: apps[1].into(), app_name: "WhatsApp Messenger".into(), app_category: "Communication".into() },
        AppCatalogEntry { app_package: apps[2].into(), app_name: "YouTube".into(), app_category: "Video Players & Editors".into() },
    ])
    .unwrap();
    let corpus = join_catalog(Corpus::from_records(records, ".").unwrap(), &catalog);
    let ids: Vec<String> = corpus.corpus.ids().map(String::from).collect();
    let layout = ids.iter().map(|id| (id.clone(), [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])).collect();
    let labels = ids
        .iter()
        .map(|id| LabelRow { record_id: id.clone(), label: rng.random_range(-1..5), strength: rng.random() })
        .collect();
    let words = ["cat video", "chat with friend", "Sports betting odds", "recipe", "news headline"];
    let descriptions =
        ids.iter().map(|id| (id.clone(), format!("The screenshot displays {} {}", words[rng.random_range(0..5)], "x".repeat(rng.random_range(0..400))))).collect();
    Fixture { corpus, layout, labels, descriptions, topics: topics_for(5) }
}

fn inputs(f: &Fixture) -> BundleInputs<'_> {
    BundleInputs {
        corpus: &f.corpus,
        layout: &f.layout,
        labels: &f.labels,
        descriptions: &f.descriptions,
        topics: &f.topics,
        layers: &[],
        provenance: Provenance { projection: "tsne".into(), ..Default::default() },
    }
}

#[test]
fn bundle_round_trips_deterministically() {
    let f = fixture(500, 3);
    let b = build_bundle(inputs(&f)).unwrap();
    assert_eq!(b.points.len(), 500);
    assert!(b.points.iter().all(|p| p.description_snippet.chars().count() <= 200));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("atlas.json");
    write_bundle(&b, &path).unwrap();
    let back = read_bundle(&path).unwrap();
    assert_eq!(back, b);
    assert_eq!(back.topics, b.topics);
    assert_eq!(build_bundle(inputs(&f)).unwrap().to_bytes(), b.to_bytes());

    let topic_table = b.color_table(ColorMode::Topic);
    let noise = topic_table.legend.iter().find(|e| e.key == NOISE_LABEL).unwrap();
    assert_eq!(noise.color, NOISE_COLOR);
    for t in &b.color_tables {
        assert!(t.legend.windows(2).all(|w| w[0].key < w[1].key));
        assert_eq!(t.indices.len(), 500);
    }
    let unknown_app = b.points.iter().find(|p| p.app_name == "org.unknown.app").unwrap();
    assert_eq!(unknown_app.app_category, "Unknown");
}

#[test]
fn missing_label_row_names_the_id() {
    let mut f = fixture(50, 4);
    let dropped = f.labels.remove(17).record_id;
    match build_bundle(inputs(&f)) {
        Err(AtlasError::Misaligned { artifact, missing, .. }) => {
            assert_eq!(artifact, "labels");
            assert_eq!(missing, [dropped]);
        }
        other => panic!("expected misalignment, got {other:?}"),
    }
    let mut f = fixture(50, 5);
    f.layout.push(("ghost".into(), [0.0, 0.0]));
    assert!(matches!(build_bundle(inputs(&f)), Err(AtlasError::Misaligned { artifact: "layout", .. })));
    let mut f = fixture(50, 6);
    f.topics.pop();
    assert!(matches!(build_bundle(inputs(&f)), Err(AtlasError::UnknownTopic(_))));
}

#[test]
fn search_matches_linear_scan() {
    let f = fixture(800, 7);
    let b = build_bundle(inputs(&f)).unwrap();
    let ids = search(&b, "instagram", &[SearchField::App]);
    let oracle: Vec<String> =
        b.points.iter().filter(|p| p.app_name.to_lowercase().contains("instagram")).map(|p| p.record_id.clone()).collect();
    assert_eq!(ids, oracle);
    assert_eq!(ids.len(), 200);
    for (q, fields) in [("CHAT", vec![SearchField::Description]), ("p03", vec![SearchField::Participant]), ("label 2", vec![SearchField::Topic]), ("o", SearchField::ALL.to_vec())] {
        let got = search(&b, q, &fields);
        let q = q.to_lowercase();
        let oracle: Vec<String> = b
            .points
            .iter()
            .filter(|p| {
                let topic = b.topic(p.topic_id).map_or(NOISE_LABEL.to_string(), |t| t.label.clone()).to_lowercase();
                fields.iter().any(|f| match f {
                    SearchField::App => p.app_name.to_lowercase().contains(&q),
                    SearchField::Category => p.app_category.to_lowercase().contains(&q),
                    SearchField::Participant => p.participant_id.to_lowercase().contains(&q),
                    SearchField::Topic => topic.contains(&q),
                    SearchField::Description => p.description_snippet.to_lowercase().contains(&q),
                })
            })
            .map(|p| p.record_id.clone())
            .collect();
        assert_eq!(got, oracle, "{q}");
    }
}

#[test]
fn packed_points_match_json_fields() {
    let f = fixture(300, 8);
    let b = build_bundle(inputs(&f)).unwrap();
    let packed = decode_points(&encode_points(&b)).unwrap();
    assert_eq!(packed.len(), 300);
    for (i, (p, q)) in b.points.iter().zip(&packed).enumerate() {
        assert_eq!((p.x, p.y, p.topic_id as i32), (q.x, q.y, q.topic_id));
        for (m, t) in b.color_tables.iter().enumerate() {
            assert_eq!(t.indices[i], q.colors[m]);
        }
    }
}

#[test]
fn large_bundle_exports_and_reloads_quickly() {
    let f = fixture(50_000, 9);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    let t = Instant::now();
    let b = build_bundle(inputs(&f)).unwrap();
    write_bundle(&b, &path).unwrap();
    let back = read_bundle(&path).unwrap();
    let elapsed = t.elapsed();
    assert_eq!(back.points.len(), 50_000);
    assert!(elapsed.as_secs_f64() < 5.0, "{elapsed:?}");
}

#[test]
fn label_rows_follow_clustering() {
    let x = nested_blobs(2, 1, 30, 10);
    let c = hdbscan(&x, &HdbscanParams { min_cluster_size: 10, min_samples: 3, ..Default::default() }).unwrap();
    let ids: Vec<String> = (0..x.rows()).map(|i| format!("id{i}")).collect();
    let rows = label_rows(&ids, &c.labels);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("labels.csv");
    atlas_core::density::write_labels(&p, &rows).unwrap();
    assert_eq!(atlas_core::density::read_labels(&p).unwrap(), rows);
    assert!(std::fs::read_to_string(&p).unwrap().starts_with("record_id,label,strength\n"));
}
