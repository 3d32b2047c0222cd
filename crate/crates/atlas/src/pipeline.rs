//! One function per CLI command. Each reads its inputs from the work
//! directory, writes its outputs there, and returns a [`Report`] carrying the
//! provenance hash of everything it read.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use atlas_core::atlas::{build_bundle, build_label_layers, write_bundle, BundleInputs, Provenance};
use atlas_core::corpus::{
    append_descriptions, join_catalog, load_catalog, load_descriptions, load_manifest, read_embeddings, validate_alignment,
    write_embeddings, AnnotatedCorpus, AppCatalog, Corpus, DescriptionStore, EmbeddingKind, EmbeddingMatrix,
};
use atlas_core::density::{hdbscan, label_rows, read_labels, validity_score, write_labels, ClusterLabels, CondensedTree};
use atlas_core::manifold::{reduce, tsne_2d, UmapParams};
use atlas_core::retrieval::{CosineIndex, Query, QueryEmbedder};
use atlas_core::topics::{extract_topics, label_topics, Topic, TopicDoc};
use atlas_core::Matrix;
use atlas_gateway::Gateway;

use crate::config::{AtlasConfig, ClusteringSpace};
use crate::provenance::Inputs;
use crate::service::{dual_search, DualPanels};

/// Above this many points the validity index is skipped (it is quadratic).
pub const VALIDITY_MAX_POINTS: usize = 20_000;
const DESCRIBE_CHUNK: usize = 64;
const EMBED_CHUNK: usize = 256;

/// File names inside the work directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn at(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn descriptions(&self) -> PathBuf {
        self.at("descriptions.jsonl")
    }
    pub fn image_embeddings(&self) -> PathBuf {
        self.at("image_embeddings.emb")
    }
    pub fn description_embeddings(&self) -> PathBuf {
        self.at("description_embeddings.emb")
    }
    pub fn reduced(&self) -> PathBuf {
        self.at("reduced.emb")
    }
    pub fn layout2d(&self) -> PathBuf {
        self.at("layout2d.emb")
    }
    pub fn clustering(&self) -> PathBuf {
        self.at("clustering.json")
    }
    pub fn labels(&self) -> PathBuf {
        self.at("labels.csv")
    }
    pub fn topics(&self) -> PathBuf {
        self.at("topics.json")
    }
    pub fn prompts(&self) -> PathBuf {
        self.at("prompts.jsonl")
    }
    pub fn bundle(&self) -> PathBuf {
        self.at("atlas.json")
    }
    pub fn cache(&self) -> PathBuf {
        self.at("cache")
    }

    /// Parameter sidecar next to a matrix file.
    pub fn sidecar(path: &Path) -> PathBuf {
        path.with_extension("params.json")
    }
}

/// Outcome of one command.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub provenance: String,
    pub lines: Vec<String>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        write!(f, "provenance {} {}", self.command, self.provenance)
    }
}

/// Parameters echoed next to a layout file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutSidecar {
    pub projection: String,
    pub source: String,
    pub params: serde_json::Value,
}

/// Condensed tree and selection saved by `cluster`, rows in `ids` order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedClustering {
    pub ids: Vec<String>,
    pub tree: CondensedTree<f64>,
    pub labels: ClusterLabels,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PromptLogLine<'a> {
    topic_id: i64,
    attempt: usize,
    system: &'a str,
    example: &'a str,
    main: &'a str,
}

pub struct Pipeline {
    pub config: AtlasConfig,
    pub artifacts: Artifacts,
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let bytes = serde_json::to_vec_pretty(value)?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {} (run the earlier pipeline steps first)", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn read_matrix(path: &Path) -> anyhow::Result<EmbeddingMatrix> {
    read_embeddings(path).with_context(|| format!("reading {} (run the earlier pipeline steps first)", path.display()))
}

fn listing(ids: &[String]) -> String {
    const SHOWN: usize = 20;
    let head = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        format!("{head}, ... ({} total)", ids.len())
    } else {
        head
    }
}

impl Pipeline {
    pub fn new(config: AtlasConfig) -> anyhow::Result<Self> {
        config.validate()?;
        let artifacts = Artifacts::new(config.work_dir());
        Ok(Self { config, artifacts })
    }

    pub fn gateway(&self) -> anyhow::Result<Gateway> {
        let mut g = self.config.gateway.clone();
        if g.cache_dir.is_none() {
            g.cache_dir = Some(self.artifacts.cache());
        } else if let Some(dir) = &g.cache_dir {
            g.cache_dir = Some(self.config.resolve(dir));
        }
        Ok(Gateway::new(g)?)
    }

    pub fn corpus(&self) -> anyhow::Result<Corpus> {
        let path = self.config.manifest_path();
        load_manifest(&path).with_context(|| format!("loading manifest {}", path.display()))
    }

    fn catalog(&self) -> anyhow::Result<AppCatalog> {
        match self.config.catalog_path() {
            Some(p) => load_catalog(&p).with_context(|| format!("loading catalog {}", p.display())),
            None => Ok(AppCatalog::default()),
        }
    }

    pub fn annotated(&self) -> anyhow::Result<AnnotatedCorpus> {
        Ok(join_catalog(self.corpus()?, &self.catalog()?))
    }

    fn descriptions(&self) -> anyhow::Result<DescriptionStore> {
        Ok(load_descriptions(self.artifacts.descriptions())?)
    }

    /// Description text per record for the configured model and prompt.
    pub fn description_texts(&self) -> anyhow::Result<HashMap<String, String>> {
        let store = self.descriptions()?;
        Ok(store.texts(Some(&self.config.gateway.description.model_id), Some(&self.config.describe.prompt_hash())))
    }

    fn corpus_inputs(&self) -> Inputs {
        let mut inputs = Inputs::default();
        inputs.file("manifest", &self.config.manifest_path());
        if let Some(c) = self.config.catalog_path() {
            inputs.file("catalog", &c);
        }
        inputs
    }

    fn clustering_source(&self) -> PathBuf {
        match self.config.clustering.space {
            ClusteringSpace::Description => self.artifacts.description_embeddings(),
            ClusteringSpace::Image => self.artifacts.image_embeddings(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<Report> {
        let corpus = self.corpus()?;
        let annotated = join_catalog(corpus.clone(), &self.catalog()?);
        let a = &self.artifacts;
        let load = |p: PathBuf| -> anyhow::Result<Option<EmbeddingMatrix>> {
            if !p.exists() {
                return Ok(None);
            }
            let m = read_matrix(&p)?;
            m.validate().with_context(|| format!("validating {}", p.display()))?;
            Ok(Some(m))
        };
        let image = load(a.image_embeddings())?;
        let desc = load(a.description_embeddings())?;
        let store = a.descriptions().exists().then(|| self.descriptions()).transpose()?;
        let report = validate_alignment(&corpus, image.as_ref(), desc.as_ref(), store.as_ref());

        let mut inputs = self.corpus_inputs();
        for (name, p) in [("descriptions", a.descriptions()), ("image_embeddings", a.image_embeddings()), ("description_embeddings", a.description_embeddings())] {
            inputs.file(name, &p);
        }
        let missing_images = corpus
            .records()
            .iter()
            .filter(|r| corpus.image_path(r).is_none_or(|p| !p.exists()))
            .count();
        let mut lines = vec![
            format!("records {}", corpus.len()),
            format!("catalog unmatched {}", annotated.unmatched),
            format!("image files missing {missing_images}"),
        ];
        let mut problems = Vec::new();
        for (what, ids) in [
            ("image embedding", &report.missing_image_embedding),
            ("description embedding", &report.missing_description_embedding),
            ("description", &report.missing_description),
        ] {
            if !ids.is_empty() {
                problems.push(format!("missing {what} for {}", listing(ids)));
            }
        }
        if !report.unknown_ids.is_empty() {
            problems.push(format!("ids not in the manifest: {}", listing(&report.unknown_ids)));
        }
        if !problems.is_empty() {
            bail!("{}", problems.join("\n"));
        }
        lines.push("artifacts aligned".into());
        Ok(Report { command: "validate", provenance: inputs.digest(), lines })
    }

    pub fn describe(&self) -> anyhow::Result<Report> {
        create_dir(&self.artifacts.dir)?;
        let corpus = self.corpus()?;
        let gateway = self.gateway()?;
        let params = &self.config.describe;
        let model = &self.config.gateway.description.model_id;
        let hash = params.prompt_hash();
        let store = self.descriptions()?;
        let mut inputs = self.corpus_inputs();
        inputs.param("describe", params).param("model", model);

        let todo: Vec<_> = corpus.records().iter().filter(|r| !store.contains(&r.record_id, model, &hash)).collect();
        let (mut written, mut failed, mut no_image) = (0usize, Vec::new(), 0usize);
        for chunk in todo.chunks(DESCRIBE_CHUNK) {
            let mut ids = Vec::new();
            let mut images = Vec::new();
            for r in chunk {
                match corpus.image_path(r).and_then(|p| std::fs::read(p).ok()) {
                    Some(b) => {
                        ids.push(r.record_id.as_str());
                        images.push(b);
                    }
                    None => no_image += 1,
                }
            }
            let refs: Vec<&[u8]> = images.iter().map(Vec::as_slice).collect();
            let mut records = Vec::new();
            for (id, res) in ids.iter().zip(gateway.describe_images(&refs, params)) {
                match res {
                    Ok(text) => records.push(gateway.description_record(id, text, params)),
                    Err(e) => {
                        log::warn!("describe {id}: {e}");
                        failed.push(id.to_string());
                    }
                }
            }
            written += append_descriptions(self.artifacts.descriptions(), &records)?;
        }
        let mut lines = vec![
            format!("already described {}", corpus.len() - todo.len()),
            format!("described {written}"),
            format!("skipped without image {no_image}"),
        ];
        if !failed.is_empty() {
            lines.push(format!("failed {}: {}", failed.len(), listing(&failed)));
        }
        lines.push(format!("upstream requests {}", gateway.stats().requests));
        Ok(Report { command: "describe", provenance: inputs.digest(), lines })
    }

    pub fn embed(&self) -> anyhow::Result<Report> {
        create_dir(&self.artifacts.dir)?;
        let corpus = self.corpus()?;
        let gateway = self.gateway()?;
        let texts = self.description_texts()?;
        let mut inputs = self.corpus_inputs();
        inputs.file("descriptions", &self.artifacts.descriptions()).param("gateway", &self.config.gateway);
        let mut lines = Vec::new();

        let ids: Vec<String> = corpus.ids().filter(|id| texts.contains_key(*id)).map(str::to_owned).collect();
        if ids.is_empty() {
            lines.push("no descriptions to embed".into());
        } else {
            let mut rows = Vec::with_capacity(ids.len());
            for chunk in ids.chunks(EMBED_CHUNK) {
                let batch: Vec<&str> = chunk.iter().map(|id| texts[id].as_str()).collect();
                rows.extend(gateway.embed_texts(&batch)?);
            }
            let m = EmbeddingMatrix::new(EmbeddingKind::Description, ids, Matrix::from_rows(&rows))?;
            write_embeddings(&m, self.artifacts.description_embeddings())?;
            lines.push(format!("description embeddings {} x {}", m.n(), m.d()));
        }

        let with_images: Vec<_> = corpus
            .records()
            .iter()
            .filter_map(|r| corpus.image_path(r).filter(|p| p.exists()).map(|p| (r.record_id.clone(), p)))
            .collect();
        if with_images.is_empty() {
            lines.push("no image files; image embeddings skipped".into());
        } else {
            let mut rows = Vec::with_capacity(with_images.len());
            for chunk in with_images.chunks(EMBED_CHUNK) {
                let bytes: Vec<Vec<u8>> = chunk
                    .iter()
                    .map(|(_, p)| std::fs::read(p).with_context(|| format!("reading {}", p.display())))
                    .collect::<anyhow::Result<_>>()?;
                let refs: Vec<&[u8]> = bytes.iter().map(Vec::as_slice).collect();
                rows.extend(gateway.embed_images(&refs)?);
            }
            let ids = with_images.into_iter().map(|(id, _)| id).collect();
            let m = EmbeddingMatrix::new(EmbeddingKind::Image, ids, Matrix::from_rows(&rows))?;
            write_embeddings(&m, self.artifacts.image_embeddings())?;
            lines.push(format!("image embeddings {} x {}", m.n(), m.d()));
        }
        lines.push(format!("upstream requests {}", gateway.stats().requests));
        Ok(Report { command: "embed", provenance: inputs.digest(), lines })
    }

    pub fn reduce(&self, params: &UmapParams) -> anyhow::Result<Report> {
        params.validate()?;
        let source = self.clustering_source();
        let m = read_matrix(&source)?;
        let mut inputs = Inputs::default();
        inputs.file("embeddings", &source).param("umap", params);
        let layout = reduce(&m.data, params)?;
        let out = EmbeddingMatrix::new(EmbeddingKind::Layout, m.ids.clone(), layout.coords)?;
        write_embeddings(&out, self.artifacts.reduced())?;
        write_json(
            &Artifacts::sidecar(&self.artifacts.reduced()),
            &LayoutSidecar {
                projection: "umap".into(),
                source: source.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
                params: serde_json::to_value(params)?,
            },
        )?;
        Ok(Report {
            command: "reduce",
            provenance: inputs.digest(),
            lines: vec![format!("reduced {} x {} to {} dimensions", m.n(), m.d(), out.d())],
        })
    }

    pub fn project2d(&self) -> anyhow::Result<Report> {
        let source = self.clustering_source();
        let m = read_matrix(&source)?;
        let mut inputs = Inputs::default();
        inputs.file("embeddings", &source);
        let (projection, coords, params) = if m.n() <= self.config.tsne.max_exact_points {
            inputs.param("tsne", &self.config.tsne);
            let r = tsne_2d(&m.data, &self.config.tsne)?;
            ("tsne", r.layout.coords, serde_json::to_value(&self.config.tsne)?)
        } else {
            let p = UmapParams { n_components: 2, two_stage_components: None, ..self.config.umap.clone() };
            inputs.param("umap", &p);
            ("umap", reduce(&m.data, &p)?.coords, serde_json::to_value(&p)?)
        };
        let out = EmbeddingMatrix::new(EmbeddingKind::Layout, m.ids.clone(), coords)?;
        write_embeddings(&out, self.artifacts.layout2d())?;
        write_json(
            &Artifacts::sidecar(&self.artifacts.layout2d()),
            &LayoutSidecar {
                projection: projection.into(),
                source: source.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
                params,
            },
        )?;
        Ok(Report {
            command: "project2d",
            provenance: inputs.digest(),
            lines: vec![format!("projected {} points with {projection}", m.n())],
        })
    }

    pub fn cluster(&self) -> anyhow::Result<Report> {
        let m = read_matrix(&self.artifacts.reduced())?;
        let mut inputs = Inputs::default();
        inputs.file("reduced", &self.artifacts.reduced()).param("hdbscan", &self.config.hdbscan);
        let x: Matrix<f64> = m.data.cast();
        let c = hdbscan(&x, &self.config.hdbscan)?;
        write_labels(self.artifacts.labels(), &label_rows(&m.ids, &c.labels))?;
        let mut lines = vec![
            format!("clusters {}", c.labels.n_clusters()),
            format!("noise {} of {}", c.labels.noise_count(), m.n()),
        ];
        if m.n() <= VALIDITY_MAX_POINTS && c.labels.n_clusters() >= 2 {
            let v = validity_score(&x, &c.labels.labels, self.config.hdbscan.min_samples)?;
            lines.push(format!("validity {v:.4}"));
        }
        write_json(&self.artifacts.clustering(), &SavedClustering { ids: m.ids, tree: c.tree, labels: c.labels })?;
        Ok(Report { command: "cluster", provenance: inputs.digest(), lines })
    }

    pub fn topics(&self) -> anyhow::Result<Report> {
        let rows = read_labels(self.artifacts.labels()).context("reading labels (run cluster first)")?;
        let texts = self.description_texts()?;
        let mut inputs = Inputs::default();
        inputs
            .file("labels", &self.artifacts.labels())
            .file("descriptions", &self.artifacts.descriptions())
            .param("topics", &self.config.topics);
        let missing: Vec<String> = rows.iter().filter(|r| !texts.contains_key(&r.record_id)).map(|r| r.record_id.clone()).collect();
        if !missing.is_empty() {
            bail!("missing description for {}", listing(&missing));
        }
        let docs: Vec<TopicDoc<'_>> = rows
            .iter()
            .map(|r| TopicDoc { record_id: &r.record_id, cluster: r.label, text: &texts[&r.record_id] })
            .collect();
        let topics = extract_topics(&docs, &self.config.topics)?;
        write_json(&self.artifacts.topics(), &topics)?;
        let lines = topics
            .iter()
            .map(|t| format!("topic {:>3} size {:>5} keywords {}", t.topic_id, t.size, t.keywords.join(", ")))
            .collect();
        Ok(Report { command: "topics", provenance: inputs.digest(), lines })
    }

    pub fn label(&self) -> anyhow::Result<Report> {
        let mut topics: Vec<Topic> = read_json(&self.artifacts.topics())?;
        let texts = self.description_texts()?;
        let mut inputs = Inputs::default();
        inputs
            .file("topics", &self.artifacts.topics())
            .file("descriptions", &self.artifacts.descriptions())
            .param("topics", &self.config.topics)
            .param("chat", &self.config.gateway.chat);
        let gateway = self.gateway()?;
        let borrowed: HashMap<&str, &str> = texts.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let prompts = label_topics(&mut topics, &borrowed, &gateway, &self.config.topics)?;
        write_json(&self.artifacts.topics(), &topics)?;

        let mut log = std::io::BufWriter::new(std::fs::File::create(self.artifacts.prompts())?);
        for (topic_id, list) in &prompts {
            for (attempt, p) in list.iter().enumerate() {
                let line = PromptLogLine { topic_id: *topic_id, attempt, system: &p.system, example: &p.example, main: &p.main };
                writeln!(log, "{}", serde_json::to_string(&line)?)?;
            }
        }
        log.flush()?;
        let mut lines: Vec<String> = topics
            .iter()
            .map(|t| {
                let flags = if t.flags.is_empty() { String::new() } else { format!(" [{}]", t.flags.join(", ")) };
                format!("topic {:>3} {}{flags}", t.topic_id, t.label)
            })
            .collect();
        lines.push(format!("upstream requests {}", gateway.stats().requests));
        Ok(Report { command: "label", provenance: inputs.digest(), lines })
    }

    pub fn export(&self) -> anyhow::Result<Report> {
        let a = &self.artifacts;
        let annotated = self.annotated()?;
        let layout_m = read_matrix(&a.layout2d())?;
        if layout_m.d() != 2 {
            bail!("{} has {} columns, expected 2", a.layout2d().display(), layout_m.d());
        }
        let sidecar: LayoutSidecar = read_json(&Artifacts::sidecar(&a.layout2d()))?;
        let labels = read_labels(a.labels()).context("reading labels (run cluster first)")?;
        let topics: Vec<Topic> = read_json(&a.topics())?;
        let saved: SavedClustering = read_json(&a.clustering())?;
        let texts = self.description_texts()?;

        let position: HashMap<&str, usize> = layout_m.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let missing: Vec<String> = saved.ids.iter().filter(|id| !position.contains_key(id.as_str())).cloned().collect();
        if !missing.is_empty() {
            bail!("layout is missing clustered ids {}", listing(&missing));
        }
        let rows: Vec<[f64; 2]> = saved
            .ids
            .iter()
            .map(|id| {
                let r = layout_m.row(position[id.as_str()]);
                [r[0] as f64, r[1] as f64]
            })
            .collect();
        let layers = build_label_layers(&saved.tree, &saved.labels, &topics, &Matrix::from_rows(&rows), self.config.export.max_layers);
        let layout: Vec<(String, [f32; 2])> = layout_m.ids.iter().enumerate().map(|(i, id)| (id.clone(), [layout_m.row(i)[0], layout_m.row(i)[1]])).collect();

        let mut inputs = self.corpus_inputs();
        inputs
            .file("descriptions", &a.descriptions())
            .file("reduced", &a.reduced())
            .file("layout2d", &a.layout2d())
            .file("labels", &a.labels())
            .file("topics", &a.topics())
            .param("umap", &self.config.umap)
            .param("hdbscan", &self.config.hdbscan)
            .param("topics", &self.config.topics)
            .param("projection", &sidecar.params)
            .param("export", &self.config.export);
        let provenance = Provenance {
            projection: sidecar.projection.clone(),
            inputs: inputs.files.clone(),
            params: inputs.params.clone(),
        };
        let bundle = build_bundle(BundleInputs {
            corpus: &annotated,
            layout: &layout,
            labels: &labels,
            descriptions: &texts,
            topics: &topics,
            layers: &layers,
            provenance,
        })?;
        write_bundle(&bundle, a.bundle())?;
        let mut lines = vec![
            format!("points {}", bundle.points.len()),
            format!("topics {}", bundle.topics.len()),
            format!("projection {}", sidecar.projection),
        ];
        for l in &bundle.label_layers {
            lines.push(format!("layer {} labels {}", l.layer, l.labels.len()));
        }
        lines.push(format!("bundle {}", a.bundle().display()));
        Ok(Report { command: "export", provenance: inputs.digest(), lines })
    }

    /// Exact-search indexes for whichever embedding files exist.
    pub fn indexes(&self) -> anyhow::Result<(Option<CosineIndex<f32>>, Option<CosineIndex<f32>>)> {
        let load = |p: PathBuf| -> anyhow::Result<Option<CosineIndex<f32>>> {
            if !p.exists() {
                return Ok(None);
            }
            Ok(Some(CosineIndex::from_embeddings(read_matrix(&p)?)?))
        };
        Ok((load(self.artifacts.image_embeddings())?, load(self.artifacts.description_embeddings())?))
    }

    pub fn query(&self, raw: &str, k: Option<usize>, template: bool) -> Query {
        Query {
            raw: raw.to_owned(),
            template: template.then(|| self.config.retrieval.template.clone()),
            k: k.unwrap_or(self.config.retrieval.k),
        }
    }

    pub fn retrieve(&self, query: &Query, embedder: &dyn QueryEmbedder) -> anyhow::Result<(Report, DualPanels)> {
        let (image, desc) = self.indexes()?;
        let mut inputs = Inputs::default();
        inputs
            .file("image_embeddings", &self.artifacts.image_embeddings())
            .file("description_embeddings", &self.artifacts.description_embeddings())
            .param("query", query);
        let panels = dual_search(query, image.as_ref(), desc.as_ref(), embedder)?;
        let mut lines = vec![format!("query {:?}", panels.query)];
        for (name, panel) in [("image_embedding", &panels.image_space), ("description_embedding", &panels.description_space)] {
            lines.push(format!("[{name}]"));
            match panel {
                Ok(hits) => lines.extend(hits.iter().map(|h| format!("{:>3} {:.4} {}", h.rank, h.score, h.record_id))),
                Err(e) => lines.push(format!("unavailable: {e}")),
            }
        }
        Ok((Report { command: "retrieve", provenance: inputs.digest(), lines }, panels))
    }
}
