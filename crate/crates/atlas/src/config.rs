use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use atlas_core::density::HdbscanParams;
use atlas_core::manifold::{TsneParams, UmapParams};
use atlas_core::retrieval::{DEFAULT_K, DEFAULT_TEMPLATE};
use atlas_core::topics::TopicModelParams;
use atlas_gateway::{DescribeParams, GatewayConfig};

pub const ENV_BIND: &str = "ATLAS_BIND";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub manifest: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    /// Where every derived artifact is written.
    pub work_dir: PathBuf,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            manifest: "manifest.csv".into(),
            catalog: Some("catalog.csv".into()),
            work_dir: "work".into(),
        }
    }
}

/// Embedding space fed to the reduction and clustering steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringSpace {
    #[default]
    Description,
    Image,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub space: ClusteringSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub template: String,
    pub use_template: bool,
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            template: DEFAULT_TEMPLATE.into(),
            use_template: true,
            k: DEFAULT_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub max_layers: usize,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self { max_layers: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { bind: "127.0.0.1:8765".into() }
    }
}

/// Every module's parameters, one TOML table each.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    pub corpus: CorpusConfig,
    pub gateway: GatewayConfig,
    pub describe: DescribeParams,
    pub umap: UmapParams,
    pub tsne: TsneParams,
    pub hdbscan: HdbscanParams,
    pub clustering: ClusteringConfig,
    pub topics: TopicModelParams,
    pub retrieval: RetrievalConfig,
    pub export: ExportConfig,
    pub service: ServiceConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl AtlasConfig {
    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Applies environment overrides for endpoint URLs and the bind address.
    pub fn apply_env(&mut self) {
        self.gateway.apply_env();
        if let Ok(bind) = std::env::var(ENV_BIND) {
            if !bind.is_empty() {
                self.service.bind = bind;
            }
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.resolve(&self.corpus.manifest)
    }

    pub fn catalog_path(&self) -> Option<PathBuf> {
        self.corpus.catalog.as_deref().map(|p| self.resolve(p))
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.corpus.work_dir)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.gateway.validate()?;
        self.describe.validate()?;
        self.umap.validate()?;
        self.hdbscan.validate()?;
        self.topics.validate()?;
        if self.retrieval.k < 1 {
            bail!("retrieval.k must be >= 1");
        }
        if !self.retrieval.template.contains("{query}") {
            bail!("retrieval.template must contain {{query}}");
        }
        if self.export.max_layers < 1 {
            bail!("export.max_layers must be >= 1");
        }
        if !(self.tsne.perplexity > 0.0) || self.tsne.n_iter < 1 {
            bail!("tsne.perplexity must be positive and tsne.n_iter >= 1");
        }
        Ok(())
    }
}
