//! Deterministic synthetic corpus: themed screenshots drawn as tiny SVG files
//! whose `<title>` carries the visible content, plus a manifest, an app
//! catalog and a config tuned for its size.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use chrono::{DateTime, Duration, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use atlas_core::corpus::{write_manifest, ScreenRecord};
use atlas_core::rng::seeded;

use crate::config::AtlasConfig;

struct Theme {
    package: &'static str,
    app: &'static str,
    category: &'static str,
    color: &'static str,
    words: [&'static str; 8],
}

struct Group {
    words: [&'static str; 3],
    themes: [Theme; 4],
}

const GROUPS: [Group; 4] = [
    Group {
        words: ["watch", "stream", "play"],
        themes: [
            Theme { package: "com.netflix.mediaclient", app: "Netflix", category: "Entertainment", color: "#b20710", words: ["episode", "season", "series", "trailer", "documentary", "thriller", "binge", "subtitles"] },
            Theme { package: "com.spotify.music", app: "Spotify", category: "Music & Audio", color: "#1db954", words: ["playlist", "album", "song", "artist", "lyrics", "shuffle", "podcast", "concert"] },
            Theme { package: "com.zhiliaoapp.musically", app: "TikTok", category: "Entertainment", color: "#25f4ee", words: ["dance", "challenge", "duet", "trend", "creator", "viral", "clip", "sound"] },
            Theme { package: "com.supercell.clashofclans", app: "Clash of Clans", category: "Games", color: "#f2b705", words: ["battle", "clan", "tower", "troops", "level", "upgrade", "arena", "gems"] },
        ],
    },
    Group {
        words: ["friends", "post", "share"],
        themes: [
            Theme { package: "com.whatsapp", app: "WhatsApp Messenger", category: "Communication", color: "#25d366", words: ["message", "chat", "reply", "voice", "group", "dinner", "tonight", "emoji"] },
            Theme { package: "com.instagram.android", app: "Instagram", category: "Social", color: "#c13584", words: ["selfie", "beach", "sunset", "caption", "story", "followers", "vacation", "reel"] },
            Theme { package: "com.tinder", app: "Tinder", category: "Dating", color: "#fe3c72", words: ["match", "profile", "swipe", "bio", "date", "coffee", "hiking", "dog"] },
            Theme { package: "com.google.android.gm", app: "Gmail", category: "Communication", color: "#ea4335", words: ["inbox", "email", "subject", "meeting", "invoice", "attachment", "schedule", "deadline"] },
        ],
    },
    Group {
        words: ["today", "update", "local"],
        themes: [
            Theme { package: "com.cnn.mobile.android.phone", app: "CNN Breaking US & World News", category: "News & Magazines", color: "#cc0000", words: ["election", "senate", "headline", "policy", "president", "vote", "campaign", "debate"] },
            Theme { package: "com.weather.Weather", app: "The Weather Channel", category: "Weather", color: "#1e90ff", words: ["forecast", "rain", "temperature", "storm", "humidity", "wind", "radar", "sunny"] },
            Theme { package: "com.google.android.apps.maps", app: "Google Maps", category: "Maps & Navigation", color: "#34a853", words: ["route", "traffic", "directions", "highway", "exit", "nearby", "parking", "commute"] },
            Theme { package: "com.myfitnesspal.android", app: "MyFitnessPal", category: "Health & Fitness", color: "#0072ce", words: ["calories", "workout", "steps", "protein", "running", "weight", "meal", "tracker"] },
        ],
    },
    Group {
        words: ["buy", "pay", "money"],
        themes: [
            Theme { package: "com.amazon.mshop.android.shopping", app: "Amazon Shopping", category: "Shopping", color: "#ff9900", words: ["cart", "sneakers", "discount", "shipping", "price", "reviews", "checkout", "deal"] },
            Theme { package: "com.chase.sig.android", app: "Chase Mobile", category: "Finance", color: "#117aca", words: ["balance", "account", "transfer", "deposit", "credit", "statement", "savings", "bill"] },
            Theme { package: "com.draftkings.sportsbook", app: "DraftKings Sportsbook", category: "Sports", color: "#53d337", words: ["betting", "odds", "parlay", "wager", "spread", "moneyline", "touchdown", "sportsbook"] },
            Theme { package: "com.dd.doordash", app: "DoorDash", category: "Food & Drink", color: "#ff3008", words: ["pizza", "burger", "delivery", "restaurant", "menu", "tacos", "sushi", "courier"] },
        ],
    },
];

/// Packages that are deliberately missing from the catalog.
const UNCATALOGED: [&str; 2] = ["org.example.sideloaded", "net.example.beta"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub per_theme: usize,
    pub noise: usize,
    pub participants: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { per_theme: 85, noise: 140, participants: 6, seed: 7 }
    }
}

impl SynthSpec {
    pub fn themes() -> usize {
        GROUPS.len() * 4
    }

    pub fn len(&self) -> usize {
        Self::themes() * self.per_theme + self.noise
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn svg(title: &str, color: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"90\" height=\"160\" viewBox=\"0 0 90 160\"><title>{}</title><rect width=\"90\" height=\"160\" fill=\"{color}\"/></svg>\n",
        escape(title)
    )
}

const SYLLABLES: [&str; 16] = ["ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi", "pe", "sa", "du", "fo", "gri", "bel", "xan", "tor"];

fn filler_word(rng: &mut impl Rng) -> String {
    (0..3).map(|_| *SYLLABLES.choose(rng).expect("syllables")).collect()
}

struct Draft {
    package: Option<&'static str>,
    title: String,
    color: &'static str,
    /// Planted theme index; `-1` for background records.
    theme: i64,
}

fn drafts(spec: &SynthSpec, rng: &mut impl Rng) -> Vec<Draft> {
    let themes: Vec<(&Group, &Theme)> = GROUPS.iter().flat_map(|g| g.themes.iter().map(move |t| (g, t))).collect();
    let mut out = Vec::with_capacity(spec.len());
    for (ti, (group, theme)) in themes.iter().enumerate() {
        for _ in 0..spec.per_theme {
            let mut words: Vec<&str> = theme.words.choose_multiple(rng, 5).copied().collect();
            words.extend(group.words.choose_multiple(rng, 1).copied());
            words.shuffle(rng);
            out.push(Draft {
                package: Some(theme.package),
                title: format!("{} screen showing {}", theme.app, words.join(" ")),
                color: theme.color,
                theme: ti as i64,
            });
        }
    }
    for i in 0..spec.noise {
        let mut words: Vec<String> = (0..5).map(|_| filler_word(rng)).collect();
        let (_, t) = themes.choose(rng).expect("themes");
        words.push(t.words.choose(rng).expect("words").to_string());
        words.shuffle(rng);
        let package = match i % 10 {
            0 => None,
            1 | 2 => Some(UNCATALOGED[i % 2]),
            _ => Some(themes.choose(rng).expect("themes").1.package),
        };
        out.push(Draft {
            package,
            title: format!("screen showing {}", words.join(" ")),
            color: "#777777",
            theme: -1,
        });
    }
    out.shuffle(rng);
    out
}

/// Planted theme per record id (`-1` for background records).
pub type PlantedThemes = Vec<(String, i64)>;

/// Writes the corpus into `dir` and returns the planted themes.
pub fn write_corpus(dir: &Path, spec: &SynthSpec) -> anyhow::Result<PlantedThemes> {
    let mut rng = seeded(spec.seed);
    let images = dir.join("images");
    std::fs::create_dir_all(&images).with_context(|| format!("creating {}", images.display()))?;
    let drafts = drafts(spec, &mut rng);

    let start: DateTime<Utc> = DateTime::from_timestamp(1_709_539_200, 0).expect("valid");
    let mut clocks = vec![start; spec.participants.max(1)];
    let mut records = Vec::with_capacity(drafts.len());
    let mut planted = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.iter().enumerate() {
        let id = format!("s{:05}", i + 1);
        let p = rng.random_range(0..clocks.len());
        clocks[p] += Duration::seconds(rng.random_range(5..90));
        let image_ref = format!("images/{id}.svg");
        std::fs::write(dir.join(&image_ref), svg(&d.title, d.color)).with_context(|| format!("writing {image_ref}"))?;
        records.push(ScreenRecord {
            record_id: id.clone(),
            participant_id: format!("P{:02}", p + 1),
            captured_at: clocks[p],
            app_package: d.package.map(str::to_owned),
            image_ref: Some(image_ref),
        });
        planted.push((id, d.theme));
    }
    write_manifest(&records, dir.join("manifest.csv"))?;

    let mut catalog = String::from("app_package,app_name,app_category\n");
    for t in GROUPS.iter().flat_map(|g| g.themes.iter()) {
        writeln!(catalog, "{},\"{}\",\"{}\"", t.package, t.app, t.category).expect("string write");
    }
    std::fs::write(dir.join("catalog.csv"), catalog)?;
    std::fs::write(dir.join("atlas.toml"), synthetic_config().to_toml())?;
    let mut truth = String::from("record_id,theme\n");
    for (id, t) in &planted {
        writeln!(truth, "{id},{t}").expect("string write");
    }
    std::fs::write(dir.join("planted.csv"), truth)?;
    Ok(planted)
}

/// Defaults with clustering sizes scaled to the synthetic corpus.
pub fn synthetic_config() -> AtlasConfig {
    let mut cfg = AtlasConfig::default();
    cfg.hdbscan.min_cluster_size = 40;
    cfg.hdbscan.min_samples = 10;
    cfg
}
