//! Synthetic corpus generation with planted ground truth.
//!
//! Categories live in a complete rooted tree whose level-1 subtrees are
//! assigned round-robin to co-occurrence clusters. Cluster centers sit
//! on a planar arc, so cross-cluster distances grade smoothly with arc
//! separation; a category's latent vector is its cluster direction plus
//! an orthogonal per-category component of fixed radius, so same-cluster
//! pairs sit at exactly `LATENT_WITHIN_DISTANCE` while cross-cluster
//! pairs inherit their centers' distance. Same-cluster categories are
//! exchangeable, so a question's latent spanning is a function of its
//! cluster composition alone: a mixed question splits its picks across
//! two clusters with at least one on each side, which makes spanning a
//! dense set of mixture values instead of a point mass, and a pure
//! question stays inside one cluster. All spanning picks come from one
//! fixed shallow level so every pair's co-occurrence statistics share
//! one pool; that composition structure is what the trained embedding
//! receives. Question hierarchy is planted separately through a rare
//! deep "anchor" category that resolves in the knowledge tree but stays
//! below any sensible train-time vocabulary cutoff, keeping hierarchy
//! independent of the measured spanning. The planted spanning value `s`
//! is the log of the mean pairwise latent distance, the same scale the
//! measurement pipeline fits.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, QuestionRecord};
use crate::knowledge_tree::{KnowledgeTree, LevelRule, TreeError};

/// Share of questions that get exactly one category; the remainder are
/// multi-category (the planted multi share is therefore 1 minus this).
pub const SINGLE_CATEGORY_SHARE: f64 = 0.34;

/// Cosine distance between any two same-cluster categories, calibrated
/// so the declared within/cross distance ratio matches the ratio a
/// trained embedding settles at for default-sized corpora; that keeps
/// measured spanning close to an affine function of the planted value
/// across both pure and mixed compositions.
pub const LATENT_WITHIN_DISTANCE: f64 = 0.17;

/// Angular extent of the arc holding the cluster centers; the two
/// outermost clusters sit this far apart.
pub const CLUSTER_ARC_RADIANS: f64 = std::f64::consts::FRAC_PI_2;

/// Spanning category count range for mixed questions (an anchor
/// category, when present, comes on top).
pub const MIXED_CATEGORY_RANGE: std::ops::RangeInclusive<usize> = 2..=5;

/// Spanning category count range for pure questions. Pure spanning is
/// measured over same-cluster pairs whose embedding distances carry the
/// most sampling noise, so pure questions get more categories and their
/// per-question mean averages over many more pairs; the top leaves room
/// for an anchor under the validator's per-record category limit.
pub const PURE_CATEGORY_RANGE: std::ops::RangeInclusive<usize> = 5..=7;

/// Tree level that all spanning categories are drawn from (capped at the
/// configured depth), so their co-occurrence statistics share one pool.
pub const SPANNING_LEVEL: u32 = 2;

/// The date bound baked into generated corpora; pass the same value to
/// downstream stages that need a cutoff.
pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date")
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("config is missing the required key \"seed\"")]
    MissingSeed,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("cannot write truth table: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed truth table row {row}: {reason}")]
    MalformedTruthRow { row: usize, reason: String },
}

/// Generator settings; every field can appear as a `key = value` line in
/// a config file, and only `seed` is required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_questions: usize,
    pub branching: u32,
    pub depth: u32,
    pub n_clusters: u32,
    /// Probability that a multi-category question splits its categories
    /// across two clusters instead of staying inside one.
    pub mixing: f64,
    pub beta0: f64,
    pub beta_ks: f64,
    pub beta_ks_sq: f64,
    pub beta_h: f64,
    pub beta_ks_h: f64,
    pub beta_ks_sq_h: f64,
    pub beta_title: f64,
    pub beta_days: f64,
    pub noise_sd: f64,
    pub follower_scale: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Defaults match the reference recovery setup: a two-cluster corpus
    /// whose planted signs a sequential 40-dim, 8-epoch training run
    /// recovers, with an intercept high enough that follower rounding
    /// never truncates the low end of the response.
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig {
            n_questions: 20_000,
            branching: 12,
            depth: 4,
            n_clusters: 2,
            mixing: 0.5,
            beta0: 9.0,
            beta_ks: 1.0,
            beta_ks_sq: -0.5,
            beta_h: -0.05,
            beta_ks_h: 0.02,
            beta_ks_sq_h: -0.12,
            beta_title: -0.003,
            beta_days: 0.1,
            noise_sd: 0.3,
            follower_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: &str| Err(SynthError::InvalidConfig(msg.into()));
        if self.n_questions < 1 {
            return fail("n_questions must be at least 1");
        }
        if self.branching < 2 {
            return fail("branching must be at least 2");
        }
        if self.depth < 1 {
            return fail("depth must be at least 1");
        }
        if self.n_clusters < 2 {
            return fail("n_clusters must be at least 2");
        }
        if self.n_clusters > self.branching {
            return fail("n_clusters must not exceed branching");
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return fail("mixing must lie in [0, 1]");
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return fail("noise_sd must be finite and non-negative");
        }
        if !self.follower_scale.is_finite() || self.follower_scale <= 0.0 {
            return fail("follower_scale must be finite and positive");
        }
        for (name, value) in [
            ("beta0", self.beta0),
            ("beta_ks", self.beta_ks),
            ("beta_ks_sq", self.beta_ks_sq),
            ("beta_h", self.beta_h),
            ("beta_ks_h", self.beta_ks_h),
            ("beta_ks_sq_h", self.beta_ks_sq_h),
            ("beta_title", self.beta_title),
            ("beta_days", self.beta_days),
        ] {
            if !value.is_finite() {
                return fail(&format!("{name} must be finite"));
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment and blank lines
    /// are ignored. Unknown and duplicate keys are errors, as is a
    /// missing `seed`.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut config = SynthConfig::with_seed(0);
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut have_seed = false;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| SynthError::Parse {
                line,
                reason: "expected key = value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), line).is_some() {
                return Err(SynthError::DuplicateKey {
                    line,
                    key: key.into(),
                });
            }
            let bad = |what: &str| SynthError::Parse {
                line,
                reason: format!("cannot parse {value:?} as {what} for {key}"),
            };
            match key {
                "n_questions" => config.n_questions = value.parse().map_err(|_| bad("an integer"))?,
                "branching" => config.branching = value.parse().map_err(|_| bad("an integer"))?,
                "depth" => config.depth = value.parse().map_err(|_| bad("an integer"))?,
                "n_clusters" => config.n_clusters = value.parse().map_err(|_| bad("an integer"))?,
                "mixing" => config.mixing = value.parse().map_err(|_| bad("a number"))?,
                "beta0" => config.beta0 = value.parse().map_err(|_| bad("a number"))?,
                "beta_ks" => config.beta_ks = value.parse().map_err(|_| bad("a number"))?,
                "beta_ks_sq" => config.beta_ks_sq = value.parse().map_err(|_| bad("a number"))?,
                "beta_h" => config.beta_h = value.parse().map_err(|_| bad("a number"))?,
                "beta_ks_h" => config.beta_ks_h = value.parse().map_err(|_| bad("a number"))?,
                "beta_ks_sq_h" => {
                    config.beta_ks_sq_h = value.parse().map_err(|_| bad("a number"))?
                }
                "beta_title" => config.beta_title = value.parse().map_err(|_| bad("a number"))?,
                "beta_days" => config.beta_days = value.parse().map_err(|_| bad("a number"))?,
                "noise_sd" => config.noise_sd = value.parse().map_err(|_| bad("a number"))?,
                "follower_scale" => {
                    config.follower_scale = value.parse().map_err(|_| bad("a number"))?
                }
                "seed" => {
                    config.seed = value.parse().map_err(|_| bad("an integer"))?;
                    have_seed = true;
                }
                _ => {
                    return Err(SynthError::UnknownKey {
                        line,
                        key: key.into(),
                    })
                }
            }
        }
        if !have_seed {
            return Err(SynthError::MissingSeed);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Per-question ground truth recorded by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: String,
    /// Log mean pairwise cosine distance between the latent category
    /// vectors; absent for single-category questions.
    pub s: Option<f64>,
    /// Maximum tree level over the question's categories.
    pub hierarchy: u32,
    /// The planted response value, noise included, before follower
    /// rounding.
    pub latent_appeal: f64,
    pub n_categories: u32,
    pub mixed: bool,
}

/// Name of the child `j` of `parent` ("root" gets `n{j}`, others dot-append).
fn child_name(parent: &str, j: u32) -> String {
    if parent == "root" {
        format!("n{j}")
    } else {
        format!("{parent}.{j}")
    }
}

/// Cluster of a non-root node: its level-1 ancestor's index, modulo the
/// cluster count.
fn cluster_of(name: &str, n_clusters: u32) -> u32 {
    let head = name.split('.').next().unwrap_or(name);
    let index: u32 = head.trim_start_matches('n').parse().expect("generated name");
    index % n_clusters
}

/// Parent-child pairs of the complete tree, in breadth-first order; the
/// same list a `parent,child` edge file would hold.
pub fn tree_edges(config: &SynthConfig) -> Result<Vec<(String, String)>, SynthError> {
    config.validate()?;
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut frontier = vec!["root".to_string()];
    for _ in 0..config.depth {
        let mut next = Vec::with_capacity(frontier.len() * config.branching as usize);
        for parent in &frontier {
            for j in 0..config.branching {
                let child = child_name(parent, j);
                edges.push((parent.clone(), child.clone()));
                next.push(child);
            }
        }
        frontier = next;
    }
    Ok(edges)
}

/// Builds the complete rooted tree with the configured branching and
/// depth. Node names encode their path, so a node's level is one plus
/// its dot count.
pub fn generate_tree(config: &SynthConfig) -> Result<KnowledgeTree, SynthError> {
    let edges = tree_edges(config)?;
    let (tree, _) = KnowledgeTree::from_edges(&edges, "root", LevelRule::Shortest)?;
    Ok(tree)
}

/// Unit cluster centers spaced evenly along a planar arc.
fn cluster_centers(n_clusters: u32) -> Vec<[f64; 2]> {
    let k = n_clusters.max(2) as usize;
    (0..n_clusters as usize)
        .map(|j| {
            let theta = CLUSTER_ARC_RADIANS * j as f64 / (k - 1) as f64;
            [theta.cos(), theta.sin()]
        })
        .collect()
}

/// Cosine distance between the latent vectors of two categories:
/// `LATENT_WITHIN_DISTANCE` for a same-cluster pair, otherwise governed
/// by the angle between their cluster centers.
fn latent_distance(a: u32, b: u32, centers: &[[f64; 2]]) -> f64 {
    if a == b {
        LATENT_WITHIN_DISTANCE
    } else {
        let (ca, cb) = (centers[a as usize], centers[b as usize]);
        1.0 - (1.0 - LATENT_WITHIN_DISTANCE) * (ca[0] * cb[0] + ca[1] * cb[1])
    }
}

/// Mean pairwise latent cosine distance for a set of picked categories.
fn latent_spanning(picks: &[usize], clusters: &[u32], centers: &[[f64; 2]]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..picks.len() {
        for j in (i + 1)..picks.len() {
            total += latent_distance(clusters[picks[i]], clusters[picks[j]], centers);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Appends `count` distinct uniform draws from `pool` via a partial
/// Fisher-Yates shuffle; `count` must not exceed the pool size.
fn sample_distinct(rng: &mut ChaCha8Rng, pool: &[usize], count: usize, out: &mut Vec<usize>) {
    debug_assert!(count <= pool.len());
    let mut scratch: Vec<usize> = pool.to_vec();
    for i in 0..count {
        let j = rng.gen_range(i..scratch.len());
        scratch.swap(i, j);
        out.push(scratch[i]);
    }
}

/// Generates the corpus and its truth table.
///
/// Each question draws a category count and a cluster mode: mixed
/// questions split their picks across two distinct clusters with at
/// least one pick on each side, pure ones keep every pick in one
/// cluster. Hierarchy is set by an optional deep anchor category. The
/// response surface is evaluated on the generator's own latent spanning
/// value; followers encode it on a base-10 log scale.
pub fn generate_corpus(
    config: &SynthConfig,
    tree: &KnowledgeTree,
) -> Result<(Corpus, Vec<TruthRecord>), SynthError> {
    config.validate()?;
    let cutoff = default_cutoff();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Node bookkeeping in name-sorted order so draws are stable.
    let nodes: Vec<(String, u32)> = tree
        .levels_sorted()
        .into_iter()
        .filter_map(|(name, level)| match level {
            Some(level) if level > 0 => Some((name.to_string(), level)),
            _ => None,
        })
        .collect();
    let n_clusters = config.n_clusters as usize;
    let depth = config.depth as usize;

    // members_at[c][l - 1]: indices of cluster-c nodes at exactly level l.
    let mut members_at: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); depth]; n_clusters];
    for (i, (name, level)) in nodes.iter().enumerate() {
        let c = cluster_of(name, config.n_clusters) as usize;
        members_at[c][(*level - 1) as usize].push(i);
    }
    let mut all_at: Vec<Vec<usize>> = vec![Vec::new(); depth];
    for (l, pool) in all_at.iter_mut().enumerate() {
        for cluster in &members_at {
            pool.extend_from_slice(&cluster[l]);
        }
        pool.sort_unstable();
    }

    // Per-category cluster ids and the arc of cluster centers.
    let clusters: Vec<u32> = nodes
        .iter()
        .map(|(name, _)| cluster_of(name, config.n_clusters))
        .collect();
    let centers = cluster_centers(config.n_clusters);

    // All spanning categories come from this one level so no pair's
    // co-occurrence statistics depend on pool size.
    let spanning_level = SPANNING_LEVEL.min(config.depth) as usize;

    let noise = if config.noise_sd > 0.0 {
        Some(Normal::new(0.0, config.noise_sd).expect("valid sd"))
    } else {
        None
    };

    let id_width = (config.n_questions.max(2) - 1).to_string().len();
    let mut records = Vec::with_capacity(config.n_questions);
    let mut truth = Vec::with_capacity(config.n_questions);

    for q in 0..config.n_questions {
        let single = rng.gen::<f64>() < SINGLE_CATEGORY_SHARE;
        let mixed = !single && rng.gen::<f64>() < config.mixing;
        let want = if single {
            1
        } else if mixed {
            rng.gen_range(MIXED_CATEGORY_RANGE)
        } else {
            rng.gen_range(PURE_CATEGORY_RANGE)
        };

        // Mixed questions split their picks across two distinct
        // clusters, at least one per side; pure ones are confined to
        // their own cluster so that mixing 0 is exact.
        let mut picks: Vec<usize> = Vec::with_capacity(want);
        let home = if mixed {
            let a = rng.gen_range(0..n_clusters);
            let b = (a + rng.gen_range(1..n_clusters)) % n_clusters;
            let (pool_a, pool_b) = (
                &members_at[a][spanning_level - 1],
                &members_at[b][spanning_level - 1],
            );
            let want = want.min(pool_a.len() + pool_b.len());
            let low = 1.max(want.saturating_sub(pool_b.len()));
            let high = (want - 1).min(pool_a.len());
            let n_a = if low < high { rng.gen_range(low..=high) } else { low };
            sample_distinct(&mut rng, pool_a, n_a, &mut picks);
            sample_distinct(&mut rng, pool_b, want - n_a, &mut picks);
            None
        } else {
            let c = rng.gen_range(0..n_clusters);
            let pool = &members_at[c][spanning_level - 1];
            sample_distinct(&mut rng, pool, want.min(pool.len()), &mut picks);
            Some(c)
        };
        assert!(!picks.is_empty(), "every (cluster, level) pool is nonempty");

        let mut categories: Vec<String> =
            picks.iter().map(|&i| nodes[i].0.clone()).collect();
        let s = if picks.len() > 1 {
            Some(latent_spanning(&picks, &clusters, &centers).ln())
        } else {
            None
        };

        // Hierarchy comes from an optional anchor category at a deeper
        // level; each anchor name recurs so rarely that it falls below
        // any sensible vocabulary cutoff, leaving measured spanning
        // untouched while still resolving in the knowledge tree.
        let deep_levels = (config.depth as usize).saturating_sub(spanning_level);
        let anchor_level = if picks.len() > 1 && deep_levels > 0 {
            match rng.gen_range(0..=deep_levels) {
                0 => None,
                i => Some(spanning_level + i),
            }
        } else {
            None
        };
        if let Some(level) = anchor_level {
            let anchor_pool: &[usize] = match home {
                Some(c) => &members_at[c][level - 1],
                None => &all_at[level - 1],
            };
            let anchor = anchor_pool[rng.gen_range(0..anchor_pool.len())];
            categories.push(nodes[anchor].0.clone());
        }
        let hierarchy = anchor_level.unwrap_or(spanning_level) as u32;

        let title_length: u32 = rng.gen_range(5..=80);
        let days_before_cutoff: u64 = rng.gen_range(1..=365);
        let created = cutoff
            .checked_sub_days(Days::new(days_before_cutoff))
            .expect("date in range");
        let lasting_days_log = (1.0 + days_before_cutoff as f64).ln();

        let h = hierarchy as f64;
        let spanning_terms = s.map_or(0.0, |s| {
            config.beta_ks * s
                + config.beta_ks_sq * s * s
                + config.beta_ks_h * s * h
                + config.beta_ks_sq_h * s * s * h
        });
        let mut latent = config.beta0
            + spanning_terms
            + config.beta_h * h
            + config.beta_title * title_length as f64
            + config.beta_days * lasting_days_log;
        if let Some(noise) = &noise {
            latent += noise.sample(&mut rng);
        }

        let raw = (config.follower_scale * 10f64.powf(latent)).round();
        let followers = if raw > 1.0 { raw as u64 - 1 } else { 0 };

        let id = format!("q{q:0id_width$}");
        truth.push(TruthRecord {
            id: id.clone(),
            s,
            hierarchy,
            latent_appeal: latent,
            n_categories: categories.len() as u32,
            mixed,
        });
        records.push(QuestionRecord {
            id,
            title_length,
            categories,
            followers,
            answers: None,
            created,
        });
    }

    let corpus = Corpus::new(records, cutoff)?;
    Ok((corpus, truth))
}

const TRUTH_HEADER: [&str; 6] = ["id", "s", "hierarchy", "latent_appeal", "n_categories", "mixed"];

/// Writes the truth table as CSV; `s` is empty for single-category rows.
pub fn write_truth_csv(records: &[TruthRecord], writer: impl Write) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRUTH_HEADER)?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.s.map(|v| v.to_string()).unwrap_or_default(),
            r.hierarchy.to_string(),
            r.latent_appeal.to_string(),
            r.n_categories.to_string(),
            r.mixed.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a truth table written by [`write_truth_csv`].
pub fn read_truth_csv(reader: impl std::io::Read) -> Result<Vec<TruthRecord>, SynthError> {
    let mut r = csv::Reader::from_reader(reader);
    {
        let headers = r.headers()?;
        if headers != &csv::StringRecord::from(TRUTH_HEADER.to_vec()) {
            return Err(SynthError::MalformedTruthRow {
                row: 0,
                reason: format!("unexpected header {headers:?}"),
            });
        }
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let bad = |reason: String| SynthError::MalformedTruthRow { row: i + 1, reason };
        if row.len() != TRUTH_HEADER.len() {
            return Err(bad(format!("expected {} fields", TRUTH_HEADER.len())));
        }
        let s = if row[1].is_empty() {
            None
        } else {
            Some(row[1].parse().map_err(|e| bad(format!("s: {e}")))?)
        };
        out.push(TruthRecord {
            id: row[0].to_string(),
            s,
            hierarchy: row[2].parse().map_err(|e| bad(format!("hierarchy: {e}")))?,
            latent_appeal: row[3]
                .parse()
                .map_err(|e| bad(format!("latent_appeal: {e}")))?,
            n_categories: row[4]
                .parse()
                .map_err(|e| bad(format!("n_categories: {e}")))?,
            mixed: row[5].parse().map_err(|e| bad(format!("mixed: {e}")))?,
        });
    }
    Ok(out)
}
