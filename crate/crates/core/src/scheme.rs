//! Index schemes and the registry that selects them by name.
//!
//! A scheme turns dataset points and queries into one bucket key per table
//! and names the divergence its candidates are re-ranked by. Three schemes
//! are registered by default:
//!
//! | name                   | points             | hash                          | target |
//! |------------------------|--------------------|-------------------------------|--------|
//! | `gjs-hellinger`        | distributions      | L2 hash of `sqrt(P)`          | GJS_λ  |
//! | `triangular-hellinger` | distributions      | L2 hash of `sqrt(P)`          | Δ      |
//! | `krein-mil`            | joint-table columns| sign bits of Kreĭn transforms | MIL    |

use std::collections::BTreeMap;
use std::fmt;

use crate::band::{Band, BucketKey};
use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use crate::krein::{krein_transform, select_params, EmbeddingCache, Side};
use crate::lsh_l2::{build_band, L2Hash, DEFAULT_BUCKET_WIDTH};
use crate::prob::{sqrt_embed, FeatureColumn, JointDist, ProbVec};
use crate::srp::{Direction, SrpBand};

/// Data an index is built over.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    /// One distribution per point.
    Vectors(Vec<ProbVec>),
    /// Points are the feature values (columns) of a joint table.
    Joint(JointDist),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Vectors(v) => v.len(),
            Dataset::Joint(j) => j.num_features(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, id: usize) -> Point {
        match self {
            Dataset::Vectors(v) => Point::Vector(v[id].clone()),
            Dataset::Joint(j) => Point::Column(j.column(id)),
        }
    }
}

/// A query, or a point taken from a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Vector(ProbVec),
    Column(FeatureColumn),
}

/// Evaluates `kind` between dataset point `id` and `query`.
///
/// Asymmetric divergences are taken as `D(query || point)`.
pub fn divergence_to(kind: DivergenceKind, dataset: &Dataset, id: usize, query: &Point) -> Result<f64> {
    match (dataset, query, kind) {
        (Dataset::Joint(j), Point::Column(q), DivergenceKind::Mil) => crate::divergence::mil_columns(&j.column(id), q),
        (Dataset::Vectors(v), Point::Vector(q), k) if k != DivergenceKind::Mil => k.evaluate(q, &v[id]),
        _ => Err(Error::SchemeMismatch {
            scheme: kind.to_string(),
            reason: "divergence, dataset and query kinds do not match".into(),
        }),
    }
}

/// Settings for building an index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexConfig {
    pub scheme: String,
    /// GJS weight; only for `gjs-hellinger`.
    pub lambda: Option<f64>,
    /// Hashes per compound key (K).
    pub hashes_per_table: usize,
    /// Number of tables (L).
    pub tables: usize,
    /// Bucket width for the L2 schemes.
    pub bucket_width: f64,
    /// MIL approximation budget for `krein-mil`.
    pub epsilon: f64,
    /// Padding bound M for `krein-mil`; dataset maximum when `None`.
    pub bound: Option<f64>,
    pub direction: Direction,
    pub seed: u64,
    /// Neighbors returned per query.
    pub neighbors: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            scheme: "gjs-hellinger".into(),
            lambda: Some(0.5),
            hashes_per_table: 3,
            tables: 20,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            epsilon: 0.1,
            bound: None,
            direction: Direction::MinDivergence,
            seed: 0,
            neighbors: 20,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hashes_per_table == 0 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if self.tables == 0 {
            return Err(Error::param("L", "must be at least 1"));
        }
        if self.neighbors == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        if !(self.bucket_width > 0.0 && self.bucket_width.is_finite()) {
            return Err(Error::param(
                "r",
                format!("must be positive, got {}", self.bucket_width),
            ));
        }
        if let Some(l) = self.lambda {
            crate::bounds::check_lambda(l)?;
        }
        Ok(())
    }
}

/// One interchangeable hashing strategy.
pub trait Scheme: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Divergence used to re-rank candidates and to define true neighbors.
    fn target(&self) -> DivergenceKind;

    /// One bucket key per table for dataset point `id`.
    fn data_keys(&self, dataset: &Dataset, id: usize) -> Result<Vec<BucketKey>>;

    /// One bucket key per table for a query.
    fn query_keys(&self, query: &Point) -> Result<Vec<BucketKey>>;

    /// Scheme-specific scalar fixed at build time (the padding bound for
    /// Kreĭn schemes), persisted so a reloaded index hashes identically.
    fn resolved_bound(&self) -> Option<f64> {
        None
    }
}

/// Squared-Hellinger proxy: L2 hashing of `sqrt(P)`, re-ranked by `target`.
#[derive(Debug)]
pub struct HellingerScheme {
    name: &'static str,
    target: DivergenceKind,
    band: Band<L2Hash>,
}

impl HellingerScheme {
    fn new(name: &'static str, target: DivergenceKind, cfg: &IndexConfig, data: &Dataset) -> Result<Self> {
        let Dataset::Vectors(points) = data else {
            return Err(Error::SchemeMismatch {
                scheme: name.into(),
                reason: "needs a dataset of distributions".into(),
            });
        };
        let d = points.first().map(ProbVec::dim).ok_or(Error::DegenerateInput)?;
        if let Some(bad) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                left: bad.dim(),
                right: d,
            });
        }
        let band = build_band(d, cfg.hashes_per_table, cfg.tables, cfg.bucket_width, cfg.seed)?;
        Ok(HellingerScheme { name, target, band })
    }

    fn keys(&self, p: &ProbVec) -> Result<Vec<BucketKey>> {
        self.band.keys(sqrt_embed(p).values())
    }
}

impl Scheme for HellingerScheme {
    fn name(&self) -> &'static str {
        self.name
    }

    fn target(&self) -> DivergenceKind {
        self.target
    }

    fn data_keys(&self, dataset: &Dataset, id: usize) -> Result<Vec<BucketKey>> {
        match dataset {
            Dataset::Vectors(v) => self.keys(&v[id]),
            Dataset::Joint(_) => Err(Error::SchemeMismatch {
                scheme: self.name.into(),
                reason: "needs a dataset of distributions".into(),
            }),
        }
    }

    fn query_keys(&self, query: &Point) -> Result<Vec<BucketKey>> {
        match query {
            Point::Vector(p) => self.keys(p),
            Point::Column(_) => Err(Error::SchemeMismatch {
                scheme: self.name.into(),
                reason: "queries must be distributions".into(),
            }),
        }
    }
}

/// Kreĭn-LSH for MIL: data columns hash `T1(x, M)`, queries hash `T2(y, M)`
/// (negated in min-divergence mode) under sign random projections.
#[derive(Debug)]
pub struct KreinScheme {
    cache: EmbeddingCache,
    bound: f64,
    band: SrpBand,
}

impl KreinScheme {
    pub const NAME: &'static str = "krein-mil";

    fn new(cfg: &IndexConfig, data: &Dataset) -> Result<Self> {
        let Dataset::Joint(joint) = data else {
            return Err(Error::SchemeMismatch {
                scheme: Self::NAME.into(),
                reason: "needs a joint distribution (--joint)".into(),
            });
        };
        let params = select_params(cfg.epsilon, joint.num_labels())?;
        let dim = params.embedding_dim() + 2;
        let cache = EmbeddingCache::new(params, joint.columns());
        let max = cache.max_norm_sq()?;
        let bound = match cfg.bound {
            Some(m) if m < max => return Err(Error::NormBound { bound: m, norm_sq: max }),
            Some(m) => m,
            None => max,
        };
        let band = SrpBand::build(dim, cfg.hashes_per_table, cfg.tables, cfg.seed, cfg.direction)?;
        Ok(KreinScheme { cache, bound, band })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl Scheme for KreinScheme {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn target(&self) -> DivergenceKind {
        DivergenceKind::Mil
    }

    fn data_keys(&self, _dataset: &Dataset, id: usize) -> Result<Vec<BucketKey>> {
        let left = krein_transform(self.cache.get(id)?, self.bound, Side::Left)?;
        self.band.data_keys(&left)
    }

    fn query_keys(&self, query: &Point) -> Result<Vec<BucketKey>> {
        let Point::Column(col) = query else {
            return Err(Error::SchemeMismatch {
                scheme: Self::NAME.into(),
                reason: "queries must be joint-table columns".into(),
            });
        };
        let emb = crate::krein::eta_pair(col, self.cache.params())?;
        let right = krein_transform(&emb, self.bound, Side::Right)?;
        self.band.query_keys(&right)
    }

    fn resolved_bound(&self) -> Option<f64> {
        Some(self.bound)
    }
}

pub type SchemeFactory = fn(&IndexConfig, &Dataset) -> Result<Box<dyn Scheme>>;

struct Entry {
    description: &'static str,
    factory: SchemeFactory,
}

/// Schemes available by name.
pub struct SchemeRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        SchemeRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, description: &'static str, factory: SchemeFactory) {
        self.entries.insert(name, Entry { description, factory });
    }

    /// `(name, description)` pairs in name order.
    pub fn list(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|(n, e)| (*n, e.description)).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn create(&self, cfg: &IndexConfig, data: &Dataset) -> Result<Box<dyn Scheme>> {
        let entry = self
            .entries
            .get(cfg.scheme.as_str())
            .ok_or_else(|| Error::UnknownScheme(cfg.scheme.clone()))?;
        (entry.factory)(cfg, data)
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        let mut r = SchemeRegistry::empty();
        r.register(
            "gjs-hellinger",
            "L2 hashing of sqrt(P); neighbors by generalized Jensen-Shannon divergence",
            |cfg, data| {
                let lambda = cfg
                    .lambda
                    .ok_or_else(|| Error::param("lambda", "gjs-hellinger needs --lambda"))?;
                crate::bounds::check_lambda(lambda)?;
                Ok(Box::new(HellingerScheme::new(
                    "gjs-hellinger",
                    DivergenceKind::Gjs(lambda),
                    cfg,
                    data,
                )?))
            },
        );
        r.register(
            "triangular-hellinger",
            "L2 hashing of sqrt(P); neighbors by triangular discrimination",
            |cfg, data| {
                Ok(Box::new(HellingerScheme::new(
                    "triangular-hellinger",
                    DivergenceKind::TriangularDiscrimination,
                    cfg,
                    data,
                )?))
            },
        );
        r.register(
            KreinScheme::NAME,
            "sign projections of Krein transforms; neighbors by mutual information loss",
            |cfg, data| Ok(Box::new(KreinScheme::new(cfg, data)?)),
        );
        r
    }
}

impl fmt::Debug for SchemeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}
