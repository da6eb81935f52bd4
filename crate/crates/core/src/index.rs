//! Approximate k-NN over any registered scheme, with a brute-force oracle
//! and precision / speed-up measurement.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::band::Tables;
use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use crate::scheme::{divergence_to, Dataset, IndexConfig, Point, Scheme, SchemeRegistry};

/// Result of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryReport {
    /// Sorted by ascending divergence, ties by ascending id.
    pub ids: Vec<usize>,
    pub divergences: Vec<f64>,
    pub candidates_examined: usize,
    pub elapsed: Duration,
}

/// `L` hash tables over a dataset.
#[derive(Debug)]
pub struct AnnIndex {
    config: IndexConfig,
    dataset: Dataset,
    scheme: Box<dyn Scheme>,
    tables: Tables,
}

fn rank(mut scored: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    scored
}

impl AnnIndex {
    /// Builds with the default scheme registry.
    pub fn build(dataset: Dataset, config: IndexConfig) -> Result<Self> {
        Self::build_with(&SchemeRegistry::default(), dataset, config)
    }

    pub fn build_with(registry: &SchemeRegistry, dataset: Dataset, config: IndexConfig) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::DegenerateInput);
        }
        let scheme = registry.create(&config, &dataset)?;
        // Keys are computed in parallel, then inserted in id order so that
        // bucket contents never depend on scheduling.
        let keys = (0..dataset.len())
            .into_par_iter()
            .map(|id| scheme.data_keys(&dataset, id))
            .collect::<Result<Vec<_>>>()?;
        let mut tables = Tables::new(config.tables);
        for (id, k) in keys.into_iter().enumerate() {
            tables.insert(id, k)?;
        }
        Ok(AnnIndex {
            config,
            dataset,
            scheme,
            tables,
        })
    }

    /// Reassembles an index from persisted parts, rebuilding the hash functions from the seed.
    pub(crate) fn from_parts(
        registry: &SchemeRegistry,
        dataset: Dataset,
        config: IndexConfig,
        tables: Tables,
    ) -> Result<Self> {
        config.validate()?;
        let scheme = registry.create(&config, &dataset)?;
        if tables.len() != config.tables {
            return Err(Error::Format(format!(
                "expected {} tables, found {}",
                config.tables,
                tables.len()
            )));
        }
        Ok(AnnIndex {
            config,
            dataset,
            scheme,
            tables,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn scheme(&self) -> &dyn Scheme {
        self.scheme.as_ref()
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    /// Ids sharing at least one bucket with the query.
    pub fn candidates(&self, query: &Point) -> Result<Vec<usize>> {
        let keys = self.scheme.query_keys(query)?;
        Ok(self.tables.probe(&keys).into_iter().collect())
    }

    /// The `k` candidates closest to `query` under the scheme's divergence.
    pub fn query(&self, query: &Point, k: usize) -> Result<QueryReport> {
        if k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        let start = Instant::now();
        let candidates = self.candidates(query)?;
        let target = self.scheme.target();
        let scored = candidates
            .iter()
            .map(|&id| Ok((divergence_to(target, &self.dataset, id, query)?, id)))
            .collect::<Result<Vec<_>>>()?;
        let ranked = rank(scored, k);
        let elapsed = start.elapsed();
        Ok(QueryReport {
            ids: ranked.iter().map(|&(_, id)| id).collect(),
            divergences: ranked.iter().map(|&(d, _)| d).collect(),
            candidates_examined: candidates.len(),
            elapsed,
        })
    }

    pub fn brute_force(&self, query: &Point, k: usize) -> Result<Vec<usize>> {
        brute_force(&self.dataset, query, k, self.scheme.target())
    }
}

/// Exact top-`k` ids by `kind`, ties broken by ascending id.
pub fn brute_force(dataset: &Dataset, query: &Point, k: usize, kind: DivergenceKind) -> Result<Vec<usize>> {
    let scored = (0..dataset.len())
        .map(|id| Ok((divergence_to(kind, dataset, id, query)?, id)))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank(scored, k).into_iter().map(|(_, id)| id).collect())
}

/// `|retrieved ∩ truth| / |truth|`. With both sides returning `k` items this
/// is both precision and recall.
pub fn precision(retrieved: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits = retrieved.iter().filter(|id| truth.contains(id)).count();
    hits as f64 / truth.len() as f64
}

/// One row of benchmark output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub scheme: String,
    pub lambda: Option<f64>,
    #[serde(rename = "K")]
    pub hashes_per_table: usize,
    #[serde(rename = "L")]
    pub tables: usize,
    pub r: f64,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub precision: f64,
    pub speedup: f64,
    pub mean_candidates: f64,
}

impl BenchRecord {
    /// The record with its wall-clock field cleared, for reproducibility checks.
    pub fn without_timing(&self) -> BenchRecord {
        BenchRecord {
            speedup: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub record: BenchRecord,
    pub reports: Vec<QueryReport>,
    pub truths: Vec<Vec<usize>>,
    pub precisions: Vec<f64>,
}

/// Builds an index and compares each query against brute force.
///
/// Speed-up is total brute-force time over total index query time.
pub fn evaluate(dataset: &Dataset, queries: &[Point], config: &IndexConfig) -> Result<Evaluation> {
    let index = AnnIndex::build(dataset.clone(), config.clone())?;
    evaluate_index(&index, queries)
}

pub fn evaluate_index(index: &AnnIndex, queries: &[Point]) -> Result<Evaluation> {
    let config = index.config();
    let k = config.neighbors;
    let mut exact_time = Duration::ZERO;
    let mut lsh_time = Duration::ZERO;
    let mut reports = Vec::with_capacity(queries.len());
    let mut truths = Vec::with_capacity(queries.len());
    let mut precisions = Vec::with_capacity(queries.len());
    for q in queries {
        let start = Instant::now();
        let truth = index.brute_force(q, k)?;
        exact_time += start.elapsed();
        let report = index.query(q, k)?;
        lsh_time += report.elapsed;
        precisions.push(precision(&report.ids, &truth));
        truths.push(truth);
        reports.push(report);
    }
    let nq = queries.len().max(1) as f64;
    let record = BenchRecord {
        scheme: config.scheme.clone(),
        lambda: config
            .lambda
            .filter(|_| index.scheme().target() != DivergenceKind::Mil && config.scheme == "gjs-hellinger"),
        hashes_per_table: config.hashes_per_table,
        tables: config.tables,
        r: config.bucket_width,
        k,
        n: index.len(),
        seed: config.seed,
        precision: precisions.iter().sum::<f64>() / nq,
        speedup: exact_time.as_secs_f64() / lsh_time.as_secs_f64().max(1e-12),
        mean_candidates: reports.iter().map(|r| r.candidates_examined as f64).sum::<f64>() / nq,
    };
    Ok(Evaluation {
        record,
        reports,
        truths,
        precisions,
    })
}

/// Evaluates every `(K, L, seed)` combination, in that nesting order.
pub fn sweep(
    dataset: &Dataset,
    queries: &[Point],
    base: &IndexConfig,
    ks: &[usize],
    ls: &[usize],
    seeds: &[u64],
) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for &k in ks {
        for &l in ls {
            for &seed in seeds {
                let cfg = IndexConfig {
                    hashes_per_table: k,
                    tables: l,
                    seed,
                    ..base.clone()
                };
                out.push(evaluate(dataset, queries, &cfg)?.record);
            }
        }
    }
    Ok(out)
}

pub fn write_records<W: std::io::Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}
