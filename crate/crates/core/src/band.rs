//! (K, L) amplification shared by the L2 and sign-projection families.
//!
//! A band holds `L` compound hashes of `K` functions each, and one bucket
//! table per compound hash. Bucket keys are the exact `K`-tuples of hash
//! values; no secondary hashing is applied, so two points share a bucket
//! iff every one of the `K` functions agrees on them.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// A single locality-sensitive function from real vectors to integers.
pub trait ProjectionHash: Send + Sync {
    fn dim(&self) -> usize;
    fn hash(&self, v: &[f64]) -> i64;
}

pub type BucketKey = Vec<i64>;

/// `L` bucket maps from compound keys to point ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tables {
    maps: Vec<HashMap<BucketKey, Vec<usize>>>,
}

impl Tables {
    pub fn new(l: usize) -> Self {
        Tables {
            maps: vec![HashMap::new(); l],
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Inserts point `id` under one key per table.
    pub fn insert(&mut self, id: usize, keys: Vec<BucketKey>) -> Result<()> {
        if keys.len() != self.maps.len() {
            return Err(Error::DimensionMismatch {
                left: keys.len(),
                right: self.maps.len(),
            });
        }
        for (table, key) in self.maps.iter_mut().zip(keys) {
            table.entry(key).or_default().push(id);
        }
        Ok(())
    }

    /// Union over tables of the bucket each key lands in.
    pub fn probe(&self, keys: &[BucketKey]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for (table, key) in self.maps.iter().zip(keys) {
            if let Some(ids) = table.get(key) {
                out.extend(ids.iter().copied());
            }
        }
        out
    }

    /// Buckets of table `j`, sorted by key.
    pub fn buckets(&self, j: usize) -> Vec<(&BucketKey, &Vec<usize>)> {
        let mut out: Vec<_> = self.maps[j].iter().collect();
        out.sort();
        out
    }

    pub(crate) fn push_bucket(&mut self, j: usize, key: BucketKey, ids: Vec<usize>) {
        self.maps[j].insert(key, ids);
    }
}

/// `L` compound hashes with their bucket tables.
#[derive(Debug, Clone)]
pub struct Band<H> {
    compounds: Vec<Vec<H>>,
    tables: Tables,
}

impl<H: ProjectionHash> Band<H> {
    /// Builds a band from `L` compound hashes of equal width `K`.
    pub fn new(compounds: Vec<Vec<H>>) -> Result<Self> {
        if compounds.is_empty() {
            return Err(Error::param("L", "need at least one table"));
        }
        let k = compounds[0].len();
        if k == 0 || compounds.iter().any(|c| c.len() != k) {
            return Err(Error::param(
                "K",
                "every table needs the same positive number of hashes",
            ));
        }
        let d = compounds[0][0].dim();
        if compounds.iter().flatten().any(|h| h.dim() != d) {
            return Err(Error::param("d", "hash functions disagree on dimension"));
        }
        let tables = Tables::new(compounds.len());
        Ok(Band { compounds, tables })
    }

    pub fn num_tables(&self) -> usize {
        self.compounds.len()
    }

    pub fn hashes_per_table(&self) -> usize {
        self.compounds[0].len()
    }

    pub fn dim(&self) -> usize {
        self.compounds[0][0].dim()
    }

    pub fn compounds(&self) -> &[Vec<H>] {
        &self.compounds
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: v.len(),
                right: self.dim(),
            });
        }
        Ok(())
    }

    /// The compound key `g_j(v)` for every table `j`.
    pub fn keys(&self, v: &[f64]) -> Result<Vec<BucketKey>> {
        self.check_dim(v)?;
        Ok(self
            .compounds
            .iter()
            .map(|g| g.iter().map(|h| h.hash(v)).collect())
            .collect())
    }

    /// Inserts precomputed keys (one per table) for point `id`.
    pub fn insert_keys(&mut self, id: usize, keys: Vec<BucketKey>) -> Result<()> {
        self.tables.insert(id, keys)
    }

    pub fn insert(&mut self, id: usize, v: &[f64]) -> Result<()> {
        let keys = self.keys(v)?;
        self.insert_keys(id, keys)
    }

    pub fn probe_keys(&self, keys: &[BucketKey]) -> BTreeSet<usize> {
        self.tables.probe(keys)
    }

    pub fn probe(&self, v: &[f64]) -> Result<BTreeSet<usize>> {
        Ok(self.probe_keys(&self.keys(v)?))
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }
}
