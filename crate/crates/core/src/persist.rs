//! Binary index files.
//!
//! Layout (little endian): magic, format version, config, dataset, then each
//! table's buckets sorted by key. Hash functions are not stored; they are
//! redrawn from the seed on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::band::Tables;
use crate::error::{Error, Result};
use crate::index::AnnIndex;
use crate::prob::{JointDist, ProbVec};
use crate::scheme::{Dataset, IndexConfig, SchemeRegistry};
use crate::srp::Direction;

const MAGIC: &[u8; 8] = b"DIVLSHIX";
pub const FORMAT_VERSION: u32 = 1;

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u64::<LE>(s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn put_opt<W: Write>(w: &mut W, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) => {
            w.write_u8(1)?;
            w.write_f64::<LE>(x)?;
        }
        None => w.write_u8(0)?,
    }
    Ok(())
}

fn put_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    w.write_u64::<LE>(v.len() as u64)?;
    for &x in v {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

// Length prefixes come from untrusted input; cap preallocation.
fn get_len<R: Read>(r: &mut R) -> Result<usize> {
    let n = r.read_u64::<LE>()?;
    usize::try_from(n).map_err(|_| Error::Format(format!("length {n} out of range")))
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let n = get_len(r)?;
    let mut buf = Vec::with_capacity(n.min(1 << 16));
    r.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(Error::Format("truncated string".into()));
    }
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

fn get_opt<R: Read>(r: &mut R) -> Result<Option<f64>> {
    match r.read_u8()? {
        0 => Ok(None),
        1 => Ok(Some(r.read_f64::<LE>()?)),
        t => Err(Error::Format(format!("bad option tag {t}"))),
    }
}

fn get_f64s<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = get_len(r)?;
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        out.push(r.read_f64::<LE>()?);
    }
    Ok(out)
}

fn get_strs<R: Read>(r: &mut R) -> Result<Vec<String>> {
    let n = get_len(r)?;
    (0..n).map(|_| get_str(r)).collect()
}

fn put_strs<W: Write>(w: &mut W, v: &[String]) -> Result<()> {
    w.write_u64::<LE>(v.len() as u64)?;
    v.iter().try_for_each(|s| put_str(w, s))
}

fn write_config<W: Write>(w: &mut W, c: &IndexConfig) -> Result<()> {
    put_str(w, &c.scheme)?;
    put_opt(w, c.lambda)?;
    w.write_u64::<LE>(c.hashes_per_table as u64)?;
    w.write_u64::<LE>(c.tables as u64)?;
    w.write_f64::<LE>(c.bucket_width)?;
    w.write_f64::<LE>(c.epsilon)?;
    put_opt(w, c.bound)?;
    w.write_u8(match c.direction {
        Direction::MaxInnerProduct => 0,
        Direction::MinDivergence => 1,
    })?;
    w.write_u64::<LE>(c.seed)?;
    w.write_u64::<LE>(c.neighbors as u64)?;
    Ok(())
}

fn read_config<R: Read>(r: &mut R) -> Result<IndexConfig> {
    Ok(IndexConfig {
        scheme: get_str(r)?,
        lambda: get_opt(r)?,
        hashes_per_table: get_len(r)?,
        tables: get_len(r)?,
        bucket_width: r.read_f64::<LE>()?,
        epsilon: r.read_f64::<LE>()?,
        bound: get_opt(r)?,
        direction: match r.read_u8()? {
            0 => Direction::MaxInnerProduct,
            1 => Direction::MinDivergence,
            t => return Err(Error::Format(format!("bad direction tag {t}"))),
        },
        seed: r.read_u64::<LE>()?,
        neighbors: get_len(r)?,
    })
}

fn write_dataset<W: Write>(w: &mut W, d: &Dataset) -> Result<()> {
    match d {
        Dataset::Vectors(points) => {
            w.write_u8(0)?;
            w.write_u64::<LE>(points.len() as u64)?;
            for p in points {
                put_f64s(w, p.values())?;
            }
        }
        Dataset::Joint(j) => {
            w.write_u8(1)?;
            put_strs(w, j.labels())?;
            put_strs(w, j.features())?;
            put_f64s(w, j.probs())?;
        }
    }
    Ok(())
}

fn read_dataset<R: Read>(r: &mut R) -> Result<Dataset> {
    match r.read_u8()? {
        0 => {
            let n = get_len(r)?;
            let points = (0..n).map(|_| ProbVec::new(get_f64s(r)?)).collect::<Result<Vec<_>>>()?;
            Ok(Dataset::Vectors(points))
        }
        1 => {
            let labels = get_strs(r)?;
            let features = get_strs(r)?;
            let probs = get_f64s(r)?;
            Ok(Dataset::Joint(JointDist::new(labels, features, probs)?))
        }
        t => Err(Error::Format(format!("bad dataset tag {t}"))),
    }
}

/// Serializes `index`; equal indexes produce identical bytes.
pub fn write_index<W: Write>(mut w: W, index: &AnnIndex) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(FORMAT_VERSION)?;
    write_config(&mut w, index.config())?;
    put_opt(&mut w, index.scheme().resolved_bound())?;
    write_dataset(&mut w, index.dataset())?;
    let tables = index.tables();
    w.write_u64::<LE>(tables.len() as u64)?;
    for j in 0..tables.len() {
        let buckets = tables.buckets(j);
        w.write_u64::<LE>(buckets.len() as u64)?;
        for (key, ids) in buckets {
            w.write_u64::<LE>(key.len() as u64)?;
            for &h in key {
                w.write_i64::<LE>(h)?;
            }
            w.write_u64::<LE>(ids.len() as u64)?;
            for &id in ids {
                w.write_u64::<LE>(id as u64)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_index<R: Read>(r: R) -> Result<AnnIndex> {
    read_index_with(&SchemeRegistry::default(), r)
}

pub fn read_index_with<R: Read>(registry: &SchemeRegistry, mut r: R) -> Result<AnnIndex> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an index file".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let config = read_config(&mut r)?;
    let stored_bound = get_opt(&mut r)?;
    let dataset = read_dataset(&mut r)?;
    let n = dataset.len();
    let l = get_len(&mut r)?;
    let mut tables = Tables::new(l.min(1 << 16));
    if tables.len() != l {
        return Err(Error::Format(format!("implausible table count {l}")));
    }
    for j in 0..l {
        let buckets = get_len(&mut r)?;
        for _ in 0..buckets {
            let klen = get_len(&mut r)?;
            let key = (0..klen)
                .map(|_| r.read_i64::<LE>())
                .collect::<std::io::Result<Vec<_>>>()?;
            let count = get_len(&mut r)?;
            let ids = (0..count)
                .map(|_| {
                    let id = get_len(&mut r)?;
                    if id >= n {
                        return Err(Error::Format(format!("bucket id {id} out of range")));
                    }
                    Ok(id)
                })
                .collect::<Result<Vec<_>>>()?;
            tables.push_bucket(j, key, ids);
        }
    }
    let index = AnnIndex::from_parts(registry, dataset, config, tables)?;
    if index.scheme().resolved_bound().map(f64::to_bits) != stored_bound.map(f64::to_bits) {
        return Err(Error::Format("rebuilt scheme disagrees with stored bound".into()));
    }
    Ok(index)
}

pub fn save(path: impl AsRef<Path>, index: &AnnIndex) -> Result<()> {
    write_index(BufWriter::new(File::create(path)?), index)
}

pub fn load(path: impl AsRef<Path>) -> Result<AnnIndex> {
    read_index(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{dirichlet_dataset, dirichlet_joint};
    use crate::scheme::Point;

    fn roundtrip(index: &AnnIndex) -> AnnIndex {
        let mut buf = Vec::new();
        write_index(&mut buf, index).unwrap();
        let back = read_index(&buf[..]).unwrap();
        let mut again = Vec::new();
        write_index(&mut again, &back).unwrap();
        assert_eq!(buf, again);
        back
    }

    #[test]
    fn vectors_roundtrip_and_query_identically() {
        let data = Dataset::Vectors(dirichlet_dataset(1.0, 6, 120, 5).unwrap());
        let index = AnnIndex::build(data, IndexConfig::default()).unwrap();
        let back = roundtrip(&index);
        assert_eq!(back.tables(), index.tables());
        for q in dirichlet_dataset(1.0, 6, 5, 50).unwrap() {
            let q = Point::Vector(q);
            assert_eq!(back.query(&q, 10).unwrap().ids, index.query(&q, 10).unwrap().ids);
        }
    }

    #[test]
    fn joint_roundtrip() {
        let data = Dataset::Joint(dirichlet_joint(1.0, 2, 12, 1).unwrap());
        let cfg = IndexConfig {
            scheme: "krein-mil".into(),
            lambda: None,
            epsilon: 0.3,
            tables: 4,
            ..IndexConfig::default()
        };
        let index = AnnIndex::build(data, cfg).unwrap();
        let back = roundtrip(&index);
        assert_eq!(back.scheme().resolved_bound(), index.scheme().resolved_bound());
        let q = index.dataset().point(2);
        assert_eq!(back.query(&q, 3).unwrap().ids, index.query(&q, 3).unwrap().ids);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_index(&b"NOTANIDX...."[..]), Err(Error::Format(_))));
        let data = Dataset::Vectors(dirichlet_dataset(1.0, 3, 10, 5).unwrap());
        let index = AnnIndex::build(
            data,
            IndexConfig {
                tables: 2,
                ..IndexConfig::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_index(&mut buf, &index).unwrap();
        buf[8] = 99;
        assert!(matches!(read_index(&buf[..]), Err(Error::Format(_))));
        buf[8] = 1;
        buf.truncate(buf.len() - 3);
        assert!(read_index(&buf[..]).is_err());
    }
}
