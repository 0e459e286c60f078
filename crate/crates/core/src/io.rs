//! File formats: set lines, vector and matrix CSV, the FNX1 index file and
//! the labeling CSV.
//!
//! FNX1 layout (little-endian): magic `FNX1`, version `u32`, metric tag `u8`,
//! epsilon `f64`, MinPts `u64`, n `u64`, 32-byte dataset fingerprint, then n
//! records `(object_id u64, C f64, R f64, N u64, F u64)` in ordering order.
//! Infinite distances are stored as IEEE positive infinity.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::baseline::{ClusterOrdering, Flavor, IndexEntry};
use crate::error::{Error, Result};
use crate::finex::FinexIndex;
use crate::model::{deduplicate, Dataset, GeneratingParams, Labeling, Metric, ObjectId, RecordMap, TokenSet};

pub const MAGIC: [u8; 4] = *b"FNX1";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 8 + 8 + 8 + 32;
const RECORD_LEN: usize = 8 * 5;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Parses one set per line (whitespace-separated non-negative integers) and
/// deduplicates. Objects are numbered by first occurrence.
pub fn read_sets<R: BufRead>(reader: R) -> Result<(Vec<TokenSet>, RecordMap)> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let tokens = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid token {t:?}"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        if tokens.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty record".into(),
            });
        }
        records.push(tokens);
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    deduplicate(records)
}

pub fn load_sets(path: impl AsRef<Path>) -> Result<(Vec<TokenSet>, RecordMap)> {
    let path = path.as_ref();
    read_sets(BufReader::new(open(path)?))
}

fn parse_rows<R: Read>(reader: R, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("non-numeric cell {cell:?} in column {}", col + 1),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-finite cell {cell:?} in column {}", col + 1),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

/// Reads a CSV of floats, one vector per row.
pub fn read_vectors<R: Read>(reader: R, standardize: bool, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let rows = parse_rows(reader, has_header)?;
    if standardize {
        crate::model::standardize(&rows)
    } else {
        Ok(rows)
    }
}

pub fn load_vectors(path: impl AsRef<Path>, standardize: bool, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    read_vectors(open(path)?, standardize, has_header)
}

/// Reads a square CSV distance matrix (no header).
pub fn read_matrix<R: Read>(reader: R) -> Result<Dataset> {
    let rows = parse_rows(reader, false)?;
    let n = rows.len();
    if rows[0].len() != n {
        return Err(Error::InvalidMatrix(format!(
            "{n} rows but {} columns",
            rows[0].len()
        )));
    }
    Dataset::from_matrix(n, rows.into_iter().flatten().collect())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_matrix(open(path)?)
}

pub fn write_index<W: Write>(mut w: W, index: &FinexIndex) -> std::io::Result<()> {
    let params = index.params();
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[index.metric().tag()])?;
    w.write_all(&params.epsilon.to_le_bytes())?;
    w.write_all(&params.min_pts.to_le_bytes())?;
    w.write_all(&(index.len() as u64).to_le_bytes())?;
    w.write_all(index.fingerprint())?;
    for e in index.ordering().entries() {
        w.write_all(&(e.object.0 as u64).to_le_bytes())?;
        w.write_all(&e.core_distance.to_le_bytes())?;
        w.write_all(&e.reachability.to_le_bytes())?;
        w.write_all(&e.neighborhood_size.to_le_bytes())?;
        w.write_all(&(e.finder.0 as u64).to_le_bytes())?;
    }
    w.flush()
}

pub fn index_bytes(index: &FinexIndex) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * index.len());
    write_index(&mut out, index).expect("writing to memory cannot fail");
    out
}

pub fn save_index(path: impl AsRef<Path>, index: &FinexIndex) -> Result<()> {
    let path = path.as_ref();
    write_index(create(path)?, index).map_err(|e| Error::io(path, e))
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.0.len() < N {
            return Err(Error::Truncated);
        }
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn id(&mut self, n: u64) -> Result<ObjectId> {
        let v = self.u64()?;
        if v >= n {
            return Err(Error::CorruptIndex(format!("object id {v} out of range")));
        }
        Ok(ObjectId(v as u32))
    }
}

/// Decodes an FNX1 image.
pub fn parse_index(bytes: &[u8]) -> Result<FinexIndex> {
    let mut c = Cursor(bytes);
    let magic = c.take::<4>()?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = u32::from_le_bytes(c.take::<4>()?);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let [tag] = c.take::<1>()?;
    let metric =
        Metric::from_tag(tag).ok_or_else(|| Error::CorruptIndex(format!("unknown metric tag {tag}")))?;
    let epsilon = c.f64()?;
    let min_pts = c.u64()?;
    let params = GeneratingParams::new(epsilon, min_pts)
        .map_err(|e| Error::CorruptIndex(format!("generating pair: {e}")))?;
    let n = c.u64()?;
    if n > u32::MAX as u64 {
        return Err(Error::CorruptIndex(format!("object count {n} too large")));
    }
    let fingerprint = c.take::<32>()?;
    if (c.0.len() as u64) < n * RECORD_LEN as u64 {
        return Err(Error::Truncated);
    }
    let mut entries = Vec::with_capacity(n as usize);
    for slot in 0..n {
        let object = c.id(n)?;
        let core_distance = c.f64()?;
        let reachability = c.f64()?;
        let neighborhood_size = c.u64()?;
        let finder = c.id(n)?;
        entries.push(IndexEntry {
            object,
            position: slot + 1,
            core_distance,
            reachability,
            neighborhood_size,
            finder,
        });
    }
    if !c.0.is_empty() {
        return Err(Error::CorruptIndex(format!("{} trailing bytes", c.0.len())));
    }
    let ordering = ClusterOrdering::new(entries, params, Flavor::Finex)?;
    FinexIndex::from_parts(ordering, metric, fingerprint)
}

/// Loads an index; when `dataset` is given, its fingerprint must match.
pub fn load_index(path: impl AsRef<Path>, dataset: Option<&Dataset>) -> Result<FinexIndex> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let index = parse_index(&bytes)?;
    if let Some(data) = dataset {
        index.check_dataset(data)?;
    }
    Ok(index)
}

/// Writes `object_id,cluster_id,is_core` with one row per raw record,
/// noise as cluster `-1`.
pub fn write_labeling_to<W: Write>(w: W, labeling: &Labeling, records: &RecordMap) -> Result<()> {
    if let Some(&bad) = records.as_slice().iter().find(|o| o.index() >= labeling.len()) {
        return Err(Error::IdOutOfRange {
            id: bad.index(),
            n: labeling.len(),
        });
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["object_id", "cluster_id", "is_core"])?;
    for (record, &o) in records.as_slice().iter().enumerate() {
        let cluster = labeling.label(o).map_or(-1, i64::from);
        out.write_record([
            record.to_string(),
            cluster.to_string(),
            labeling.is_core(o).to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_labeling(path: impl AsRef<Path>, labeling: &Labeling, records: &RecordMap) -> Result<()> {
    let path = path.as_ref();
    write_labeling_to(create(path)?, labeling, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finex::finex_build;
    use crate::model::fixture;
    use crate::neighbors::{Backend, NeighborProvider};
    use std::sync::Arc;

    fn fixture_index() -> FinexIndex {
        let p = NeighborProvider::build(Arc::new(fixture::dataset()), 1.0, Backend::ExplicitMatrix).unwrap();
        finex_build(&p, 1.0, 4).unwrap()
    }

    #[test]
    fn sets_are_deduplicated() {
        let (sets, map) = read_sets("1 2\n2 1\n3\n".as_bytes()).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!((sets[0].tokens(), sets[0].count()), (&[1, 2][..], 2));
        assert_eq!((sets[1].tokens(), sets[1].count()), (&[3][..], 1));
        assert_eq!(map.as_slice(), &[ObjectId(0), ObjectId(0), ObjectId(1)]);
    }

    #[test]
    fn set_parse_errors_carry_line_numbers() {
        assert!(matches!(
            read_sets("a b\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_sets("1\n\n2\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_sets("1\n-4\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(read_sets("".as_bytes()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn many_records_conserve_counts() {
        let text: String = (0..10_000).map(|i| format!("{} {}\n", i % 37, i % 11)).collect();
        let (sets, map) = read_sets(text.as_bytes()).unwrap();
        assert_eq!(sets.iter().map(|s| s.count()).sum::<u64>(), 10_000);
        assert_eq!(map.records(), 10_000);
    }

    #[test]
    fn vectors() {
        assert_eq!(
            read_vectors("0\n10\n".as_bytes(), true, false).unwrap(),
            vec![vec![-1.0], vec![1.0]]
        );
        assert_eq!(
            read_vectors("1,2\n3,4\n".as_bytes(), false, false).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
        assert!(matches!(
            read_vectors("1,2\n3\n".as_bytes(), false, false),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_vectors("1,x\n".as_bytes(), false, false).is_err());
        assert!(read_vectors("1,NaN\n".as_bytes(), false, false).is_err());
        assert!(read_vectors("1,inf\n".as_bytes(), false, false).is_err());
        assert_eq!(
            read_vectors("x,y\n1,2\n".as_bytes(), false, true).unwrap(),
            vec![vec![1.0, 2.0]]
        );
    }

    #[test]
    fn matrix() {
        let d = read_matrix("0,1\n1,0\n".as_bytes()).unwrap();
        assert_eq!(d.distance(ObjectId(0), ObjectId(1)), 1.0);
        assert!(read_matrix("0,1\n2,0\n".as_bytes()).is_err());
        assert!(read_matrix("0,1,2\n1,0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn index_round_trip() {
        let index = fixture_index();
        let bytes = index_bytes(&index);
        assert_eq!(bytes.len(), HEADER_LEN + 11 * RECORD_LEN);
        let back = parse_index(&bytes).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.ordering().entries()[0].reachability, f64::INFINITY);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.fnx");
        save_index(&path, &index).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
        assert_eq!(load_index(&path, Some(&fixture::dataset())).unwrap(), index);
        let other = Dataset::from_vectors(vec![vec![0.0]; 11]).unwrap();
        assert!(matches!(
            load_index(&path, Some(&other)),
            Err(Error::FingerprintMismatch)
        ));
    }

    #[test]
    fn rebuild_is_byte_identical() {
        assert_eq!(index_bytes(&fixture_index()), index_bytes(&fixture_index()));
    }

    #[test]
    fn corrupt_images() {
        let bytes = index_bytes(&fixture_index());
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(parse_index(&bad), Err(Error::BadMagic(m)) if &m == b"XXXX"));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(parse_index(&bad), Err(Error::UnsupportedVersion(9))));
        for cut in [0, 3, 20, HEADER_LEN, bytes.len() - 1] {
            assert!(
                matches!(parse_index(&bytes[..cut]), Err(Error::Truncated)),
                "cut at {cut}"
            );
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(parse_index(&long), Err(Error::CorruptIndex(_))));
        let mut dup = bytes.clone();
        // second record's object id := first record's
        let (a, b) = (HEADER_LEN, HEADER_LEN + RECORD_LEN);
        let first: Vec<u8> = dup[a..a + 8].to_vec();
        dup[b..b + 8].copy_from_slice(&first);
        assert!(matches!(parse_index(&dup), Err(Error::CorruptIndex(_))));
    }

    fn labeling_csv(l: &Labeling, map: &RecordMap) -> String {
        let mut out = Vec::new();
        write_labeling_to(&mut out, l, map).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn labeling_rows() {
        let index = fixture_index();
        let p = NeighborProvider::build(Arc::new(fixture::dataset()), 1.0, Backend::ExplicitMatrix).unwrap();
        let exact = crate::queries::epsilon_star_query(&index, &p, 0.75)
            .unwrap()
            .labeling;
        let text = labeling_csv(&exact, &RecordMap::identity(11));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "object_id,cluster_id,is_core");
        assert_eq!(lines[2], "1,-1,false");
        assert_eq!(lines.len(), 12);

        let two = Labeling::new(vec![Some(0)], vec![true], 1);
        let text = labeling_csv(&two, &RecordMap::new(vec![ObjectId(0), ObjectId(0)]));
        assert_eq!(text, "object_id,cluster_id,is_core\n0,0,true\n1,0,true\n");

        let noise = Labeling::new(vec![None, None], vec![false, false], 0);
        let text = labeling_csv(&noise, &RecordMap::identity(2));
        assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("-1")));
    }
}
