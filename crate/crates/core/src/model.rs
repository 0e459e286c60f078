//! Domain types shared by every stage: objects, datasets, distances,
//! generating parameters and clustering results.

use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Identifier of a (deduplicated) object, dense in `0..n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u32);

impl ObjectId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        ObjectId(u32::try_from(i).expect("object index exceeds u32 range"))
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of unique tokens together with the number of raw records it stands for.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenSet {
    tokens: Vec<u32>,
    count: u64,
}

impl TokenSet {
    /// Normalizes `tokens` (sort + unique). Empty sets are rejected because the
    /// Jaccard distance between two empty sets is undefined.
    pub fn new(mut tokens: Vec<u32>, count: u64) -> Result<Self> {
        tokens.sort_unstable();
        tokens.dedup();
        if tokens.is_empty() {
            return Err(Error::InvalidParameter("token set must not be empty".into()));
        }
        if count == 0 {
            return Err(Error::InvalidParameter("duplicate count must be positive".into()));
        }
        Ok(TokenSet { tokens, count })
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Jaccard,
    Euclidean,
    ExplicitMatrix,
}

impl Metric {
    pub fn tag(self) -> u8 {
        match self {
            Metric::Jaccard => 0,
            Metric::Euclidean => 1,
            Metric::ExplicitMatrix => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Metric::Jaccard),
            1 => Some(Metric::Euclidean),
            2 => Some(Metric::ExplicitMatrix),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Jaccard => "jaccard",
            Metric::Euclidean => "euclidean",
            Metric::ExplicitMatrix => "matrix",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The `(epsilon, MinPts)` pair an ordering is generated for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratingParams {
    pub epsilon: f64,
    pub min_pts: u64,
}

impl GeneratingParams {
    pub fn new(epsilon: f64, min_pts: u64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if min_pts == 0 {
            return Err(Error::InvalidParameter("MinPts must be at least 1".into()));
        }
        Ok(GeneratingParams { epsilon, min_pts })
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon < 0.0 || epsilon.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be a finite non-negative number, got {epsilon}"
        )));
    }
    Ok(())
}

/// Jaccard distance `1 - |r ∩ s| / |r ∪ s|` over sorted, duplicate-free slices.
pub fn jaccard_distance(r: &[u32], s: &[u32]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < r.len() && j < s.len() {
        match r[i].cmp(&s[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = r.len() + s.len() - common;
    if union == 0 {
        return 0.0;
    }
    1.0 - common as f64 / union as f64
}

/// Euclidean distance. Callers guarantee equal lengths; the summation order is
/// fixed so that `d(a, b) == d(b, a)` bit for bit.
#[inline]
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// A single clusterable item, borrowed from a dataset or supplied directly.
#[derive(Clone, Copy, Debug)]
pub enum DataObject<'a> {
    Set(&'a [u32]),
    Vector(&'a [f64]),
}

/// Distance between two free-standing objects under `metric`.
///
/// `ExplicitMatrix` has no notion of free-standing objects; use
/// [`Dataset::try_distance`] with ids instead.
pub fn distance(metric: Metric, a: DataObject<'_>, b: DataObject<'_>) -> Result<f64> {
    match (metric, a, b) {
        (Metric::Jaccard, DataObject::Set(r), DataObject::Set(s)) => {
            if r.is_empty() || s.is_empty() {
                return Err(Error::InvalidParameter("Jaccard distance of an empty set".into()));
            }
            Ok(jaccard_distance(r, s))
        }
        (Metric::Euclidean, DataObject::Vector(x), DataObject::Vector(y)) => {
            if x.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    found: y.len(),
                });
            }
            Ok(euclidean_distance(x, y))
        }
        (metric, _, _) => Err(Error::InvalidParameter(format!(
            "objects are not compatible with metric {metric}"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Sets(Vec<TokenSet>),
    Vectors { dim: usize, coords: Vec<f64> },
    Matrix { n: usize, values: Vec<f64> },
}

/// An immutable collection of objects together with the metric that compares them.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    storage: Storage,
    fingerprint: [u8; 32],
}

impl Dataset {
    pub fn from_sets(sets: Vec<TokenSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self::with_fingerprint(Storage::Sets(sets)))
    }

    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::EmptyDataset)?.len();
        let mut coords = Vec::with_capacity(dim * vectors.len());
        for (row, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if let Some(col) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
            coords.extend_from_slice(v);
        }
        Ok(Self::with_fingerprint(Storage::Vectors { dim, coords }))
    }

    /// Builds a dataset from a row-major `n × n` distance matrix. The matrix must
    /// be symmetric, have a zero diagonal and hold finite non-negative values.
    pub fn from_matrix(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, found {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} is not a finite non-negative distance"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self::with_fingerprint(Storage::Matrix { n, values }))
    }

    fn with_fingerprint(storage: Storage) -> Self {
        let fingerprint = fingerprint(&storage);
        Dataset { storage, fingerprint }
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Sets(s) => s.len(),
            Storage::Vectors { dim, coords } => {
                if *dim == 0 {
                    0
                } else {
                    coords.len() / dim
                }
            }
            Storage::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn metric(&self) -> Metric {
        match self.storage {
            Storage::Sets(_) => Metric::Jaccard,
            Storage::Vectors { .. } => Metric::Euclidean,
            Storage::Matrix { .. } => Metric::ExplicitMatrix,
        }
    }

    /// SHA-256 over the canonical serialization of the (deduplicated) objects.
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    /// Duplicate multiplicity of an object; 1 for vectors and matrix rows.
    #[inline]
    pub fn weight(&self, id: ObjectId) -> u64 {
        match &self.storage {
            Storage::Sets(s) => s[id.index()].count,
            _ => 1,
        }
    }

    /// Sum of all multiplicities (the raw record count for set data).
    pub fn total_weight(&self) -> u64 {
        match &self.storage {
            Storage::Sets(s) => s.iter().map(|t| t.count).sum(),
            _ => self.len() as u64,
        }
    }

    pub fn sets(&self) -> Option<&[TokenSet]> {
        match &self.storage {
            Storage::Sets(s) => Some(s),
            _ => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.storage {
            Storage::Vectors { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    pub fn vector(&self, id: ObjectId) -> Option<&[f64]> {
        match &self.storage {
            Storage::Vectors { dim, coords } => {
                let i = id.index();
                Some(&coords[i * dim..(i + 1) * dim])
            }
            _ => None,
        }
    }

    pub fn object(&self, id: ObjectId) -> Option<DataObject<'_>> {
        match &self.storage {
            Storage::Sets(s) => Some(DataObject::Set(s[id.index()].tokens())),
            Storage::Vectors { .. } => self.vector(id).map(DataObject::Vector),
            Storage::Matrix { .. } => None,
        }
    }

    /// Distance between two objects of this dataset. Panics on out-of-range ids.
    #[inline]
    pub fn distance(&self, a: ObjectId, b: ObjectId) -> f64 {
        match &self.storage {
            Storage::Sets(s) => jaccard_distance(s[a.index()].tokens(), s[b.index()].tokens()),
            Storage::Vectors { dim, coords } => {
                let (i, j) = (a.index(), b.index());
                euclidean_distance(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim])
            }
            Storage::Matrix { n, values } => values[a.index() * n + b.index()],
        }
    }

    pub fn try_distance(&self, a: ObjectId, b: ObjectId) -> Result<f64> {
        let n = self.len();
        for id in [a, b] {
            if id.index() >= n {
                return Err(Error::IdOutOfRange { id: id.index(), n });
            }
        }
        Ok(self.distance(a, b))
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> {
        (0..self.len()).map(ObjectId::from_index)
    }
}

fn fingerprint(storage: &Storage) -> [u8; 32] {
    let mut h = Sha256::new();
    match storage {
        Storage::Sets(sets) => {
            h.update([Metric::Jaccard.tag()]);
            h.update((sets.len() as u64).to_le_bytes());
            for s in sets {
                h.update(s.count.to_le_bytes());
                h.update((s.tokens.len() as u64).to_le_bytes());
                for t in &s.tokens {
                    h.update(t.to_le_bytes());
                }
            }
        }
        Storage::Vectors { dim, coords } => {
            h.update([Metric::Euclidean.tag()]);
            h.update((*dim as u64).to_le_bytes());
            h.update((coords.len() as u64).to_le_bytes());
            for c in coords {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        Storage::Matrix { n, values } => {
            h.update([Metric::ExplicitMatrix.tag()]);
            h.update((*n as u64).to_le_bytes());
            for v in values {
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
    h.finalize().into()
}

/// Rescales every dimension to zero mean and unit population variance.
/// Constant dimensions become all zeros.
pub fn standardize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = vectors.first().ok_or(Error::EmptyDataset)?.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let n = vectors.len() as f64;
    let mut out = vectors.to_vec();
    for d in 0..dim {
        let mean = vectors.iter().map(|v| v[d]).sum::<f64>() / n;
        let var = vectors.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        for v in out.iter_mut() {
            v[d] = if std > 0.0 { (v[d] - mean) / std } else { 0.0 };
        }
    }
    Ok(out)
}

/// Maps every raw record to the deduplicated object that represents it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordMap {
    to_object: Vec<ObjectId>,
}

impl RecordMap {
    pub fn new(to_object: Vec<ObjectId>) -> Self {
        RecordMap { to_object }
    }

    pub fn identity(n: usize) -> Self {
        RecordMap {
            to_object: (0..n).map(ObjectId::from_index).collect(),
        }
    }

    pub fn object_of(&self, record: usize) -> ObjectId {
        self.to_object[record]
    }

    pub fn records(&self) -> usize {
        self.to_object.len()
    }

    pub fn as_slice(&self) -> &[ObjectId] {
        &self.to_object
    }
}

/// Collapses identical token sets into one [`TokenSet`] with a multiplicity.
/// Objects are numbered in order of first occurrence.
pub fn deduplicate<I>(records: I) -> Result<(Vec<TokenSet>, RecordMap)>
where
    I: IntoIterator<Item = Vec<u32>>,
{
    let mut index: HashMap<Vec<u32>, ObjectId> = HashMap::new();
    let mut sets: Vec<TokenSet> = Vec::new();
    let mut mapping = Vec::new();
    for (record, mut tokens) in records.into_iter().enumerate() {
        tokens.sort_unstable();
        tokens.dedup();
        if tokens.is_empty() {
            return Err(Error::EmptyRecord { record });
        }
        let id = match index.get(&tokens) {
            Some(&id) => {
                sets[id.index()].count += 1;
                id
            }
            None => {
                let id = ObjectId::from_index(sets.len());
                index.insert(tokens.clone(), id);
                sets.push(TokenSet { tokens, count: 1 });
                id
            }
        };
        mapping.push(id);
    }
    Ok((sets, RecordMap::new(mapping)))
}

/// Per-object clustering result: a cluster id or noise, plus the core flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    labels: Vec<Option<u32>>,
    core: Vec<bool>,
    num_clusters: usize,
}

impl Labeling {
    /// Panics if the invariants (dense cluster ids, noise is never core) are violated.
    pub fn new(labels: Vec<Option<u32>>, core: Vec<bool>, num_clusters: usize) -> Self {
        assert_eq!(labels.len(), core.len());
        for (l, c) in labels.iter().zip(&core) {
            match l {
                Some(id) => assert!((*id as usize) < num_clusters, "cluster id out of range"),
                None => assert!(!c, "noise object flagged as core"),
            }
        }
        Labeling {
            labels,
            core,
            num_clusters,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: ObjectId) -> Option<u32> {
        self.labels[id.index()]
    }

    pub fn is_core(&self, id: ObjectId) -> bool {
        self.core[id.index()]
    }

    pub fn is_noise(&self, id: ObjectId) -> bool {
        self.labels[id.index()].is_none()
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    pub fn core_flags(&self) -> &[bool] {
        &self.core
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Members of each cluster, in ascending id order.
    pub fn clusters(&self) -> Vec<Vec<ObjectId>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c as usize].push(ObjectId::from_index(i));
            }
        }
        out
    }

    pub fn noise(&self) -> Vec<ObjectId> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_none())
            .map(ObjectId::from_index)
            .collect()
    }
}

/// The eleven-object example (objects A..K as ids 0..10) whose core
/// neighborhoods are tabulated for `epsilon = 1`, `MinPts = 4`. Pairs not in
/// the table are placed at distance 2 so they never interact.
pub mod fixture {
    use super::{Dataset, ObjectId};

    pub const NAMES: [char; 11] = ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K'];
    pub const EPSILON: f64 = 1.0;
    pub const MIN_PTS: u64 = 4;
    pub const FAR: f64 = 2.0;

    pub fn id(name: char) -> ObjectId {
        let i = NAMES
            .iter()
            .position(|&c| c == name)
            .unwrap_or_else(|| panic!("unknown fixture object {name}"));
        ObjectId::from_index(i)
    }

    pub fn ids(names: &str) -> Vec<ObjectId> {
        let mut v: Vec<_> = names.chars().map(id).collect();
        v.sort();
        v
    }

    pub fn name(id: ObjectId) -> char {
        NAMES[id.index()]
    }

    /// The listed pairs, each once.
    pub fn edges() -> Vec<(char, char, f64)> {
        let s5 = 5f64.sqrt() / 4.0;
        let r2 = 1.0 / 2f64.sqrt();
        vec![
            ('C', 'A', s5),
            ('C', 'D', r2),
            ('C', 'B', 1.0),
            ('C', 'E', 1.0),
            ('D', 'E', r2),
            ('D', 'A', 0.75),
            ('D', 'F', 1.0),
            ('H', 'G', s5),
            ('H', 'J', s5),
            ('H', 'I', r2),
            ('H', 'K', 1.0),
            ('I', 'K', r2),
            ('I', 'F', 0.75),
            ('I', 'J', 0.75),
            ('J', 'K', s5),
            ('J', 'G', 1.0),
        ]
    }

    pub fn matrix() -> Vec<f64> {
        let n = NAMES.len();
        let mut m = vec![FAR; n * n];
        for i in 0..n {
            m[i * n + i] = 0.0;
        }
        for (a, b, d) in edges() {
            let (i, j) = (id(a).index(), id(b).index());
            m[i * n + j] = d;
            m[j * n + i] = d;
        }
        m
    }

    pub fn dataset() -> Dataset {
        Dataset::from_matrix(NAMES.len(), matrix()).expect("fixture matrix is valid")
    }
}
