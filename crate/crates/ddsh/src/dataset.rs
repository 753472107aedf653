//! Feature/label datasets and their on-disk formats.
//!
//! Features travel either as CSV (one point per row, optional `d=<int>`
//! header) or as a compact binary format (`DDFV` magic, little-endian f32
//! row-major). Labels are CSV rows of `;`-separated non-negative ids, one
//! row per point, so multi-label points need no side table.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Magic bytes of the binary feature format.
pub const FEATURE_MAGIC: &[u8; 4] = b"DDFV";
/// Current binary feature format version.
pub const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header at line {line}: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("dimension mismatch at row {row}: expected {expected} values, got {got}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("malformed value at row {row}: {detail}")]
    MalformedValue { row: usize, detail: String },
    #[error("empty dataset")]
    Empty,
    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: String },
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("point {row} has no labels")]
    EmptyLabels { row: usize },
    #[error("label count {labels} does not match feature count {features}")]
    CountMismatch { features: usize, labels: usize },
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("query and retrieval partitions overlap at index {index}")]
    OverlappingRoles { index: usize },
    #[error("invalid blob parameters: {0}")]
    BadBlobParams(String),
}

/// Dense n x d feature matrix. Values are stored as f32 to match the
/// binary on-disk format exactly, so save/load round-trips are bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f32>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f32>) -> Result<Self, DataError> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(DataError::Empty);
        }
        for ((row, col), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFinite { row, col });
            }
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f32> {
        &self.values
    }

    /// Row widened to f64, the precision used by the feature network.
    pub fn row_f64(&self, i: usize) -> Array1<f64> {
        self.values.row(i).mapv(f64::from)
    }
}

/// Per-point label sets. Labels are kept sorted and deduplicated so set
/// operations reduce to merges over short slices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    labels: Vec<Vec<u32>>,
}

impl LabelSet {
    pub fn new(mut labels: Vec<Vec<u32>>) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        for (row, set) in labels.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(DataError::EmptyLabels { row });
            }
        }
        Ok(Self { labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.labels[i]
    }

    pub fn is_multi(&self, i: usize) -> bool {
        self.labels[i].len() > 1
    }

    /// True iff the label sets of `i` and `j` intersect.
    pub fn shares_label(&self, i: usize, j: usize) -> bool {
        let (mut a, mut b) = (self.labels[i].iter(), self.labels[j].iter());
        let (mut x, mut y) = (a.next(), b.next());
        while let (Some(u), Some(v)) = (x, y) {
            match u.cmp(v) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => x = a.next(),
                std::cmp::Ordering::Greater => y = b.next(),
            }
        }
        false
    }

    /// Size of the union of the two label sets.
    pub fn union_size(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.labels[i], &self.labels[j]);
        let mut count = 0;
        let (mut p, mut q) = (0, 0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Equal => {
                    p += 1;
                    q += 1;
                }
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
            }
            count += 1;
        }
        count + (a.len() - p) + (b.len() - q)
    }
}

/// Index lists tagging each experimental role. Lists may be empty when a
/// dataset plays a single role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Roles {
    pub query: Vec<usize>,
    pub retrieval: Vec<usize>,
    pub training: Vec<usize>,
}

/// A labeled feature set plus optional role partitions.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub labels: LabelSet,
    pub roles: Roles,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, labels: LabelSet) -> Result<Self, DataError> {
        if features.n() != labels.n() {
            return Err(DataError::CountMismatch {
                features: features.n(),
                labels: labels.n(),
            });
        }
        Ok(Self {
            features,
            labels,
            roles: Roles::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    /// Attach role partitions. Query and retrieval must not overlap.
    pub fn with_roles(mut self, roles: Roles) -> Result<Self, DataError> {
        let n = self.n();
        for &i in roles
            .query
            .iter()
            .chain(&roles.retrieval)
            .chain(&roles.training)
        {
            if i >= n {
                return Err(DataError::IndexOutOfRange { index: i, n });
            }
        }
        let mut in_query = vec![false; n];
        for &i in &roles.query {
            in_query[i] = true;
        }
        for &i in &roles.retrieval {
            if in_query[i] {
                return Err(DataError::OverlappingRoles { index: i });
            }
        }
        self.roles = roles;
        Ok(self)
    }

    /// New dataset containing only the given points, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset, DataError> {
        let n = self.n();
        let d = self.features.d();
        let mut values = Array2::<f32>::zeros((indices.len(), d));
        let mut labels = Vec::with_capacity(indices.len());
        for (out, &i) in indices.iter().enumerate() {
            if i >= n {
                return Err(DataError::IndexOutOfRange { index: i, n });
            }
            values.row_mut(out).assign(&self.features.values().row(i));
            labels.push(self.labels.get(i).to_vec());
        }
        Dataset::new(FeatureMatrix::new(values)?, LabelSet::new(labels)?)
    }
}

/// Supported feature file encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    Binary,
}

pub fn load_features(path: &Path, format: FeatureFormat) -> Result<FeatureMatrix, DataError> {
    match format {
        FeatureFormat::Csv => load_features_csv(path),
        FeatureFormat::Binary => load_features_binary(path),
    }
}

pub fn save_features(
    matrix: &FeatureMatrix,
    path: &Path,
    format: FeatureFormat,
) -> Result<(), DataError> {
    match format {
        FeatureFormat::Csv => save_features_csv(matrix, path),
        FeatureFormat::Binary => save_features_binary(matrix, path),
    }
}

fn load_features_csv(path: &Path) -> Result<FeatureMatrix, DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut declared_d: Option<usize> = None;
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if line_no == 0 && trimmed.starts_with("d=") {
            let d: usize =
                trimmed[2..]
                    .parse()
                    .map_err(|e| DataError::MalformedHeader {
                        line: 1,
                        detail: format!("cannot parse dimension: {e}"),
                    })?;
            if d == 0 {
                return Err(DataError::MalformedHeader {
                    line: 1,
                    detail: "dimension must be at least 1".into(),
                });
            }
            declared_d = Some(d);
            continue;
        }
        let row = rows.len();
        let mut parsed = Vec::new();
        for (col, field) in trimmed.split(',').enumerate() {
            let v: f32 = field
                .trim()
                .parse()
                .map_err(|e| DataError::MalformedValue {
                    row,
                    detail: format!("column {col}: {e}"),
                })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite { row, col });
            }
            parsed.push(v);
        }
        if let Some(d) = declared_d.or_else(|| rows.first().map(Vec::len)) {
            if parsed.len() != d {
                return Err(DataError::DimensionMismatch {
                    row,
                    expected: d,
                    got: parsed.len(),
                });
            }
        }
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let d = rows[0].len();
    let flat: Vec<f32> = rows.into_iter().flatten().collect();
    let n = flat.len() / d;
    let values = Array2::from_shape_vec((n, d), flat).expect("row lengths already checked");
    FeatureMatrix::new(values)
}

fn save_features_csv(matrix: &FeatureMatrix, path: &Path) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "d={}", matrix.d())?;
    for row in matrix.values().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn load_features_binary(path: &Path) -> Result<FeatureMatrix, DataError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FEATURE_MAGIC {
        return Err(DataError::BadMagic {
            expected: String::from_utf8_lossy(FEATURE_MAGIC).into_owned(),
        });
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FEATURE_VERSION {
        return Err(DataError::BadVersion(version));
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    let d = r.read_u64::<LittleEndian>()? as usize;
    if n == 0 || d == 0 {
        return Err(DataError::Empty);
    }
    let mut flat = vec![0f32; n * d];
    r.read_f32_into::<LittleEndian>(&mut flat)?;
    let values = Array2::from_shape_vec((n, d), flat).expect("length fixed above");
    FeatureMatrix::new(values)
}

fn save_features_binary(matrix: &FeatureMatrix, path: &Path) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_u32::<LittleEndian>(FEATURE_VERSION)?;
    w.write_u64::<LittleEndian>(matrix.n() as u64)?;
    w.write_u64::<LittleEndian>(matrix.d() as u64)?;
    for v in matrix.values().iter() {
        w.write_f32::<LittleEndian>(*v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<LabelSet, DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels: Vec<Vec<u32>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row = labels.len();
        let mut set = Vec::new();
        for field in trimmed.split(';') {
            let id: u32 = field
                .trim()
                .parse()
                .map_err(|e| DataError::MalformedValue {
                    row,
                    detail: format!("label id: {e}"),
                })?;
            set.push(id);
        }
        labels.push(set);
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let set = LabelSet::new(labels)?;
    warn_on_label_gaps(&set);
    Ok(set)
}

fn warn_on_label_gaps(set: &LabelSet) {
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..set.n() {
        seen.extend(set.get(i).iter().copied());
    }
    if let Some(&max) = seen.iter().next_back() {
        let missing = (max as usize + 1) - seen.len();
        if missing > 0 {
            log::warn!("label ids have {missing} gap(s) below max id {max}");
        }
    }
}

pub fn save_labels(labels: &LabelSet, path: &Path) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..labels.n() {
        let line: Vec<String> = labels.get(i).iter().map(|l| l.to_string()).collect();
        writeln!(w, "{}", line.join(";"))?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic class blobs: class centers drawn uniformly on the sphere of
/// radius `10 * spread`, points drawn from isotropic Gaussians with
/// standard deviation `spread` around their center. Points are emitted
/// class-major, labels are the class ids.
pub fn generate_blobs(
    num_classes: usize,
    per_class: usize,
    d: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if num_classes < 2 {
        return Err(DataError::BadBlobParams("need at least 2 classes".into()));
    }
    if per_class < 1 {
        return Err(DataError::BadBlobParams(
            "need at least 1 point per class".into(),
        ));
    }
    if d < 1 {
        return Err(DataError::BadBlobParams("dimension must be >= 1".into()));
    }
    if spread <= 0.0 || !spread.is_finite() {
        return Err(DataError::BadBlobParams("spread must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let radius = 10.0 * spread;
    let mut centers = Vec::with_capacity(num_classes);
    for _ in 0..num_classes {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                centers.push(v.into_iter().map(|x| x / norm * radius).collect::<Vec<_>>());
                break;
            }
        }
    }
    let n = num_classes * per_class;
    let mut values = Array2::<f32>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for p in 0..per_class {
            let row = class * per_class + p;
            for (col, &c) in center.iter().enumerate() {
                let noise: f64 = rng.sample(StandardNormal);
                values[[row, col]] = (c + spread * noise) as f32;
            }
            labels.push(vec![class as u32]);
        }
    }
    Dataset::new(FeatureMatrix::new(values)?, LabelSet::new(labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_parse_basic() {
        let f = write_temp("1,2\n3,4\n5,6\n");
        let m = load_features(f.path(), FeatureFormat::Csv).unwrap();
        assert_eq!((m.n(), m.d()), (3, 2));
        assert_eq!(m.values()[[0, 0]], 1.0);
        assert_eq!(m.values()[[0, 1]], 2.0);
        assert_eq!(m.values()[[2, 1]], 6.0);
    }

    #[test]
    fn csv_header_declares_dimension() {
        let f = write_temp("d=3\n1,2,3\n");
        let m = load_features(f.path(), FeatureFormat::Csv).unwrap();
        assert_eq!((m.n(), m.d()), (1, 3));

        let f = write_temp("d=2\n1,2,3\n");
        let err = load_features(f.path(), FeatureFormat::Csv).unwrap_err();
        assert!(matches!(
            err,
            DataError::DimensionMismatch {
                row: 0,
                expected: 2,
                got: 3
            }
        ));
    }

    #[test]
    fn csv_bad_header_and_values() {
        let f = write_temp("d=abc\n1,2\n");
        assert!(matches!(
            load_features(f.path(), FeatureFormat::Csv).unwrap_err(),
            DataError::MalformedHeader { line: 1, .. }
        ));

        let f = write_temp("1,2\n3,oops\n");
        assert!(matches!(
            load_features(f.path(), FeatureFormat::Csv).unwrap_err(),
            DataError::MalformedValue { row: 1, .. }
        ));

        let f = write_temp("1,2\nnan,4\n");
        assert!(matches!(
            load_features(f.path(), FeatureFormat::Csv).unwrap_err(),
            DataError::NonFinite { row: 1, col: 0 }
        ));

        let f = write_temp("1,2\n3\n");
        assert!(matches!(
            load_features(f.path(), FeatureFormat::Csv).unwrap_err(),
            DataError::DimensionMismatch { row: 1, .. }
        ));
    }

    #[test]
    fn binary_empty_dataset_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(FEATURE_MAGIC);
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        buf.extend_from_slice(&4u64.to_le_bytes());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        let err = load_features(f.path(), FeatureFormat::Binary).unwrap_err();
        assert!(matches!(err, DataError::Empty));
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn binary_bad_magic_and_version() {
        let f = write_temp("NOPE####");
        assert!(matches!(
            load_features(f.path(), FeatureFormat::Binary).unwrap_err(),
            DataError::BadMagic { .. }
        ));

        let mut buf = Vec::new();
        buf.extend_from_slice(FEATURE_MAGIC);
        buf.extend_from_slice(&9u32.to_le_bytes());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        assert!(matches!(
            load_features(f.path(), FeatureFormat::Binary).unwrap_err(),
            DataError::BadVersion(9)
        ));
    }

    #[test]
    fn labels_parse_and_roundtrip() {
        let f = write_temp("3;7\n4\n");
        let l = load_labels(f.path()).unwrap();
        assert_eq!(l.get(0), &[3, 7]);
        assert_eq!(l.get(1), &[4]);
        assert!(l.is_multi(0));
        assert!(!l.is_multi(1));

        let out = tempfile::NamedTempFile::new().unwrap();
        save_labels(&l, out.path()).unwrap();
        let back = load_labels(out.path()).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn labels_reject_empty_point() {
        let f = write_temp("3;\n");
        assert!(load_labels(f.path()).is_err());
    }

    #[test]
    fn dataset_role_validation() {
        let ds = generate_blobs(2, 3, 2, 1.0, 1).unwrap();
        let ok = ds.clone().with_roles(Roles {
            query: vec![0, 1],
            retrieval: vec![2, 3, 4, 5],
            training: vec![2, 3],
        });
        assert!(ok.is_ok());
        let bad = ds.clone().with_roles(Roles {
            query: vec![0, 2],
            retrieval: vec![2, 3],
            training: vec![],
        });
        assert!(matches!(
            bad.unwrap_err(),
            DataError::OverlappingRoles { index: 2 }
        ));
        let oob = ds.with_roles(Roles {
            query: vec![99],
            ..Default::default()
        });
        assert!(matches!(
            oob.unwrap_err(),
            DataError::IndexOutOfRange { index: 99, .. }
        ));
    }

    #[test]
    fn blobs_shape_and_determinism() {
        let a = generate_blobs(2, 5, 3, 1.0, 42).unwrap();
        assert_eq!(a.n(), 10);
        assert_eq!(a.features.d(), 3);
        let zeros = (0..10).filter(|&i| a.labels.get(i) == [0]).count();
        let ones = (0..10).filter(|&i| a.labels.get(i) == [1]).count();
        assert_eq!((zeros, ones), (5, 5));

        let b = generate_blobs(2, 5, 3, 1.0, 42).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn blobs_reject_bad_params() {
        assert!(generate_blobs(1, 5, 3, 1.0, 0).is_err());
        assert!(generate_blobs(2, 0, 3, 1.0, 0).is_err());
        assert!(generate_blobs(2, 5, 0, 1.0, 0).is_err());
        assert!(generate_blobs(2, 5, 3, 0.0, 0).is_err());
    }

    /// 1-NN oracle on the generated blobs: leave-one-out nearest neighbor
    /// must recover the class label almost always.
    #[test]
    fn blobs_one_nearest_neighbor_accuracy() {
        let ds = generate_blobs(2, 250, 16, 1.0, 7).unwrap();
        let n = ds.n();

        // Class means land far apart relative to the unit noise.
        let mut means = [vec![0.0f64; 16], vec![0.0f64; 16]];
        for i in 0..n {
            let class = ds.labels.get(i)[0] as usize;
            for (m, v) in means[class].iter_mut().zip(ds.features.row_f64(i)) {
                *m += v / 250.0;
            }
        }
        let sep: f64 = means[0]
            .iter()
            .zip(&means[1])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(sep >= 10.0, "class separation {sep} below 10");
        let mut correct = 0;
        for i in 0..n {
            let xi = ds.features.row_f64(i);
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let xj = ds.features.row_f64(j);
                let dist: f64 = xi
                    .iter()
                    .zip(xj.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            if ds.labels.get(best.1) == ds.labels.get(i) {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / n as f64;
        assert!(accuracy >= 0.99, "1-NN accuracy {accuracy} below 0.99");
    }

    #[test]
    fn label_set_operations() {
        let l = LabelSet::new(vec![vec![1, 3], vec![3, 9], vec![2]]).unwrap();
        assert!(l.shares_label(0, 1));
        assert!(!l.shares_label(0, 2));
        assert_eq!(l.union_size(0, 1), 3);
        assert_eq!(l.union_size(0, 2), 3);
        assert_eq!(l.union_size(2, 2), 1);
    }

    proptest! {
        #[test]
        fn feature_roundtrip_binary_and_csv(
            rows in proptest::collection::vec(
                proptest::collection::vec(-1e6f32..1e6f32, 5), 10)
        ) {
            let flat: Vec<f32> = rows.iter().flatten().copied().collect();
            let m = FeatureMatrix::new(Array2::from_shape_vec((10, 5), flat).unwrap()).unwrap();

            let f = tempfile::NamedTempFile::new().unwrap();
            save_features(&m, f.path(), FeatureFormat::Binary).unwrap();
            let back = load_features(f.path(), FeatureFormat::Binary).unwrap();
            prop_assert_eq!(&m, &back);

            let f = tempfile::NamedTempFile::new().unwrap();
            save_features(&m, f.path(), FeatureFormat::Csv).unwrap();
            let back = load_features(f.path(), FeatureFormat::Csv).unwrap();
            prop_assert_eq!(&m, &back);
        }

        #[test]
        fn label_roundtrip(
            sets in proptest::collection::vec(
                proptest::collection::btree_set(0u32..50, 1..5), 1..20)
        ) {
            let labels = LabelSet::new(
                sets.into_iter().map(|s| s.into_iter().collect()).collect()
            ).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            save_labels(&labels, f.path()).unwrap();
            let back = load_labels(f.path()).unwrap();
            prop_assert_eq!(labels, back);
        }
    }
}
