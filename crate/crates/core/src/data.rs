//! Datasets, CSV I/O, nearest-neighbor primitives, and synthetic generators.

use crate::linalg::dist;
use crate::rng::root_rng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// m feature vectors in ℝ^{n2} with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<u32>,
    /// When non-integer label tokens were mapped at load time, the original
    /// token for each label id (emitted in reports).
    label_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u32>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let n2 = features[0].len();
        if n2 == 0 {
            return Err(Error::Dimension("zero-dimensional features".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != n2 {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {n2}",
                    row.len()
                )));
            }
            if !row.iter().all(|x| x.is_finite()) {
                return Err(Error::Config(format!("non-finite feature in row {i}")));
            }
        }
        Ok(Self {
            features,
            labels,
            label_names: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Keeps the rows at `indices` (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Self::new(features, labels)?;
        out.label_names = self.label_names.clone();
        Ok(out)
    }
}

/// Loads a dataset from CSV: one row per point, an integer label followed by
/// n2 decimal feature values. Non-integer label tokens are mapped to dense
/// ids in order of first appearance (the mapping is kept on the dataset).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset_str(&text)
}

/// Parses the CSV text format of [`load_dataset`].
pub fn parse_dataset_str(text: &str) -> Result<LabeledDataset> {
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut n2: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let label_tok = cells.next().unwrap().trim().to_string();
        if label_tok.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "empty label cell".into(),
            });
        }
        let mut row = Vec::new();
        for cell in cells {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            row.push(v);
        }
        if row.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "row has a label but no features".into(),
            });
        }
        match n2 {
            None => n2 = Some(row.len()),
            Some(n) if n != row.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("ragged row: {} features, expected {n}", row.len()),
                })
            }
            _ => {}
        }
        features.push(row);
        raw_labels.push(label_tok);
    }
    if features.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty dataset file".into(),
        });
    }
    // All-integer label tokens are used verbatim; otherwise map tokens to
    // dense ids in first-appearance order.
    let parsed: Option<Vec<u32>> = raw_labels.iter().map(|t| t.parse().ok()).collect();
    let (labels, names) = match parsed {
        Some(l) => (l, None),
        None => {
            let mut names: Vec<String> = Vec::new();
            let mut ids = Vec::with_capacity(raw_labels.len());
            for tok in &raw_labels {
                let id = match names.iter().position(|n| n == tok) {
                    Some(i) => i,
                    None => {
                        names.push(tok.clone());
                        names.len() - 1
                    }
                };
                ids.push(id as u32);
            }
            (ids, Some(names))
        }
    };
    let mut ds = LabeledDataset::new(features, labels)?;
    ds.label_names = names;
    Ok(ds)
}

/// Serializes a dataset in the format of [`load_dataset`]. Feature values
/// are written as shortest round-trip decimals, so a save/load cycle is
/// value-exact.
pub fn dataset_to_csv(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    for i in 0..ds.len() {
        match ds.label_names() {
            Some(names) => out.push_str(&names[ds.label(i) as usize]),
            None => {
                let _ = write!(out, "{}", ds.label(i));
            }
        }
        for v in ds.feature(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset_to_csv(ds))?;
    Ok(())
}

/// Gaussian clusters: class k is `centers[k] + stddev * N(0, I)`.
///
/// Centers must be pairwise distinct; a single class is permitted but logged,
/// since such a dataset cannot be classified.
pub fn gen_gaussian_clusters(
    centers: &[Vec<f64>],
    per_class: usize,
    stddev: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if centers.is_empty() || per_class == 0 {
        return Err(Error::Empty("need at least one center and one point".into()));
    }
    let n2 = centers[0].len();
    for (k, c) in centers.iter().enumerate() {
        if c.len() != n2 {
            return Err(Error::Dimension(format!(
                "center {k} has dimension {}, expected {n2}",
                c.len()
            )));
        }
        for other in centers.iter().skip(k + 1) {
            if c == other {
                return Err(Error::Config(format!("duplicate center {c:?}")));
            }
        }
    }
    if centers.len() < 2 {
        log::warn!("gen_gaussian_clusters: a single class cannot be classified");
    }
    if stddev < 0.0 {
        return Err(Error::Config(format!("negative stddev {stddev}")));
    }
    let mut rng = root_rng(seed);
    let mut features = Vec::with_capacity(centers.len() * per_class);
    let mut labels = Vec::with_capacity(centers.len() * per_class);
    for (k, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let row: Vec<f64> = center
                .iter()
                .map(|c| c + stddev * rng.sample::<f64, _>(StandardNormal))
                .collect();
            features.push(row);
            labels.push(k as u32);
        }
    }
    LabeledDataset::new(features, labels)
}

/// Two one-dimensional class segments of length D embedded collinear in ℝ²
/// at distance r: the toy geometry with an exactly computable threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyGeometry {
    /// Segment length D.
    pub segment_length: f64,
    /// Gap r between the segments.
    pub gap: f64,
    /// Points per class m.
    pub per_class_count: usize,
    /// Trade-off constant c of the objective.
    pub tradeoff: f64,
}

impl ToyGeometry {
    pub fn new(segment_length: f64, gap: f64, per_class_count: usize, tradeoff: f64) -> Result<Self> {
        if !(segment_length > 0.0 && gap > 0.0 && tradeoff > 0.0) {
            return Err(Error::Config(format!(
                "toy geometry needs D, r, c > 0, got D={segment_length}, r={gap}, c={tradeoff}"
            )));
        }
        if per_class_count == 0 {
            return Err(Error::Config("toy geometry needs m >= 1".into()));
        }
        Ok(Self {
            segment_length,
            gap,
            per_class_count,
            tradeoff,
        })
    }
}

/// Samples the toy geometry: m class-0 points uniform on [(0,0), (D,0)] and
/// m class-1 points uniform on [(D+r,0), (2D+r,0)].
pub fn gen_toy_segments(geom: &ToyGeometry, seed: u64) -> LabeledDataset {
    let d = geom.segment_length;
    let r = geom.gap;
    let m = geom.per_class_count;
    let mut rng = root_rng(seed);
    let mut features = Vec::with_capacity(2 * m);
    let mut labels = Vec::with_capacity(2 * m);
    for _ in 0..m {
        features.push(vec![rng.gen::<f64>() * d, 0.0]);
        labels.push(0);
    }
    for _ in 0..m {
        features.push(vec![d + r + rng.gen::<f64>() * d, 0.0]);
        labels.push(1);
    }
    LabeledDataset::new(features, labels).expect("toy dataset is well-formed")
}

/// Minimum Euclidean distance over all cross-label pairs (the dataset-level
/// separation r).
pub fn min_interclass_distance(ds: &LabeledDataset) -> Result<f64> {
    if ds.classes().len() < 2 {
        return Err(Error::Undefined(
            "interclass distance is undefined for a single-class dataset".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            if ds.label(i) != ds.label(j) {
                best = best.min(dist(ds.feature(i), ds.feature(j)));
            }
        }
    }
    Ok(best)
}

/// Exact nearest neighbor by linear scan; ties break to the lowest index.
pub fn nearest_neighbor(ds: &LabeledDataset, query: &[f64]) -> (usize, f64) {
    debug_assert_eq!(query.len(), ds.dim());
    let mut best = (0usize, f64::INFINITY);
    for i in 0..ds.len() {
        let d = dist(ds.feature(i), query);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_file() {
        let ds = parse_dataset_str("1,0.0,0.0\n0,1.0,2.0").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.feature(1), &[1.0, 2.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_dataset_str("1,0.0\n0,1.0,2.0") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ragged-row error, got {other:?}"),
        }
        match parse_dataset_str("1,0.0\n0,oops") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected non-numeric error, got {other:?}"),
        }
        assert!(parse_dataset_str("").is_err());
    }

    #[test]
    fn string_labels_are_mapped_in_first_appearance_order() {
        let ds = parse_dataset_str("cat,0.0\ndog,1.0\ncat,2.0").unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.label_names().unwrap(), &["cat".to_string(), "dog".to_string()]);
        let round = parse_dataset_str(&dataset_to_csv(&ds)).unwrap();
        assert_eq!(round, ds);
    }

    #[test]
    fn toy_segments_shape() {
        let geom = ToyGeometry::new(1.0, 10.0, 1, 0.5).unwrap();
        let ds = gen_toy_segments(&geom, 3);
        assert_eq!(ds.len(), 2);
        let geom = ToyGeometry::new(2.0, 5.0, 50, 0.5).unwrap();
        let ds = gen_toy_segments(&geom, 9);
        for i in 0..50 {
            assert_eq!(ds.label(i), 0);
            assert_eq!(ds.feature(i)[1], 0.0);
            assert!((0.0..=2.0).contains(&ds.feature(i)[0]));
        }
        for i in 50..100 {
            assert_eq!(ds.label(i), 1);
            assert!((7.0..=9.0).contains(&ds.feature(i)[0]));
        }
        assert!(min_interclass_distance(&ds).unwrap() >= 5.0);
    }

    #[test]
    fn gaussian_clusters_deterministic_and_centered() {
        let centers = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
        let a = gen_gaussian_clusters(&centers, 100, 0.0, 7).unwrap();
        for i in 0..100 {
            assert_eq!(a.feature(i), &centers[0][..]);
        }
        let b = gen_gaussian_clusters(&centers, 100, 0.1, 7).unwrap();
        let c = gen_gaussian_clusters(&centers, 100, 0.1, 7).unwrap();
        assert_eq!(b, c);
        assert!(gen_gaussian_clusters(&[centers[0].clone(), centers[0].clone()], 5, 1.0, 0).is_err());
    }

    #[test]
    fn well_separated_clusters_keep_their_distance() {
        // stddev 0.1 at center distance 10: interclass distance stays >= 8.
        let centers = vec![vec![0.0, 0.0, 0.0], vec![10.0, 0.0, 0.0]];
        for seed in 0..100 {
            let ds = gen_gaussian_clusters(&centers, 100, 0.1, seed).unwrap();
            assert!(min_interclass_distance(&ds).unwrap() >= 8.0);
        }
    }

    #[test]
    fn toy_min_interclass_stays_in_gap_window() {
        // D=1, r=10: the cross-label minimum lies in [r, r + 2D].
        let geom = ToyGeometry::new(1.0, 10.0, 2, 0.5).unwrap();
        for seed in 0..20 {
            let ds = gen_toy_segments(&geom, seed);
            let d = min_interclass_distance(&ds).unwrap();
            assert!((10.0..=12.0).contains(&d), "seed {seed}: {d}");
        }
    }

    #[test]
    fn min_interclass_edge_cases() {
        let ds = LabeledDataset::new(vec![vec![1.0, 2.0], vec![1.0, 2.0]], vec![0, 1]).unwrap();
        assert_eq!(min_interclass_distance(&ds).unwrap(), 0.0);
        let single = LabeledDataset::new(vec![vec![0.0]], vec![3]).unwrap();
        assert!(min_interclass_distance(&single).is_err());
    }

    #[test]
    fn nearest_neighbor_ties_break_low() {
        let mut feats = vec![vec![5.0, 5.0]; 10];
        feats[3] = vec![1.0, 0.0];
        feats[7] = vec![-1.0, 0.0];
        let ds = LabeledDataset::new(feats, vec![0; 10]).unwrap();
        let (idx, d) = nearest_neighbor(&ds, &[0.0, 0.0]);
        assert_eq!(idx, 3);
        assert!((d - 1.0).abs() < 1e-15);
        let (idx, d) = nearest_neighbor(&ds, &[1.0, 0.0]);
        assert_eq!(idx, 3);
        assert_eq!(d, 0.0);
    }
}
