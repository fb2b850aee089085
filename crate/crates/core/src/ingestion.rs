//! Labelled datasets, from the QSAR text format or a synthetic generator,
//! and their split across agents.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

pub const QSAR_FEATURES: usize = 41;
const FLIP_RATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    /// One sample per row.
    pub features: DMatrix<f64>,
    /// `+1` or `-1`, one per row.
    pub labels: Vec<f64>,
}

impl RawDataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        let d = Self { features, labels };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.nrows() != self.labels.len() {
            return Err(Error::Input(format!(
                "{} feature rows but {} labels",
                self.features.nrows(),
                self.labels.len()
            )));
        }
        if let Some(i) = self.labels.iter().position(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::Input(format!("label {} at row {i} is not ±1", self.labels[i])));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite feature value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

/// Reads `;`-separated rows of 41 numeric features followed by `RB` (+1) or `NRB` (-1).
pub fn load_qsar_csv(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_qsar(file)
}

pub fn parse_qsar(reader: impl std::io::Read) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            detail: e.to_string(),
        })?;
        if record.len() != QSAR_FEATURES + 1 {
            return Err(Error::Parse {
                row,
                detail: format!("expected {} fields, found {}", QSAR_FEATURES + 1, record.len()),
            });
        }
        for (col, field) in record.iter().take(QSAR_FEATURES).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                detail: format!("field {} (`{field}`) is not a number", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    detail: format!("field {} is not finite", col + 1),
                });
            }
            values.push(v);
        }
        labels.push(match &record[QSAR_FEATURES] {
            "RB" => 1.0,
            "NRB" => -1.0,
            other => {
                return Err(Error::Parse {
                    row,
                    detail: format!("unknown class token `{other}`"),
                })
            }
        });
    }
    let m = labels.len();
    Ok(RawDataset {
        features: DMatrix::from_row_slice(m, QSAR_FEATURES, &values),
        labels,
    })
}

/// Shifts and scales every column to zero mean and unit (population) variance.
/// Constant columns become zero.
pub fn normalize_features(d: &RawDataset) -> RawDataset {
    let m = d.len();
    let mut features = d.features.clone();
    if m == 0 {
        return d.clone();
    }
    for mut col in features.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let std = (col.norm_squared() / m as f64).sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            col.fill(0.0);
        } else {
            col /= std;
        }
    }
    RawDataset {
        features,
        labels: d.labels.clone(),
    }
}

/// Seeded permutation of `0..m` used by [`partition_to_agents`].
pub fn permutation(m: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng::stream(seed, rng::DATA));
    order
}

/// Shuffles by `seed`, then splits into `n` contiguous shards whose sizes
/// differ by at most one (larger shards first).
pub fn partition_to_agents(d: &RawDataset, n: usize, seed: u64) -> Result<Vec<RawDataset>> {
    let m = d.len();
    if n == 0 || m < n {
        return Err(Error::param(format!("cannot split {m} samples across {n} agents")));
    }
    let order = permutation(m, seed);
    let (base, extra) = (m / n, m % n);
    let mut start = 0;
    Ok((0..n)
        .map(|i| {
            let size = base + usize::from(i < extra);
            let shard = d.select(&order[start..start + size]);
            start += size;
            shard
        })
        .collect())
}

/// Synthetic logistic data together with the planted separating direction.
pub fn synth_logistic_planted(n: usize, p: usize, per_agent: usize, seed: u64) -> Result<(RawDataset, DVector<f64>)> {
    if n == 0 || p == 0 || per_agent == 0 {
        return Err(Error::param("synthetic data needs n, p, per_agent >= 1"));
    }
    let m = n * per_agent;
    let mut rng = rng::stream(seed, rng::DATA);
    let planted = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
    let scale = 1.0 / (p as f64).sqrt();
    let features = DMatrix::from_fn(m, p, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let labels = features
        .row_iter()
        .map(|z| {
            let clean = if z.dot(&planted.transpose()) >= 0.0 { 1.0 } else { -1.0 };
            if rng.gen_bool(FLIP_RATE) {
                -clean
            } else {
                clean
            }
        })
        .collect();
    Ok((RawDataset { features, labels }, planted))
}

/// `n · per_agent` Gaussian samples with `E‖z‖² = 1` and labels from a planted
/// hyperplane, 10% of them flipped.
pub fn synth_logistic(n: usize, p: usize, per_agent: usize, seed: u64) -> Result<RawDataset> {
    synth_logistic_planted(n, p, per_agent, seed).map(|(d, _)| d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::io::Cursor;

    fn qsar_row(label: &str, fields: usize) -> String {
        let mut parts: Vec<String> = (0..fields).map(|i| format!("{}.5", i)).collect();
        parts.push(label.to_string());
        parts.join(";")
    }

    #[test]
    fn parses_valid_rows() {
        let text = format!("{}\n{}\n", qsar_row("RB", 41), qsar_row("NRB", 41));
        let d = parse_qsar(Cursor::new(text)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 41);
        assert_eq!(d.labels, vec![1.0, -1.0]);
        assert_eq!(d.features[(1, 3)], 3.5);
    }

    #[test]
    fn empty_input_is_empty_dataset() {
        let d = parse_qsar(Cursor::new("")).unwrap();
        assert!(d.is_empty());
        assert!(partition_to_agents(&d, 2, 0).is_err());
    }

    #[test]
    fn rejects_malformed_rows_with_row_number() {
        let cases = [
            (format!("{}\n{}\n", qsar_row("RB", 41), qsar_row("RB", 40)), 2),
            (format!("{}\n", qsar_row("XB", 41)), 1),
            (
                format!(
                    "{}\n{}\n",
                    qsar_row("RB", 41),
                    qsar_row("RB", 41).replacen("0.5", "abc", 1)
                ),
                2,
            ),
            (format!("{}\n", qsar_row("RB", 42)), 1),
            (format!("{}\n", qsar_row("RB", 41).replacen("0.5", "NaN", 1)), 1),
        ];
        for (text, bad_row) in cases {
            match parse_qsar(Cursor::new(text)) {
                Err(Error::Parse { row, .. }) => assert_eq!(row, bad_row),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_qsar_csv("/nonexistent/qsar.csv"), Err(Error::Io { .. })));
    }

    #[test]
    fn normalization_cases() {
        let d = RawDataset::new(DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 3.0, 5.0]), vec![1.0, -1.0]).unwrap();
        let nd = normalize_features(&d);
        assert_eq!(nd.features, DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]));
        let twice = normalize_features(&nd);
        assert!((twice.features - nd.features).amax() < 1e-12);
    }

    #[test]
    fn normalization_idempotent_on_random_data() {
        let d = synth_logistic(5, 7, 4, 11).unwrap();
        let once = normalize_features(&d);
        let twice = normalize_features(&once);
        assert!((twice.features - once.features).amax() < 1e-12);
    }

    #[test]
    fn shard_sizes_balanced() {
        let d = synth_logistic(10, 3, 1, 0).unwrap();
        let shards = partition_to_agents(&d, 3, 5).unwrap();
        let sizes: Vec<_> = shards.iter().map(RawDataset::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let one_each = partition_to_agents(&d, 10, 5).unwrap();
        assert!(one_each.iter().all(|s| s.len() == 1));
    }

    #[test]
    fn shards_reassemble_to_permuted_dataset() {
        let d = synth_logistic(4, 5, 3, 2).unwrap();
        let shards = partition_to_agents(&d, 5, 9).unwrap();
        let order = permutation(d.len(), 9);
        let mut rows = Vec::new();
        let mut labels: Vec<f64> = Vec::new();
        for s in &shards {
            rows.extend(s.features.row_iter().map(|r| r.clone_owned()));
            labels.extend(&s.labels);
        }
        let expected = d.select(&order);
        assert_eq!(DMatrix::from_rows(&rows), expected.features);
        assert_eq!(labels, expected.labels);
        let distinct: BTreeSet<_> = order.iter().collect();
        assert_eq!(distinct.len(), d.len());
    }

    #[test]
    fn synthetic_is_deterministic_and_labelled() {
        let a = synth_logistic(20, 41, 2, 4).unwrap();
        assert_eq!(a, synth_logistic(20, 41, 2, 4).unwrap());
        assert_ne!(a, synth_logistic(20, 41, 2, 5).unwrap());
        assert!(a.labels.iter().all(|&l| l == 1.0 || l == -1.0));
    }

    #[test]
    fn flip_rate_near_ten_percent() {
        let (d, w) = synth_logistic_planted(100, 10, 100, 1).unwrap();
        let flips = d
            .features
            .row_iter()
            .zip(&d.labels)
            .filter(|(z, &l)| {
                let clean = if z.dot(&w.transpose()) >= 0.0 { 1.0 } else { -1.0 };
                clean != l
            })
            .count();
        let rate = flips as f64 / d.len() as f64;
        assert!(rate > 0.08 && rate < 0.12, "flip rate {rate}");
    }

    #[test]
    fn synthetic_rows_have_unit_norm_on_average() {
        let d = synth_logistic(50, 41, 20, 3).unwrap();
        let mean_sq: f64 = d.features.row_iter().map(|z| z.norm_squared()).sum::<f64>() / d.len() as f64;
        assert!((mean_sq - 1.0).abs() < 0.05, "{mean_sq}");
    }
}
