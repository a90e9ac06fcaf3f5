use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::{ClientPartition, ShiftKind, ShiftTag};
use crate::rng;

/// A deterministic feature transform emulating a change of camera geometry.
///
/// `AffineRotation` pairs up feature axes in a seed-chosen order and rotates
/// every pair by `magnitude` radians (a trailing unpaired axis is left alone,
/// so 1-dimensional features are unchanged). `MeanOffset` translates every
/// row by a seed-chosen direction scaled to norm `magnitude`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureShift {
    Identity,
    Rotation { pairs: Vec<(usize, usize)>, cos: f64, sin: f64 },
    Offset(Array1<f64>),
}

impl FeatureShift {
    pub fn new(kind: ShiftKind, magnitude: f64, feature_dim: usize, seed: u64) -> Self {
        if magnitude == 0.0 {
            return FeatureShift::Identity;
        }
        let mut rng = rng::stream(seed, "covariate-shift", &[]);
        match kind {
            ShiftKind::None => FeatureShift::Identity,
            ShiftKind::AffineRotation => {
                let mut axes: Vec<usize> = (0..feature_dim).collect();
                axes.shuffle(&mut rng);
                let pairs = axes.chunks_exact(2).map(|p| (p[0], p[1])).collect();
                FeatureShift::Rotation {
                    pairs,
                    cos: magnitude.cos(),
                    sin: magnitude.sin(),
                }
            }
            ShiftKind::MeanOffset => {
                let dir: Array1<f64> = loop {
                    let d: Array1<f64> = (0..feature_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    if d.dot(&d) > 0.0 {
                        break d;
                    }
                };
                let norm = dir.dot(&dir).sqrt();
                FeatureShift::Offset(dir.mapv(|v| v * magnitude / norm))
            }
        }
    }

    pub fn apply(&self, features: &mut Array2<f64>) {
        match self {
            FeatureShift::Identity => {}
            FeatureShift::Rotation { pairs, cos, sin } => {
                for mut row in features.axis_iter_mut(Axis(0)) {
                    for &(i, j) in pairs {
                        let (x, y) = (row[i], row[j]);
                        row[i] = cos * x - sin * y;
                        row[j] = sin * x + cos * y;
                    }
                }
            }
            FeatureShift::Offset(offset) => {
                for mut row in features.axis_iter_mut(Axis(0)) {
                    row += offset;
                }
            }
        }
    }
}

/// Transforms both shards of a partition. Labels are untouched.
///
/// Use the same `seed` for every affected client so they share one geometry.
pub fn apply_covariate_shift(partition: &ClientPartition, kind: ShiftKind, magnitude: f64, seed: u64) -> ClientPartition {
    let mut out = partition.clone();
    let shift = FeatureShift::new(kind, magnitude.max(0.0), partition.train.feature_dim(), seed);
    if shift == FeatureShift::Identity {
        return out;
    }
    out.train.map_features(|f| shift.apply(f));
    out.test.map_features(|f| shift.apply(f));
    out.shift = ShiftTag { kind, magnitude };
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, partition_non_iid};

    fn partition() -> ClientPartition {
        let d = generate_synthetic(2, 5, 40, 0, 3.0).unwrap();
        partition_non_iid(&d, 2, 10.0, 0.25, 0).unwrap().remove(0)
    }

    #[test]
    fn none_and_zero_are_identity() {
        let p = partition();
        assert_eq!(apply_covariate_shift(&p, ShiftKind::None, 3.0, 1), p);
        assert_eq!(apply_covariate_shift(&p, ShiftKind::AffineRotation, 0.0, 1), p);
        assert_eq!(apply_covariate_shift(&p, ShiftKind::MeanOffset, 0.0, 1), p);
    }

    #[test]
    fn mean_offset_shifts_means_by_norm_m() {
        let p = partition();
        let s = apply_covariate_shift(&p, ShiftKind::MeanOffset, 2.5, 7);
        assert_eq!(s.train.labels(), p.train.labels());
        let before = p.train.features().mean_axis(Axis(0)).unwrap();
        let after = s.train.features().mean_axis(Axis(0)).unwrap();
        let delta = &after - &before;
        assert!((delta.dot(&delta).sqrt() - 2.5).abs() < 1e-12);
        let FeatureShift::Offset(o) = FeatureShift::new(ShiftKind::MeanOffset, 2.5, 5, 7) else { panic!() };
        for (d, o) in delta.iter().zip(o.iter()) {
            assert!((d - o).abs() < 1e-12);
        }
        assert_eq!(s.shift.to_string(), "mean_offset:2.5");
    }

    #[test]
    fn rotation_preserves_norms() {
        let p = partition();
        let s = apply_covariate_shift(&p, ShiftKind::AffineRotation, 0.8, 3);
        for (a, b) in p.test.features().axis_iter(Axis(0)).zip(s.test.features().axis_iter(Axis(0))) {
            assert!((a.dot(&a) - b.dot(&b)).abs() < 1e-9);
        }
        assert_ne!(s.test.features(), p.test.features());
    }
}
