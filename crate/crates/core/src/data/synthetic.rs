use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;

/// Center of class `class` in a `feature_dim`-dimensional mixture.
///
/// Class `k` sits on axis `k mod feature_dim`, on the positive side for the
/// first `feature_dim` classes and the negative side for the next
/// `feature_dim`, at radius `separation / sqrt(2)`. Up to `2 · feature_dim`
/// classes, every pair of centers is at least `separation` apart. Further
/// classes reuse the axes on shells of growing radius.
pub fn class_center(class: usize, feature_dim: usize, separation: f64) -> Vec<f64> {
    let block = class / feature_dim;
    let sign = if block.is_multiple_of(2) { 1.0 } else { -1.0 };
    let radius = separation / std::f64::consts::SQRT_2 * (1.0 + (block / 2) as f64 * 0.5);
    let mut c = vec![0.0; feature_dim];
    c[class % feature_dim] = sign * radius;
    c
}

/// Isotropic unit-variance Gaussian mixture with one component per class.
///
/// Rows are grouped by class: `samples_per_class` rows of class 0, then
/// class 1, and so on.
pub fn generate_synthetic(
    num_classes: usize,
    feature_dim: usize,
    samples_per_class: usize,
    seed: u64,
    class_separation: f64,
) -> Result<LabeledDataset> {
    if num_classes < 2 {
        return Err(Error::field("dataset.num_classes", "num_classes must be >= 2"));
    }
    if feature_dim == 0 {
        return Err(Error::field("dataset.feature_dim", "feature_dim must be > 0"));
    }
    if samples_per_class == 0 {
        return Err(Error::field("dataset.samples_per_class", "samples_per_class must be > 0"));
    }
    if class_separation <= 0.0 || !class_separation.is_finite() {
        return Err(Error::field("dataset.class_separation", "class_separation must be > 0"));
    }
    let rows = num_classes * samples_per_class;
    let mut features = Array2::zeros((rows, feature_dim));
    let mut labels = Vec::with_capacity(rows);
    let mut rng = rng::stream(seed, "synthetic", &[]);
    for class in 0..num_classes {
        let center = class_center(class, feature_dim, class_separation);
        for s in 0..samples_per_class {
            let mut row = features.row_mut(class * samples_per_class + s);
            for (v, c) in row.iter_mut().zip(&center) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = c + z;
            }
            labels.push(class);
        }
    }
    LabeledDataset::new(features, labels, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_sized() {
        let d = generate_synthetic(3, 4, 50, 1, 3.0).unwrap();
        assert_eq!(d.len(), 150);
        assert_eq!(d.feature_dim(), 4);
        assert_eq!(d.class_counts(), vec![50, 50, 50]);
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(2, 2, 100, 9, 10.0).unwrap();
        let b = generate_synthetic(2, 2, 100, 9, 10.0).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(2, 2, 100, 10, 10.0).unwrap();
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn centers_are_separated() {
        for dim in 1..5 {
            let centers: Vec<_> = (0..2 * dim).map(|k| class_center(k, dim, 4.0)).collect();
            for i in 0..centers.len() {
                for j in i + 1..centers.len() {
                    let d2: f64 = centers[i].iter().zip(&centers[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    assert!(d2.sqrt() >= 4.0 - 1e-12, "dim {dim} pair {i},{j}");
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(generate_synthetic(1, 2, 10, 0, 1.0).is_err());
        assert!(generate_synthetic(2, 0, 10, 0, 1.0).is_err());
        assert!(generate_synthetic(2, 2, 0, 0, 1.0).is_err());
        assert!(generate_synthetic(2, 2, 10, 0, 0.0).is_err());
    }
}
