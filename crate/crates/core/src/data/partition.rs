//! Dirichlet label-skew partitioning.
//!
//! For every class, the class's samples are shuffled and split across clients
//! in proportions drawn from `Dirichlet(α, ..., α)`. Small α concentrates each
//! class on few clients; large α approaches an even split. Each client's share
//! is then split into train/test shards stratified by label.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use super::dataset::{ClientPartition, LabeledDataset, ShiftTag};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Minimum samples a client must receive so both of its shards are non-empty.
pub const MIN_CLIENT_SAMPLES: usize = 2;

const MAX_DRAWS: u64 = 1000;

fn dirichlet(rng: &mut StreamRng, gamma: &Gamma<f64>, n: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return draws.into_iter().map(|g| g / sum).collect();
        }
    }
}

/// Splits `count` items into consecutive chunks proportional to `proportions`.
fn chunk_sizes(count: usize, proportions: &[f64]) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(proportions.len());
    let mut cum = 0.0;
    let mut prev = 0usize;
    for (i, p) in proportions.iter().enumerate() {
        cum += p;
        let end = if i + 1 == proportions.len() {
            count
        } else {
            ((cum * count as f64).floor() as usize).min(count)
        };
        let end = end.max(prev);
        sizes.push(end - prev);
        prev = end;
    }
    sizes
}

/// Client shares as per-client lists of per-class index lists.
fn draw_shares(
    by_class: &[Vec<usize>],
    num_clients: usize,
    gamma: &Gamma<f64>,
    seed: u64,
    attempt: u64,
) -> Vec<Vec<Vec<usize>>> {
    let mut rng = rng::stream(seed, "partition", &[attempt]);
    let mut shares = vec![vec![Vec::new(); by_class.len()]; num_clients];
    for (class, members) in by_class.iter().enumerate() {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        let props = dirichlet(&mut rng, gamma, num_clients);
        let mut start = 0;
        for (client, size) in chunk_sizes(members.len(), &props).into_iter().enumerate() {
            shares[client][class] = members[start..start + size].to_vec();
            start += size;
        }
    }
    shares
}

pub fn partition_non_iid(
    dataset: &LabeledDataset,
    num_clients: usize,
    dirichlet_alpha: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<Vec<ClientPartition>> {
    if num_clients < 2 {
        return Err(Error::field("num_clients", "num_clients must be >= 2"));
    }
    if dirichlet_alpha <= 0.0 || !dirichlet_alpha.is_finite() {
        return Err(Error::field("dirichlet_alpha", "dirichlet_alpha must be > 0"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::field("test_fraction", "test_fraction must be in (0, 1)"));
    }
    if dataset.len() < MIN_CLIENT_SAMPLES * num_clients {
        return Err(Error::config(format!(
            "infeasible split: {} samples cannot give client {} at least {MIN_CLIENT_SAMPLES} samples",
            dataset.len(),
            num_clients - 1
        )));
    }
    let gamma = Gamma::new(dirichlet_alpha, 1.0).map_err(|e| Error::config(format!("dirichlet: {e}")))?;
    let mut by_class = vec![Vec::new(); dataset.num_classes()];
    for (i, &y) in dataset.labels().iter().enumerate() {
        by_class[y].push(i);
    }

    let mut worst = (0, 0);
    for attempt in 0..MAX_DRAWS {
        let shares = draw_shares(&by_class, num_clients, &gamma, seed, attempt);
        let sizes: Vec<usize> = shares.iter().map(|s| s.iter().map(Vec::len).sum()).collect();
        let (starving, &fewest) = sizes
            .iter()
            .enumerate()
            .min_by_key(|&(_, s)| *s)
            .expect("at least two clients");
        if fewest >= MIN_CLIENT_SAMPLES {
            return Ok(shares
                .into_iter()
                .enumerate()
                .map(|(client_id, share)| split_client(dataset, client_id, share, test_fraction))
                .collect());
        }
        worst = (starving, fewest);
    }
    Err(Error::config(format!(
        "infeasible split: client {} receives only {} samples (needs {MIN_CLIENT_SAMPLES}) after {MAX_DRAWS} Dirichlet draws with alpha {dirichlet_alpha}",
        worst.0, worst.1
    )))
}

fn split_client(dataset: &LabeledDataset, client_id: usize, share: Vec<Vec<usize>>, test_fraction: f64) -> ClientPartition {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in &share {
        let n_test = (test_fraction * members.len() as f64).floor() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    if test.is_empty() {
        // every class was too small to contribute a test sample; move one
        // sample of the client's largest class
        let largest = share
            .iter()
            .enumerate()
            .max_by_key(|(c, m)| (m.len(), std::cmp::Reverse(*c)))
            .map(|(_, m)| m[0])
            .expect("client has samples");
        train.retain(|&i| i != largest);
        test.push(largest);
    }
    train.sort_unstable();
    test.sort_unstable();
    ClientPartition {
        client_id,
        train: dataset.subset(&train),
        test: dataset.subset(&test),
        shift: ShiftTag::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;

    #[test]
    fn chunking_covers_everything() {
        assert_eq!(chunk_sizes(10, &[0.5, 0.5]), vec![5, 5]);
        assert_eq!(chunk_sizes(7, &[0.0, 1.0, 0.0]), vec![0, 7, 0]);
        assert_eq!(chunk_sizes(3, &[0.33, 0.33, 0.34]).iter().sum::<usize>(), 3);
    }

    #[test]
    fn shards_nonempty_and_disjoint() {
        let d = generate_synthetic(3, 2, 40, 0, 3.0).unwrap();
        let parts = partition_non_iid(&d, 5, 0.5, 0.25, 4).unwrap();
        assert_eq!(parts.len(), 5);
        for p in &parts {
            assert!(!p.train.is_empty() && !p.test.is_empty());
        }
        let total: usize = parts.iter().map(|p| p.train.len() + p.test.len()).sum();
        assert_eq!(total, d.len());
    }

    #[test]
    fn split_is_stratified() {
        let d = generate_synthetic(2, 2, 100, 0, 3.0).unwrap();
        let parts = partition_non_iid(&d, 2, 1e6, 0.2, 1).unwrap();
        for p in &parts {
            let all: Vec<usize> = p.train.class_counts().iter().zip(p.test.class_counts()).map(|(a, b)| a + b).collect();
            for (c, &n) in all.iter().enumerate() {
                assert_eq!(p.test.class_counts()[c], (0.2 * n as f64).floor() as usize);
            }
        }
    }

    #[test]
    fn infeasible_split_names_client() {
        let d = generate_synthetic(2, 2, 2, 0, 3.0).unwrap();
        let err = partition_non_iid(&d, 3, 1.0, 0.2, 0).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("client"), "{err}");
    }

    #[test]
    fn argument_validation() {
        let d = generate_synthetic(2, 2, 20, 0, 3.0).unwrap();
        assert!(partition_non_iid(&d, 1, 1.0, 0.2, 0).is_err());
        assert!(partition_non_iid(&d, 2, 0.0, 0.2, 0).is_err());
        assert!(partition_non_iid(&d, 2, 1.0, 1.0, 0).is_err());
        assert!(partition_non_iid(&d, 2, 1.0, 0.0, 0).is_err());
    }
}
