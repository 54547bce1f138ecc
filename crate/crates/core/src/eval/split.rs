use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Train / validation / test index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn validate_ratios(ratios: [f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::param(format!("split ratios must all be > 0, got {ratios:?}")));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("split ratios must sum to 1, got {ratios:?}")));
    }
    Ok(())
}

/// Partitions whole scenarios, stratified on their attack intensity `k` so
/// each split holds every `k` value. Within a stratum of size `s`, validation
/// and test each take `round(s * ratio)` and training keeps the rest.
///
/// `balance` is a secondary attribute (one value per scenario) spread evenly
/// over the splits inside each stratum: members are shuffled per attribute
/// value and dealt out round-robin before the stratum is cut.
pub fn split_scenarios<R: Rng + ?Sized>(ks: &[f64], balance: &[f64], ratios: [f64; 3], rng: &mut R) -> Result<Split> {
    validate_ratios(ratios)?;
    if balance.len() != ks.len() {
        return Err(Error::shape(format!("{} balance values for {} scenarios", balance.len(), ks.len())));
    }
    let mut strata: BTreeMap<u64, BTreeMap<u64, Vec<usize>>> = BTreeMap::new();
    for (i, (k, b)) in ks.iter().zip(balance).enumerate() {
        strata.entry(k.to_bits()).or_default().entry(b.to_bits()).or_default().push(i);
    }
    let mut split = Split {
        train: vec![],
        val: vec![],
        test: vec![],
    };
    for (bits, subs) in strata {
        let mut subs: Vec<Vec<usize>> = subs.into_values().collect();
        let s: usize = subs.iter().map(Vec::len).sum();
        let n_val = (s as f64 * ratios[1]).round() as usize;
        let n_test = (s as f64 * ratios[2]).round() as usize;
        if n_val == 0 || n_test == 0 || n_val + n_test >= s {
            return Err(Error::input(format!(
                "k = {} has only {s} scenarios; too few to place one in every split",
                f64::from_bits(bits)
            )));
        }
        for sub in &mut subs {
            sub.shuffle(rng);
        }
        subs.shuffle(rng);
        let longest = subs.iter().map(Vec::len).max().unwrap_or(0);
        let members: Vec<usize> = (0..longest)
            .flat_map(|j| subs.iter().filter_map(move |sub| sub.get(j).copied()))
            .collect();
        split.val.extend_from_slice(&members[..n_val]);
        split.test.extend_from_slice(&members[n_val..n_val + n_test]);
        split.train.extend_from_slice(&members[n_val + n_test..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ks(per_k: usize) -> Vec<f64> {
        let grid = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        (0..per_k * grid.len()).map(|i| grid[i % grid.len()]).collect()
    }

    fn balance(k: &[f64]) -> Vec<f64> {
        (0..k.len()).map(|i| if (i / 6) % 2 == 0 { 0.5 } else { 1.0 }).collect()
    }

    #[test]
    fn balance_attribute_is_spread_evenly() {
        let k = ks(18);
        let b = balance(&k);
        for seed in 0..20 {
            let s = split_scenarios(&k, &b, [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for g in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
                for part in [&s.val, &s.test] {
                    let half = part.iter().filter(|&&i| k[i] == g && b[i] == 0.5).count();
                    let full = part.iter().filter(|&&i| k[i] == g && b[i] == 1.0).count();
                    assert_eq!((half, full), (2, 2));
                }
            }
        }
    }

    #[test]
    fn mismatched_balance_is_an_error() {
        assert!(split_scenarios(&ks(10), &[0.0; 3], [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn sixty_scenarios() {
        let s = split_scenarios(&ks(10), &[0.0; 60], [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (36, 12, 12));
    }

    #[test]
    fn every_k_in_every_split_and_disjoint() {
        let k = ks(18);
        let s = split_scenarios(&k, &balance(&k), [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for part in [&s.train, &s.val, &s.test] {
            for g in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
                assert!(part.iter().any(|&i| k[i] == g));
            }
        }
        let mut all: Vec<_> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..k.len()).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_partition() {
        let a = split_scenarios(&ks(10), &[0.0; 60], [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = split_scenarios(&ks(10), &[0.0; 60], [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_scenarios() {
        assert!(split_scenarios(&ks(2), &[0.0; 12], [0.6, 0.2, 0.2], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(split_scenarios(&ks(10), &[0.0; 60], [0.6, 0.3, 0.2], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
