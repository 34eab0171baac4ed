use rand::seq::SliceRandom;
use std::collections::BTreeMap;

use super::EvalError;
use crate::profiles::{ClinicalStatus, DeceptionStrategy};
use crate::rng::stream;
use crate::session::CorpusRecord;

/// Indices of a sample with exactly `strata[s]` records per deception
/// strategy. Within a stratum the draw is spread as evenly as capacity
/// allows over clinical statuses; leftover slots go to statuses with spare
/// records in seeded order. Returned indices are ascending.
pub fn stratified_sample(
    records: &[CorpusRecord],
    strata: &BTreeMap<DeceptionStrategy, usize>,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    let keys: Vec<(DeceptionStrategy, ClinicalStatus)> =
        records.iter().map(|r| (r.profile.honesty.deception_strategy, r.profile.ground_truth.status)).collect();
    sample_keys(&keys, strata, seed)
}

pub(crate) fn sample_keys(
    keys: &[(DeceptionStrategy, ClinicalStatus)],
    strata: &BTreeMap<DeceptionStrategy, usize>,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    let mut picked = Vec::new();
    for (&strategy, &want) in strata {
        let mut groups: BTreeMap<ClinicalStatus, Vec<usize>> = BTreeMap::new();
        for (i, (s, status)) in keys.iter().enumerate() {
            if *s == strategy {
                groups.entry(*status).or_default().push(i);
            }
        }
        let available: usize = groups.values().map(Vec::len).sum();
        if available < want {
            return Err(EvalError::InsufficientStratum {
                stratum: strategy.as_str().to_string(),
                requested: want,
                available,
            });
        }
        let mut rng = stream(seed, &format!("sample:{}", strategy.as_str()), 0);
        for members in groups.values_mut() {
            members.shuffle(&mut rng);
        }
        let mut order: Vec<ClinicalStatus> = groups.keys().copied().collect();
        order.shuffle(&mut rng);

        // Highest level L with sum(min(size, L)) <= want, then one more slot
        // to each group with spare capacity until the quota is met.
        let sizes: Vec<usize> = order.iter().map(|s| groups[s].len()).collect();
        let filled = |level: usize| sizes.iter().map(|&n| n.min(level)).sum::<usize>();
        let mut level = 0;
        while level < want && filled(level + 1) <= want {
            level += 1;
        }
        let mut alloc: Vec<usize> = sizes.iter().map(|&n| n.min(level)).collect();
        let mut left = want - alloc.iter().sum::<usize>();
        for (a, &n) in alloc.iter_mut().zip(&sizes) {
            if left == 0 {
                break;
            }
            if *a < n {
                *a += 1;
                left -= 1;
            }
        }
        for (status, take) in order.iter().zip(alloc) {
            picked.extend_from_slice(&groups[status][..take]);
        }
    }
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const STRATEGIES: [DeceptionStrategy; 3] =
        [DeceptionStrategy::Frankness, DeceptionStrategy::Concealment, DeceptionStrategy::Exaggeration];

    fn corpus(n: usize) -> Vec<(DeceptionStrategy, ClinicalStatus)> {
        (0..n).map(|i| (STRATEGIES[i % 3], ClinicalStatus::ALL[(i / 3) % 4])).collect()
    }

    #[test]
    fn status_balance_within_stratum() {
        let keys = corpus(120);
        let strata = BTreeMap::from([(DeceptionStrategy::Concealment, 8)]);
        let got = sample_keys(&keys, &strata, 1).unwrap();
        let mut per_status = BTreeMap::new();
        for i in got {
            *per_status.entry(keys[i].1).or_insert(0) += 1;
        }
        assert!(per_status.values().all(|c| *c == 2), "{per_status:?}");
    }

    #[test]
    fn short_stratum_is_named() {
        let strata = BTreeMap::from([(DeceptionStrategy::Exaggeration, 50)]);
        let err = sample_keys(&corpus(30), &strata, 1).unwrap_err();
        assert_eq!(err, EvalError::InsufficientStratum { stratum: "Exaggeration".into(), requested: 50, available: 10 });
    }

    proptest! {
        #[test]
        fn counts_exact_and_seed_stable(seed in any::<u64>(), c in 0usize..14, e in 0usize..14, f in 0usize..14) {
            let keys = corpus(42);
            let strata = BTreeMap::from([
                (DeceptionStrategy::Concealment, c),
                (DeceptionStrategy::Exaggeration, e),
                (DeceptionStrategy::Frankness, f),
            ]);
            let a = sample_keys(&keys, &strata, seed).unwrap();
            prop_assert_eq!(&a, &sample_keys(&keys, &strata, seed).unwrap());
            for (s, want) in &strata {
                prop_assert_eq!(a.iter().filter(|&&i| keys[i].0 == *s).count(), *want);
            }
        }
    }
}
