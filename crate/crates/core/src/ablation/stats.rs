//! Aggregation statistics over repeated trials.

use serde::{Deserialize, Serialize};

use super::AblationError;
use crate::wfdb::Lead;

/// Mean / sample std-dev / median over per-trial test accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator). Zero for n = 1, with
    /// `degenerate_std` set.
    pub std_dev: f64,
    pub median: f64,
    pub degenerate_std: bool,
    /// Per-trial values retained so every statistic stays recomputable.
    pub values: Vec<f64>,
}

/// Aggregates raw accuracy percentages.
pub fn aggregate(values: &[f64]) -> Result<AggregateStats, AblationError> {
    if values.is_empty() {
        return Err(AblationError::EmptyResults);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let (std_dev, degenerate_std) = if n == 1 {
        (0.0, true)
    } else {
        let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        ((ss / (n - 1) as f64).sqrt(), false)
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("accuracies are finite"));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(AggregateStats {
        n,
        mean,
        std_dev,
        median,
        degenerate_std,
        values: values.to_vec(),
    })
}

/// Aggregates the `k` best trials, sorting by accuracy descending with ties
/// broken by lower trial index.
pub fn top_k(values: &[f64], k: usize) -> Result<AggregateStats, AblationError> {
    if k > values.len() {
        return Err(AblationError::KTooLarge {
            k,
            n: values.len(),
        });
    }
    let mut indexed: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
    indexed.sort_by(|(ia, a), (ib, b)| {
        b.partial_cmp(a)
            .expect("accuracies are finite")
            .then(ia.cmp(ib))
    });
    let best: Vec<f64> = indexed.into_iter().take(k).map(|(_, v)| v).collect();
    aggregate(&best)
}

/// Lead ranking over singleton-sweep stats, plus the pair grid the paper
/// builds from the five best channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadRanking {
    /// All leads, best first: descending mean, ties by median then name.
    pub ordered: Vec<Lead>,
    /// The 10 unordered pairs over the top five leads.
    pub candidate_pairs: Vec<(Lead, Lead)>,
}

pub fn rank_leads(stats: &[(Lead, AggregateStats)]) -> LeadRanking {
    let mut ranked: Vec<&(Lead, AggregateStats)> = stats.iter().collect();
    ranked.sort_by(|(la, a), (lb, b)| {
        b.mean
            .partial_cmp(&a.mean)
            .expect("means are finite")
            .then(
                b.median
                    .partial_cmp(&a.median)
                    .expect("medians are finite"),
            )
            .then(la.name().cmp(lb.name()))
    });
    let ordered: Vec<Lead> = ranked.iter().map(|(l, _)| *l).collect();
    let top5 = &ordered[..ordered.len().min(5)];
    let mut candidate_pairs = Vec::new();
    for i in 0..top5.len() {
        for j in i + 1..top5.len() {
            candidate_pairs.push((top5[i], top5[j]));
        }
    }
    LeadRanking {
        ordered,
        candidate_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_values() {
        let stats = aggregate(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(stats.mean, 2.0);
        assert_eq!(stats.median, 2.0);
        assert_eq!(stats.std_dev, 1.0);
        assert!(!stats.degenerate_std);
    }

    #[test]
    fn single_value_flags_degenerate_std() {
        let stats = aggregate(&[95.0]).unwrap();
        assert_eq!(stats.mean, 95.0);
        assert_eq!(stats.median, 95.0);
        assert_eq!(stats.std_dev, 0.0);
        assert!(stats.degenerate_std);
    }

    #[test]
    fn even_count_medians_average_the_middle_pair() {
        let stats = aggregate(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(stats.median, 2.5);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(aggregate(&[]), Err(AblationError::EmptyResults)));
    }

    #[test]
    fn top_k_of_n_equals_aggregate() {
        let values = [90.0, 99.0, 95.0, 92.5];
        let all = aggregate(&values).unwrap();
        let top = top_k(&values, values.len()).unwrap();
        assert_eq!(all.mean, top.mean);
        assert_eq!(all.median, top.median);
        assert_eq!(all.std_dev, top.std_dev);
    }

    #[test]
    fn top_k_hand_sorted() {
        let stats = top_k(&[90.0, 99.0, 95.0], 2).unwrap();
        assert_eq!(stats.mean, 97.0);
        assert_eq!(stats.values, vec![99.0, 95.0]);
    }

    #[test]
    fn top_k_means_are_monotone_in_k() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(40);
        let values: Vec<f64> = (0..100).map(|_| rng.gen_range(50.0..100.0)).collect();
        let m20 = top_k(&values, 20).unwrap().mean;
        let m50 = top_k(&values, 50).unwrap().mean;
        let all = aggregate(&values).unwrap().mean;
        assert!(m20 >= m50 && m50 >= all);
    }

    #[test]
    fn top_k_rejects_oversized_k() {
        assert!(matches!(
            top_k(&[1.0], 2),
            Err(AblationError::KTooLarge { k: 2, n: 1 })
        ));
    }

    #[test]
    fn ranking_is_descending_and_deterministic() {
        let mk = |vals: &[f64]| aggregate(vals).unwrap();
        let stats = vec![
            (Lead::I, mk(&[90.0, 90.0])),
            (Lead::Ii, mk(&[85.0, 85.0])),
        ];
        assert_eq!(rank_leads(&stats).ordered, vec![Lead::I, Lead::Ii]);

        // All-equal means: name order.
        let stats: Vec<(Lead, AggregateStats)> = [Lead::Vz, Lead::Ii, Lead::Avf]
            .iter()
            .map(|&l| (l, mk(&[88.0])))
            .collect();
        assert_eq!(
            rank_leads(&stats).ordered,
            vec![Lead::Avf, Lead::Ii, Lead::Vz]
        );
    }

    #[test]
    fn top5_pair_grid_has_ten_pairs() {
        let mk = |v: f64| aggregate(&[v]).unwrap();
        let stats = vec![
            (Lead::V5, mk(91.13)),
            (Lead::V6, mk(90.84)),
            (Lead::Vx, mk(89.64)),
            (Lead::Vz, mk(89.41)),
            (Lead::Ii, mk(89.32)),
            (Lead::Avf, mk(87.44)),
            (Lead::V1, mk(87.15)),
        ];
        let ranking = rank_leads(&stats);
        assert_eq!(ranking.candidate_pairs.len(), 10);
        assert!(ranking.candidate_pairs.contains(&(Lead::V6, Lead::Vz)));
        assert!(!ranking
            .candidate_pairs
            .iter()
            .any(|(a, b)| *a == Lead::Avf || *b == Lead::Avf));
    }
}
