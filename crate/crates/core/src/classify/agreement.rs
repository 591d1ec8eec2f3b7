use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::EthicalConcernCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub n: usize,
}

/// Multi-class Cohen's kappa; chance agreement comes from each rater's
/// marginal label frequencies. When chance agreement is total (both raters
/// used one and the same label throughout) kappa is reported as 1.
pub fn cohens_kappa<L: Eq + Hash>(labels_a: &[L], labels_b: &[L]) -> Result<AgreementReport> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::InvalidInput(format!(
            "label lists differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::InvalidInput("label lists are empty".into()));
    }
    let n = labels_a.len();
    let mut agree = 0usize;
    let mut marg: HashMap<&L, (usize, usize)> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        if a == b {
            agree += 1;
        }
        marg.entry(a).or_default().0 += 1;
        marg.entry(b).or_default().1 += 1;
    }
    let nf = n as f64;
    let po = agree as f64 / nf;
    // Sum in a fixed order so the result does not depend on hash iteration.
    let mut products: Vec<f64> = marg.values().map(|&(ca, cb)| (ca as f64 / nf) * (cb as f64 / nf)).collect();
    products.sort_by(|x, y| x.total_cmp(y));
    let pe: f64 = products.iter().sum();
    let kappa = if (1.0 - pe).abs() < f64::EPSILON {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    };
    Ok(AgreementReport {
        kappa,
        observed_agreement: po,
        expected_agreement: pe,
        n,
    })
}

/// Keeps the categories whose manual validation reached `keep_threshold`
/// valid judgments out of exactly `per_category_n`.
pub fn evaluate_category_labels(
    judgments: &[(EthicalConcernCategory, bool)],
    per_category_n: usize,
    keep_threshold: usize,
) -> Result<BTreeSet<EthicalConcernCategory>> {
    let mut tally: BTreeMap<EthicalConcernCategory, (usize, usize)> = BTreeMap::new();
    for &(c, valid) in judgments {
        let e = tally.entry(c).or_default();
        e.0 += 1;
        if valid {
            e.1 += 1;
        }
    }
    let mut kept = BTreeSet::new();
    for (c, (total, valid)) in tally {
        if total != per_category_n {
            return Err(Error::InvalidInput(format!(
                "{c} has {total} judgments, expected {per_category_n}"
            )));
        }
        if valid >= keep_threshold {
            kept.insert(c);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use EthicalConcernCategory as C;

    #[test]
    fn identical_lists() {
        let r = cohens_kappa(&[1, 2, 3, 1], &[1, 2, 3, 1]).unwrap();
        assert_eq!(r.kappa, 1.0);
    }

    #[test]
    fn hand_fixture() {
        let r = cohens_kappa(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(r.observed_agreement, 0.5);
        assert_eq!(r.expected_agreement, 0.5);
        assert_eq!(r.kappa, 0.0);
    }

    #[test]
    fn single_shared_label_counts_as_full_agreement() {
        let r = cohens_kappa(&["x"; 5], &["x"; 5]).unwrap();
        assert_eq!(r.kappa, 1.0);
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(cohens_kappa(&[1], &[1, 2]).is_err());
        assert!(cohens_kappa::<u8>(&[], &[]).is_err());
    }

    fn judgments(c: C, valid: usize) -> Vec<(C, bool)> {
        (0..10).map(|i| (c, i < valid)).collect()
    }

    #[test]
    fn eight_of_ten_rule() {
        let mut j = judgments(C::Addiction, 6);
        j.extend(judgments(C::SocialIsolation, 10));
        j.extend(judgments(C::Scam, 8));
        let kept = evaluate_category_labels(&j, 10, 8).unwrap();
        assert!(!kept.contains(&C::Addiction));
        assert!(kept.contains(&C::SocialIsolation));
        assert!(kept.contains(&C::Scam));
    }

    #[test]
    fn wrong_judgment_count() {
        let mut j = judgments(C::Privacy, 9);
        j.pop();
        assert!(evaluate_category_labels(&j, 10, 8).is_err());
    }

    proptest! {
        #[test]
        fn kappa_properties(pairs in prop::collection::vec((0u8..4, 0u8..4), 1..60)) {
            let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            prop_assert_eq!(cohens_kappa(&a, &a).unwrap().kappa, 1.0);
            let ab = cohens_kappa(&a, &b).unwrap().kappa;
            let ba = cohens_kappa(&b, &a).unwrap().kappa;
            prop_assert!((ab - ba).abs() < 1e-12);
            let relabel = |x: &u8| (x + 1) % 4 + 10;
            let ra: Vec<u8> = a.iter().map(relabel).collect();
            let rb: Vec<u8> = b.iter().map(relabel).collect();
            prop_assert!((cohens_kappa(&ra, &rb).unwrap().kappa - ab).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }
    }
}
