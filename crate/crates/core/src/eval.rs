//! Detection metrics against a reference mask.
//!
//! Binary fields are [`ScalarField`]s where any nonzero value is oil.

use serde::Serialize;
use thiserror::Error;

use crate::cube::ScalarField;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("reference mask contains only one class")]
    SingleClassTruth,
    #[error("field is {actual_w}x{actual_h}, reference is {expected_w}x{expected_h}")]
    SizeMismatch {
        expected_w: usize,
        expected_h: usize,
        actual_w: usize,
        actual_h: usize,
    },
}

fn check_shape(field: &ScalarField, truth: &ScalarField) -> Result<(), EvalError> {
    if field.same_shape(truth) {
        Ok(())
    } else {
        Err(EvalError::SizeMismatch {
            expected_w: truth.width(),
            expected_h: truth.height(),
            actual_w: field.width(),
            actual_h: field.height(),
        })
    }
}

fn included(active: Option<&[bool]>, i: usize) -> bool {
    active.is_none_or(|a| a[i])
}

/// Twice the Mann–Whitney U statistic, together with the positive and
/// negative counts. Keeping it doubled keeps the tie halves integral.
pub fn mann_whitney_doubled(scores: &[f64], positive: &[bool]) -> (u128, u64, u64) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let (mut neg_below, mut doubled) = (0u64, 0u128);
    let (mut total_pos, mut total_neg) = (0u64, 0u64);
    let mut start = 0;
    while start < order.len() {
        let s = scores[order[start]];
        let mut end = start;
        let (mut pos, mut neg) = (0u64, 0u64);
        while end < order.len() && scores[order[end]] == s {
            if positive[order[end]] {
                pos += 1;
            } else {
                neg += 1;
            }
            end += 1;
        }
        doubled += 2 * pos as u128 * neg_below as u128 + pos as u128 * neg as u128;
        neg_below += neg;
        total_pos += pos;
        total_neg += neg;
        start = end;
    }
    (doubled, total_pos, total_neg)
}

/// Area under the ROC curve of `scores` against `truth`, ties counted ½.
pub fn auc(scores: &ScalarField, truth: &ScalarField) -> Result<f64, EvalError> {
    auc_within(scores, truth, None)
}

/// [`auc`] restricted to pixels where `active` is true.
pub fn auc_within(
    scores: &ScalarField,
    truth: &ScalarField,
    active: Option<&[bool]>,
) -> Result<f64, EvalError> {
    check_shape(scores, truth)?;
    let (s, t): (Vec<f64>, Vec<bool>) = scores
        .values()
        .iter()
        .zip(truth.values())
        .enumerate()
        .filter(|&(i, _)| included(active, i))
        .map(|(_, (&s, &t))| (s, t != 0.0))
        .unzip();
    let (doubled, pos, neg) = mann_whitney_doubled(&s, &t);
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassTruth);
    }
    Ok(doubled as f64 / (2.0 * pos as f64 * neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    /// `None` when the report was built from a binary map alone.
    pub auc: Option<f64>,
    pub dp: f64,
    pub counts: Counts,
    /// Set when the detection map has no positives; `dp` is then 0.
    pub no_positive: bool,
}

/// Detection precision `TP / (TP + FP)` of a binary map.
pub fn dp(detection: &ScalarField, truth: &ScalarField) -> Result<EvalReport, EvalError> {
    dp_within(detection, truth, None)
}

/// [`dp`] tallied over pixels where `active` is true.
pub fn dp_within(
    detection: &ScalarField,
    truth: &ScalarField,
    active: Option<&[bool]>,
) -> Result<EvalReport, EvalError> {
    check_shape(detection, truth)?;
    let mut c = Counts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (i, (&d, &t)) in detection.values().iter().zip(truth.values()).enumerate() {
        if !included(active, i) {
            continue;
        }
        match (d != 0.0, t != 0.0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let detected = c.tp + c.fp;
    Ok(EvalReport {
        auc: None,
        dp: if detected == 0 { 0.0 } else { c.tp as f64 / detected as f64 },
        counts: c,
        no_positive: detected == 0,
    })
}

/// Both metrics: AUC on the continuous map, DP on the binary one.
pub fn evaluate(
    probability: &ScalarField,
    detection: &ScalarField,
    truth: &ScalarField,
    active: Option<&[bool]>,
) -> Result<EvalReport, EvalError> {
    let mut report = dp_within(detection, truth, active)?;
    report.auc = Some(auc_within(probability, truth, active)?);
    Ok(report)
}

/// Number of positive pixels none of whose 4-neighbours is positive.
pub fn isolated_positives(detection: &ScalarField) -> usize {
    let (w, h) = (detection.width(), detection.height());
    let on = |x: usize, y: usize| detection.get(x, y) != 0.0;
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            if !on(x, y) {
                continue;
            }
            let neighbour = (x > 0 && on(x - 1, y))
                || (x + 1 < w && on(x + 1, y))
                || (y > 0 && on(x, y - 1))
                || (y + 1 < h && on(x, y + 1));
            if !neighbour {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> ScalarField {
        ScalarField::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn small_example() {
        let a = auc(&row(&[0.9, 0.8, 0.4, 0.3]), &row(&[1.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(a, 0.75);
    }

    #[test]
    fn separating_and_tied() {
        let t = row(&[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(auc(&row(&[0.1, 0.2, 0.3, 0.4]), &t).unwrap(), 1.0);
        assert_eq!(auc(&row(&[0.5; 4]), &t).unwrap(), 0.5);
        assert_eq!(auc(&row(&[0.4, 0.3, 0.2, 0.1]), &t).unwrap(), 0.0);
    }

    #[test]
    fn single_class_and_shape_errors() {
        assert_eq!(auc(&row(&[0.1, 0.2]), &row(&[1.0, 1.0])), Err(EvalError::SingleClassTruth));
        assert!(matches!(auc(&row(&[0.1]), &row(&[1.0, 0.0])), Err(EvalError::SizeMismatch { .. })));
        assert!(matches!(dp(&row(&[0.1]), &row(&[1.0, 0.0])), Err(EvalError::SizeMismatch { .. })));
    }

    #[test]
    fn precision_examples() {
        let r = dp(&row(&[1.0, 1.0, 1.0, 1.0, 0.0]), &row(&[1.0, 1.0, 1.0, 0.0, 1.0])).unwrap();
        assert_eq!((r.counts.tp, r.counts.fp, r.counts.fn_, r.counts.tn), (3, 1, 1, 0));
        assert_eq!(r.dp, 0.75);
        assert!(!r.no_positive);

        let t = row(&[1.0, 0.0, 1.0]);
        let r = dp(&t, &t).unwrap();
        assert_eq!((r.dp, r.counts.fp), (1.0, 0));

        let r = dp(&row(&[0.0; 3]), &t).unwrap();
        assert_eq!(r.dp, 0.0);
        assert!(r.no_positive);
    }

    #[test]
    fn active_mask_restricts_counts() {
        let d = row(&[1.0, 1.0, 0.0, 0.0]);
        let t = row(&[1.0, 0.0, 0.0, 1.0]);
        let r = evaluate(&row(&[0.9, 0.8, 0.1, 0.2]), &d, &t, Some(&[true, false, true, true])).unwrap();
        assert_eq!(r.counts.total(), 3);
        assert_eq!(r.dp, 1.0);
        assert_eq!(r.auc, Some(1.0));
    }

    #[test]
    fn isolated_counts() {
        #[rustfmt::skip]
        let f = ScalarField::new(4, 3, vec![
            1.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
        ]).unwrap();
        assert_eq!(isolated_positives(&f), 2);
        assert_eq!(isolated_positives(&ScalarField::filled(3, 3, 1.0)), 0);
        assert_eq!(isolated_positives(&ScalarField::filled(1, 1, 1.0)), 1);
    }

    proptest! {
        #[test]
        fn rank_only_and_complementary(
            pairs in prop::collection::vec((-5i32..5, any::<bool>()), 2..60)
        ) {
            let s: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let t: Vec<f64> = pairs.iter().map(|p| if p.1 { 1.0 } else { 0.0 }).collect();
            prop_assume!(t.contains(&0.0) && t.contains(&1.0));
            let (s, t) = (row(&s), row(&t));
            let a = auc(&s, &t).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            let b = auc(&s.map(|v| (v / 3.0).exp() * 7.0 - 2.0), &t).unwrap();
            prop_assert_eq!(a, b);
            let c = auc(&s.map(|v| -v), &t).unwrap();
            prop_assert!((a + c - 1.0).abs() < 1e-15);
        }
    }
}
