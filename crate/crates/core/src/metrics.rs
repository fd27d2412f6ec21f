//! Precision, recall and F1 of predicted merges against ground truth.

use std::collections::BTreeSet;

use crate::equiv::{EquivRel, MergePair};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Scores a set of unordered predicted pairs. Pairs must be normalized.
pub fn score_pairs<T: Ord>(predicted: &BTreeSet<T>, truth: &BTreeSet<T>) -> Scores {
    let hits = predicted.intersection(truth).count() as f64;
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    let precision = match (predicted.is_empty(), truth.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => hits / predicted.len() as f64,
    };
    Scores {
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

/// Every non-reflexive pair of `e` counts as a predicted merge.
pub fn score(e: &EquivRel, truth: &BTreeSet<(u32, u32)>) -> Scores {
    let predicted: BTreeSet<(u32, u32)> = e.pairs().into_iter().collect();
    let truth: BTreeSet<(u32, u32)> = truth
        .iter()
        .filter(|(a, b)| a != b)
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    score_pairs(&predicted, &truth)
}

/// Scores object merges, and cell merges too when `cells` is set.
pub fn score_merges(predicted: &[MergePair], truth: &[MergePair], cells: bool) -> Scores {
    let keep = |p: &&MergePair| !p.is_reflexive() && (cells || p.is_object());
    let norm = |p: &MergePair| match *p {
        MergePair::Objects(a, b) => MergePair::objects(a, b),
        MergePair::Cells(a, b) => MergePair::cells(a, b),
    };
    let p: BTreeSet<MergePair> = predicted.iter().filter(keep).map(norm).collect();
    let t: BTreeSet<MergePair> = truth.iter().filter(keep).map(norm).collect();
    score_pairs(&p, &t)
}
