//! Weak-supervision splitting.
//!
//! Builds the training protocol: a stratified 8:1:1 node partition, exactly
//! `m` labeled anomalies kept in the train portion, a contaminated unlabeled
//! pool whose hidden anomalies are recorded for audit but never shown to
//! training, and any leftover train anomalies removed from training use.
//! Validation and test keep full ground truth for metric computation only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Label, LabelSet};
use crate::rng::{sample_without_replacement, stream, StreamId};

/// Train/val/test partition with weak labels inside train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakSplit {
    /// All train nodes (includes labeled anomalies, the unlabeled pool and
    /// any discarded anomalies), ascending.
    pub train: Vec<u32>,
    pub val: Vec<u32>,
    pub test: Vec<u32>,
    /// The `m` anomalies whose labels training may see, ascending.
    pub labeled_anomalies: Vec<u32>,
    /// Unlabeled train pool: normals plus hidden anomalies, ascending.
    pub unlabeled_pool: Vec<u32>,
    /// Contamination audit record: pool members that are true anomalies.
    pub hidden_anomalies: Vec<u32>,
    /// Train anomalies removed from training use entirely.
    pub discarded_anomalies: Vec<u32>,
    pub seed: u64,
    pub m: usize,
    pub contamination: f64,
}

fn rounded(x: f64) -> usize {
    x.round() as usize
}

/// Stratified weak split.
///
/// Per label stratum, `round(ratio * len)` nodes go to val and test and the
/// remainder to train, preserving the anomaly rate before any label removal.
/// The contamination quota is `round(contamination * train_normals)` hidden
/// anomalies mixed into the unlabeled pool.
pub fn make_weak_split(
    labels: &LabelSet,
    m: usize,
    contamination: f64,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<WeakSplit> {
    let (r_train, r_val, r_test) = ratios;
    if !(r_train > 0.0 && r_val >= 0.0 && r_test >= 0.0) || (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must be nonnegative and sum to 1, got {ratios:?}")));
    }
    if !(0.0..1.0).contains(&contamination) {
        return Err(Error::Config(format!("contamination must be in [0,1), got {contamination}")));
    }
    if labels.iter().any(|l| l == Label::Unlabeled) {
        return Err(Error::Contract("weak split needs fully labeled ground truth".into()));
    }

    let mut rng = stream(seed, StreamId::Split);
    let mut parts: [Vec<u32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut train_anomalies = Vec::new();
    let mut train_normals = Vec::new();

    // strata in fixed order: anomalies then normals
    let anomalies = labels.anomalies();
    let normals: Vec<u32> = (0..labels.len() as u32)
        .filter(|&v| labels.get(v) == Label::Normal)
        .collect();
    for (stratum, is_anom) in [(&anomalies, true), (&normals, false)] {
        let shuffled = sample_without_replacement(stratum, stratum.len(), &mut rng);
        let n_val = rounded(r_val * stratum.len() as f64);
        let n_test = rounded(r_test * stratum.len() as f64);
        if n_val + n_test > stratum.len() {
            return Err(Error::Split(format!(
                "stratum of {} cannot supply {n_val} val + {n_test} test nodes",
                stratum.len()
            )));
        }
        let n_train = stratum.len() - n_val - n_test;
        parts[0].extend(&shuffled[..n_train]);
        parts[1].extend(&shuffled[n_train..n_train + n_val]);
        parts[2].extend(&shuffled[n_train + n_val..]);
        if is_anom {
            train_anomalies = shuffled[..n_train].to_vec();
        } else {
            train_normals = shuffled[..n_train].to_vec();
        }
    }

    let quota = rounded(contamination * train_normals.len() as f64);
    if train_anomalies.len() < m + quota {
        return Err(Error::Split(format!(
            "train partition holds {} anomalies but m={m} labeled + {quota} contamination are required \
             (short by {})",
            train_anomalies.len(),
            m + quota - train_anomalies.len()
        )));
    }

    // train_anomalies is already in shuffled order: first m stay labeled,
    // the next `quota` hide in the pool, the rest leave training use.
    let mut labeled: Vec<u32> = train_anomalies[..m].to_vec();
    let mut hidden: Vec<u32> = train_anomalies[m..m + quota].to_vec();
    let mut discarded: Vec<u32> = train_anomalies[m + quota..].to_vec();
    let mut pool: Vec<u32> = train_normals.iter().copied().chain(hidden.iter().copied()).collect();

    let [mut train, mut val, mut test] = parts;
    for list in [&mut train, &mut val, &mut test, &mut labeled, &mut hidden, &mut discarded, &mut pool] {
        list.sort_unstable();
    }

    Ok(WeakSplit {
        train,
        val,
        test,
        labeled_anomalies: labeled,
        unlabeled_pool: pool,
        hidden_anomalies: hidden,
        discarded_anomalies: discarded,
        seed,
        m,
        contamination,
    })
}

impl WeakSplit {
    /// Panic-on-violation structural audit, used by tests.
    pub fn check_invariants(&self, labels: &LabelSet) {
        let n = labels.len();
        let mut seen = vec![0u8; n];
        for part in [&self.train, &self.val, &self.test] {
            for &v in part {
                seen[v as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "partitions must be disjoint and exhaustive");
        for &v in &self.labeled_anomalies {
            assert!(self.train.binary_search(&v).is_ok());
            assert_eq!(labels.get(v), Label::Anomaly);
        }
        for &v in &self.hidden_anomalies {
            assert!(self.unlabeled_pool.binary_search(&v).is_ok());
            assert_eq!(labels.get(v), Label::Anomaly);
        }
        for &v in &self.unlabeled_pool {
            assert!(
                self.labeled_anomalies.binary_search(&v).is_err(),
                "labeled anomaly {v} leaked into the pool"
            );
        }
    }
}
