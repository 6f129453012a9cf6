//! Confusion counts and the rates used to rank one-class models: TPR, TNR,
//! their geometric mean, and the number of samples flagged for review.

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Decision;

/// Rates are `None` when undefined (no positives for TPR, no negatives for
/// TNR; GM whenever either is undefined).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub gm: Option<f64>,
    /// `tp + fp`: samples routed to an expert.
    pub flagged: usize,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let rate = |hit: usize, miss: usize| {
            let total = hit + miss;
            (total > 0).then(|| hit as f64 / total as f64)
        };
        let tpr = rate(tp, fn_);
        let tnr = rate(tn, fp);
        let gm = match (tpr, tnr) {
            (Some(a), Some(b)) => Some((a * b).sqrt()),
            _ => None,
        };
        EvalReport {
            tp,
            fp,
            tn,
            fn_,
            tpr,
            tnr,
            gm,
            flagged: tp + fp,
        }
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    /// `TPR GM TP TP+FP` with rates to three decimals; `-` marks an
    /// undefined rate.
    pub fn table_row(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        format!(
            "{} {} {} {}",
            fmt(self.tpr),
            fmt(self.gm),
            self.tp,
            self.flagged
        )
    }
}

/// Joins predictions with ground truth by sample id and tallies the
/// confusion table.
pub fn evaluate<S, T>(predictions: &[(S, Decision)], truth: &[(T, bool)]) -> Result<EvalReport>
where
    S: AsRef<str>,
    T: AsRef<str>,
{
    if predictions.is_empty() && truth.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    if predictions.len() != truth.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions vs {} truth entries",
            predictions.len(),
            truth.len()
        )));
    }
    let mut index_of: FxHashMap<&str, usize> = FxHashMap::default();
    index_of.reserve(truth.len());
    for (i, (id, _)) in truth.iter().enumerate() {
        if index_of.insert(id.as_ref(), i).is_some() {
            return Err(Error::DuplicateId(id.as_ref().to_string()));
        }
    }
    let mut seen = vec![false; truth.len()];
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (id, decision) in predictions {
        let id = id.as_ref();
        let i = *index_of
            .get(id)
            .ok_or_else(|| Error::IdMismatch(format!("{id:?} has no ground truth")))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        match (decision.is_target(), truth[i].1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, tn, fn_))
}
