use std::collections::BTreeMap;

use serde::Serialize;

use super::RunRecord;

/// Trial statistics of one (method, postproc, drop rate) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: String,
    pub postproc: String,
    pub drop_rate: f64,
    pub mean_accuracy: f64,
    /// Sample standard deviation; 0 when only one trial succeeded.
    pub std_accuracy: f64,
    pub mean_tv: f64,
    pub count: usize,
    pub failed: usize,
}

/// Groups by (method, postproc, drop rate), sorted by that key. Failed
/// records are counted but excluded from the statistics.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, &str, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        // Drop rates are positive, so their bit patterns sort numerically.
        groups.entry((&r.method, &r.postproc, r.drop_rate.to_bits())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, postproc, t), rs)| {
            let mut ok: Vec<&RunRecord> = rs.iter().copied().filter(|r| r.failed.is_none()).collect();
            // Summation order must not depend on record order.
            ok.sort_by_key(|r| r.trial);
            let n = ok.len();
            let mean = ok.iter().map(|r| r.accuracy).sum::<f64>() / n as f64;
            let std = if n > 1 {
                (ok.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                method: method.to_string(),
                postproc: postproc.to_string(),
                drop_rate: f64::from_bits(t),
                mean_accuracy: mean,
                std_accuracy: std,
                mean_tv: ok.iter().map(|r| r.mask_tv).sum::<f64>() / n as f64,
                count: n,
                failed: rs.len() - n,
            }
        })
        .collect()
}
