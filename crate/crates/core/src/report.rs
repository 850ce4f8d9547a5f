//! Regression of accuracy on mask TV, CSV records and PGM image dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::attributors::AttributionMap;
use crate::error::{Error, Result};
use crate::masking::Mask;
use crate::pipeline::{AggregateRow, Mode, RunRecord};
use crate::postproc;

pub const CSV_HEADER: &str = "dataset,method,postproc,drop_rate,trial,accuracy,mask_tv,mode,seed";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares of y on x with R² = 1 − SS_res/SS_tot
/// (0 when y is constant).
pub fn linear_fit(points: &[(f64, f64)]) -> Result<RegressionResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::invalid(format!("linear fit needs at least 3 points, got {n}")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("linear fit points must be finite"));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * n as f64 {
        return Err(Error::invalid(format!("degenerate fit: all {n} x values equal {mx}")));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 0.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(RegressionResult { slope, intercept, r_squared, n_points: n })
}

/// One fit per drop rate of mean accuracy on mean TV, one point per method,
/// using only un-post-processed cells. Rates with too few points carry the
/// fitting error.
pub fn tv_accuracy_fits(rows: &[AggregateRow]) -> Vec<(f64, Result<RegressionResult>)> {
    let mut by_rate: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.postproc == "plain" && r.count > 0) {
        by_rate.entry(r.drop_rate.to_bits()).or_default().push((r.mean_tv, r.mean_accuracy));
    }
    by_rate.into_iter().map(|(t, pts)| (f64::from_bits(t), linear_fit(&pts))).collect()
}

fn check_field(s: &str) -> Result<&str> {
    if s.contains([',', '\n', '\r', '"']) {
        return Err(Error::invalid(format!("CSV field {s:?} contains a separator")));
    }
    Ok(s)
}

/// CSV text with fixed 6-decimal reals and LF line endings.
pub fn csv_string(records: &[RunRecord]) -> Result<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{:.6},{:.6},{},{}",
            check_field(&r.dataset)?,
            check_field(&r.method)?,
            check_field(&r.postproc)?,
            r.drop_rate,
            r.trial,
            r.accuracy,
            r.mask_tv,
            r.mode.name(),
            r.seed
        );
    }
    Ok(out)
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    std::fs::write(path, csv_string(records)?).map_err(|e| Error::io(path, e))
}

/// Parses CSV written by [`csv_string`]. Columns outside the schema come back
/// as `wall_time = 0` and, for NaN accuracy, `failed = Some("failed")`.
pub fn parse_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::Syntax { line: 1, message: format!("expected header {CSV_HEADER:?}") }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let bad = |what: &str| Error::Syntax { line: line_no, message: format!("bad {what}") };
        let f: Vec<&str> = line.split(',').collect();
        let [dataset, method, postproc, drop_rate, trial, accuracy, mask_tv, mode, seed] = f[..] else {
            return Err(Error::Syntax { line: line_no, message: format!("expected 9 fields, got {}", f.len()) });
        };
        let accuracy: f64 = accuracy.parse().map_err(|_| bad("accuracy"))?;
        out.push(RunRecord {
            dataset: dataset.into(),
            method: method.into(),
            postproc: postproc.into(),
            drop_rate: drop_rate.parse().map_err(|_| bad("drop_rate"))?,
            trial: trial.parse().map_err(|_| bad("trial"))?,
            accuracy,
            mask_tv: mask_tv.parse().map_err(|_| bad("mask_tv"))?,
            mode: Mode::parse(mode).map_err(|_| bad("mode"))?,
            seed: seed.parse().map_err(|_| bad("seed"))?,
            wall_time: 0.0,
            failed: accuracy.is_nan().then(|| "failed".to_string()),
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    parse_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Min-max range used to scale a PGM; a zero range maps everything to 128.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
}

/// Binary P5 bytes of a row-major `height × width` grid.
pub fn pgm_bytes(values: &[f64], height: usize, width: usize) -> Result<(Vec<u8>, PgmScale)> {
    if values.len() != height * width || values.is_empty() {
        return Err(Error::ShapeMismatch { expected: vec![height, width], got: vec![values.len()] });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("PGM values must be finite"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| if max > min { ((v - min) / (max - min) * 255.0).round() as u8 } else { 128 }));
    Ok((out, PgmScale { min, max }))
}

pub fn write_pgm(path: &Path, values: &[f64], height: usize, width: usize) -> Result<PgmScale> {
    let (bytes, scale) = pgm_bytes(values, height, width)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(scale)
}

/// Writes an attribution map, summing channels first.
pub fn write_map_pgm(path: &Path, map: &AttributionMap) -> Result<PgmScale> {
    let reduced = postproc::reduce_channels(map)?;
    let shape = reduced.values.shape().to_vec();
    write_pgm(path, reduced.values.data(), shape[0], shape[1])
}

/// Writes a mask with dropped pixels white.
pub fn write_mask_pgm(path: &Path, mask: &Mask) -> Result<PgmScale> {
    let values: Vec<f64> = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    write_pgm(path, &values, mask.height(), mask.width())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collinear_points_fit_exactly() {
        let r = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12 && (r.intercept - 1.0).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_y_and_hand_case() {
        assert_eq!(linear_fit(&[(0.0, 2.0), (1.0, 2.0), (5.0, 2.0)]).unwrap().r_squared, 0.0);
        let r = linear_fit(&[(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert!(r.slope.abs() < 1e-12 && r.r_squared.abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(linear_fit(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(linear_fit(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn matches_two_pass_oracle(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40)) {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            prop_assume!(pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() > 1e-6);
            let r = linear_fit(&pts).unwrap();
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            prop_assert!((r.slope - slope).abs() < 1e-9);
            prop_assert!((r.intercept - (my - slope * mx)).abs() < 1e-9);
            let ss_res: f64 = pts.iter().map(|p| (p.1 - r.intercept - r.slope * p.0).powi(2)).sum();
            let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
            if ss_tot > 0.0 {
                prop_assert!((r.r_squared - (1.0 - ss_res / ss_tot)).abs() < 1e-9);
            }
        }
    }

    fn record(method: &str, acc: f64) -> RunRecord {
        RunRecord {
            dataset: "shapes".into(),
            method: method.into(),
            postproc: "plain".into(),
            drop_rate: 0.3,
            trial: 2,
            accuracy: acc,
            mask_tv: 0.125,
            mode: Mode::Roar,
            seed: 42,
            wall_time: 0.0,
            failed: acc.is_nan().then(|| "failed".to_string()),
        }
    }

    #[test]
    fn csv_round_trip_and_format() {
        assert_eq!(csv_string(&[]).unwrap(), format!("{CSV_HEADER}\n"));
        let recs = vec![record("grad2", 0.5), record("ig2", 0.25)];
        let text = csv_string(&recs).unwrap();
        assert!(text.lines().nth(1).unwrap() == "shapes,grad2,plain,0.300000,2,0.500000,0.125000,roar,42");
        assert!(!text.contains('\r'));
        assert_eq!(parse_csv(&text).unwrap(), recs);
        let failed = parse_csv(&csv_string(&[record("vg", f64::NAN)]).unwrap()).unwrap();
        assert!(failed[0].accuracy.is_nan() && failed[0].failed.is_some());
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(parse_csv("nope\n").is_err());
        assert!(matches!(parse_csv(&format!("{CSV_HEADER}\na,b\n")), Err(Error::Syntax { line: 2, .. })));
        assert!(csv_string(&[record("a,b", 0.1)]).is_err());
    }

    #[test]
    fn pgm_scaling() {
        let (bytes, scale) = pgm_bytes(&[3.0; 6], 2, 3).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert!(bytes[bytes.len() - 6..].iter().all(|&b| b == 128));
        assert_eq!(scale, PgmScale { min: 3.0, max: 3.0 });
        let (bytes, _) = pgm_bytes(&[0.0, 0.5, 1.0, 2.0], 2, 2).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 64, 128, 255]);
        assert!(pgm_bytes(&[0.0; 3], 2, 2).is_err());
        assert!(pgm_bytes(&[f64::NAN; 4], 2, 2).is_err());
    }

    #[test]
    fn pgm_io_error_names_path() {
        let err = write_pgm(Path::new("/nonexistent-dir/x.pgm"), &[0.0], 1, 1).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.pgm"));
    }
}
