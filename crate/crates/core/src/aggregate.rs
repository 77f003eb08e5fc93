//! Daily sentiment statistics and sliding-window smoothing.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{mean, sample_std, sorted_sum, Scalar};
use crate::sentiment::SentimentScore;

/// Per-day aggregates of tweet scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailySentimentRow<T> {
    pub date: NaiveDate,
    /// Sum of positive polarities.
    pub sum_pos: T,
    /// Sum of negative polarities.
    pub sum_neg: T,
    pub count: usize,
    /// Mean over positive-polarity tweets, 0 if none.
    pub mean_pos: T,
    /// Mean over negative-polarity tweets, 0 if none.
    pub mean_neg: T,
    pub mean_polarity: T,
    pub mean_subjectivity: T,
    /// Standardized composite polarity.
    pub p_d: T,
    pub aggregate: T,
}

/// Across-day mean and sample standard deviation of the daily positive and
/// negative polarity means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetaStats<T> {
    pub mu_pos: T,
    pub mu_neg: T,
    pub sigma_pos: T,
    pub sigma_neg: T,
}

/// Equal-weight combination of the daily polarity and subjectivity means.
pub fn aggregate_score<T: Scalar>(row: &DailySentimentRow<T>) -> T {
    (row.mean_polarity + row.mean_subjectivity) / T::lit(2.0)
}

/// Collapses per-tweet scores into daily rows plus the meta statistics used
/// for the composite `p_d`.
///
/// Zero-polarity tweets count toward `count` and the plain means but toward
/// neither signed sum. All sums run over sorted inputs, so the result does
/// not depend on within-day order. A standard deviation of zero (including
/// the single-day case) zeroes its term in `p_d`.
pub fn daily_stats<T: Scalar>(
    scored: &BTreeMap<NaiveDate, Vec<SentimentScore<T>>>,
) -> Result<(Vec<DailySentimentRow<T>>, MetaStats<T>)> {
    if scored.is_empty() {
        return Err(Error::EmptyAggregation);
    }

    let mut rows = Vec::with_capacity(scored.len());
    for (&date, scores) in scored {
        if scores.is_empty() {
            return Err(Error::InvalidArgument(format!("no scores for {date}")));
        }
        let positives: Vec<T> = scores.iter().map(|s| s.polarity).filter(|p| *p > T::zero()).collect();
        let negatives: Vec<T> = scores.iter().map(|s| s.polarity).filter(|p| *p < T::zero()).collect();
        let subjectivities: Vec<T> = scores.iter().map(|s| s.subjectivity).collect();
        let count = scores.len();
        let n = T::from_count(count);

        let sum_pos = sorted_sum(&positives);
        let sum_neg = sorted_sum(&negatives);
        let mean_over = |sum: T, k: usize| if k == 0 { T::zero() } else { sum / T::from_count(k) };

        let mut row = DailySentimentRow {
            date,
            sum_pos,
            sum_neg,
            count,
            mean_pos: mean_over(sum_pos, positives.len()),
            mean_neg: mean_over(sum_neg, negatives.len()),
            mean_polarity: (sum_pos + sum_neg) / n,
            mean_subjectivity: sorted_sum(&subjectivities) / n,
            p_d: T::zero(),
            aggregate: T::zero(),
        };
        row.aggregate = aggregate_score(&row);
        rows.push(row);
    }

    let pos: Vec<T> = rows.iter().map(|r| r.mean_pos).collect();
    let neg: Vec<T> = rows.iter().map(|r| r.mean_neg).collect();
    let meta = MetaStats {
        mu_pos: mean(&pos).unwrap_or_else(T::zero),
        mu_neg: mean(&neg).unwrap_or_else(T::zero),
        sigma_pos: sample_std(&pos).unwrap_or_else(T::zero),
        sigma_neg: sample_std(&neg).unwrap_or_else(T::zero),
    };
    for row in &mut rows {
        row.p_d = composite_polarity(row.mean_pos, row.mean_neg, &meta);
    }
    Ok((rows, meta))
}

/// `(μd+ − μ+)/σ+ − (|μd−| − |μ−|)/σ−`, with a term whose σ is zero
/// contributing zero.
pub fn composite_polarity<T: Scalar>(mean_pos: T, mean_neg: T, meta: &MetaStats<T>) -> T {
    let standardized = |x: T, mu: T, sigma: T| if sigma > T::zero() { (x - mu) / sigma } else { T::zero() };
    standardized(mean_pos, meta.mu_pos, meta.sigma_pos)
        - standardized(mean_neg.abs(), meta.mu_neg.abs(), meta.sigma_neg)
}

fn check_window(w: usize) -> Result<()> {
    if w == 0 || w.is_multiple_of(2) {
        return Err(Error::InvalidWindow(w as i64));
    }
    Ok(())
}

/// Centered moving average over consecutive entries. Entries without
/// `(w - 1) / 2` neighbours on both sides are left unchanged. Each mean is
/// clamped into its window's range so constant runs stay exact.
pub fn smooth_values<T: Scalar>(values: &[T], w: usize) -> Result<Vec<T>> {
    check_window(w)?;
    let half = w / 2;
    let n = values.len();
    let mut out = values.to_vec();
    if n < w {
        return Ok(out);
    }
    for i in half..n - half {
        let window = &values[i - half..=i + half];
        let sum = window.iter().fold(T::zero(), |acc, &x| acc + x);
        let lo = window.iter().copied().fold(T::infinity(), T::min);
        let hi = window.iter().copied().fold(T::neg_infinity(), T::max);
        out[i] = (sum / T::from_count(w)).max(lo).min(hi);
    }
    Ok(out)
}

/// [`smooth_values`] over a date-keyed series. Neighbourhoods follow the
/// date-sorted index, not the calendar, so gaps do not disable smoothing.
pub fn sliding_window<T: Scalar>(series: &BTreeMap<NaiveDate, T>, w: usize) -> Result<BTreeMap<NaiveDate, T>> {
    let values: Vec<T> = series.values().copied().collect();
    let smoothed = smooth_values(&values, w)?;
    Ok(series.keys().copied().zip(smoothed).collect())
}

/// Projection of one column of daily rows into a date-keyed series.
pub fn column<T: Scalar>(
    rows: &[DailySentimentRow<T>],
    field: impl Fn(&DailySentimentRow<T>) -> T,
) -> BTreeMap<NaiveDate, T> {
    rows.iter().map(|r| (r.date, field(r))).collect()
}

const DAILY_COLUMNS: [&str; 10] = [
    "date",
    "sum_pos",
    "sum_neg",
    "count",
    "mean_pos",
    "mean_neg",
    "mean_polarity",
    "mean_subjectivity",
    "p_d",
    "aggregate",
];

const SMOOTHED_COLUMNS: [&str; 4] = ["mean_polarity", "mean_subjectivity", "p_d", "aggregate"];

/// Writes daily rows as CSV. With `window`, smoothed copies of the polarity,
/// subjectivity, `p_d` and aggregate columns are appended with a `_w<k>`
/// suffix.
pub fn write_daily<T: Scalar>(path: &Path, rows: &[DailySentimentRow<T>], window: Option<usize>) -> Result<()> {
    let smoothed = match window {
        Some(w) => {
            let cols: [Vec<T>; 4] = [
                smooth_values(&rows.iter().map(|r| r.mean_polarity).collect::<Vec<_>>(), w)?,
                smooth_values(&rows.iter().map(|r| r.mean_subjectivity).collect::<Vec<_>>(), w)?,
                smooth_values(&rows.iter().map(|r| r.p_d).collect::<Vec<_>>(), w)?,
                smooth_values(&rows.iter().map(|r| r.aggregate).collect::<Vec<_>>(), w)?,
            ];
            Some((w, cols))
        }
        None => None,
    };

    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header: Vec<String> = DAILY_COLUMNS.iter().map(|s| s.to_string()).collect();
    if let Some((w, _)) = &smoothed {
        header.extend(SMOOTHED_COLUMNS.iter().map(|c| format!("{c}_w{w}")));
    }
    wtr.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![
            r.date.to_string(),
            r.sum_pos.to_string(),
            r.sum_neg.to_string(),
            r.count.to_string(),
            r.mean_pos.to_string(),
            r.mean_neg.to_string(),
            r.mean_polarity.to_string(),
            r.mean_subjectivity.to_string(),
            r.p_d.to_string(),
            r.aggregate.to_string(),
        ];
        if let Some((_, cols)) = &smoothed {
            rec.extend(cols.iter().map(|c| c[i].to_string()));
        }
        wtr.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Reads the base columns of a daily CSV; smoothed columns are ignored.
pub fn read_daily<T: Scalar>(path: &Path) -> Result<Vec<DailySentimentRow<T>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let mut idx = [0usize; 10];
    for (slot, name) in idx.iter_mut().zip(DAILY_COLUMNS) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("missing column {name}"),
        })?;
    }

    let mut rows: Vec<DailySentimentRow<T>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| {
            T::parse_finite(field(k)).ok_or_else(|| bad(format!("{}: not a number: {:?}", DAILY_COLUMNS[k], field(k))))
        };
        let row = DailySentimentRow {
            date: field(0).parse().map_err(|e| bad(format!("date: {e}")))?,
            sum_pos: num(1)?,
            sum_neg: num(2)?,
            count: field(3).parse().map_err(|e| bad(format!("count: {e}")))?,
            mean_pos: num(4)?,
            mean_neg: num(5)?,
            mean_polarity: num(6)?,
            mean_subjectivity: num(7)?,
            p_d: num(8)?,
            aggregate: num(9)?,
        };
        if rows.last().is_some_and(|prev| prev.date >= row.date) {
            return Err(bad(format!("dates must be strictly increasing at {}", row.date)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, n).unwrap()
    }

    fn scores(pairs: &[(f64, f64)]) -> Vec<SentimentScore<f64>> {
        pairs
            .iter()
            .map(|&(polarity, subjectivity)| SentimentScore { polarity, subjectivity })
            .collect()
    }

    #[test]
    fn single_day_hand_arithmetic() {
        let input = BTreeMap::from([(day(6), scores(&[(0.5, 0.6), (-0.25, 0.2), (0.0, 0.1)]))]);
        let (rows, meta) = daily_stats(&input).unwrap();
        let r = rows[0];
        assert_eq!(r.sum_pos, 0.5);
        assert_eq!(r.sum_neg, -0.25);
        assert_eq!(r.count, 3);
        assert_eq!(r.mean_pos, 0.5);
        assert_eq!(r.mean_neg, -0.25);
        assert!((r.mean_polarity - 0.25 / 3.0).abs() < 1e-15);
        assert!((r.mean_subjectivity - 0.3).abs() < 1e-15);
        assert_eq!(meta.sigma_pos, 0.0);
        assert_eq!(meta.sigma_neg, 0.0);
        assert_eq!(r.p_d, 0.0);
    }

    #[test]
    fn all_zero_polarities() {
        let input = BTreeMap::from([
            (day(6), scores(&[(0.0, 0.1), (0.0, 0.0)])),
            (day(7), scores(&[(0.0, 0.5)])),
        ]);
        let (rows, meta) = daily_stats(&input).unwrap();
        assert_eq!(meta, MetaStats { mu_pos: 0.0, mu_neg: 0.0, sigma_pos: 0.0, sigma_neg: 0.0 });
        for r in rows {
            assert_eq!((r.sum_pos, r.sum_neg, r.mean_pos, r.mean_neg, r.p_d), (0.0, 0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn composite_two_days() {
        // μd+ = 0.4, 0.2 → μ+ = 0.3, σ+ = √0.02; μd− = −0.1, −0.3 → |μ−| = 0.2, σ− = √0.02
        let input = BTreeMap::from([
            (day(6), scores(&[(0.4, 0.5), (-0.1, 0.5)])),
            (day(7), scores(&[(0.2, 0.5), (-0.3, 0.5)])),
        ]);
        let (rows, meta) = daily_stats(&input).unwrap();
        let s = 0.02_f64.sqrt();
        assert!((meta.sigma_pos - s).abs() < 1e-12);
        assert!((rows[0].p_d - (0.1 / s - (-0.1) / s)).abs() < 1e-9);
        assert!((rows[1].p_d - (-0.1 / s - 0.1 / s)).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_an_error() {
        let input: BTreeMap<NaiveDate, Vec<SentimentScore<f64>>> = BTreeMap::new();
        assert!(matches!(daily_stats(&input), Err(Error::EmptyAggregation)));
    }

    #[test]
    fn aggregate_score_examples() {
        let (rows, _) = daily_stats(&BTreeMap::from([(day(6), scores(&[(0.1, 0.3)]))])).unwrap();
        assert!((aggregate_score(&rows[0]) - 0.2).abs() < 1e-15);
        let mut r = rows[0];
        r.mean_polarity = -0.2;
        r.mean_subjectivity = 0.2;
        assert_eq!(aggregate_score(&r), 0.0);
        r.mean_polarity = 0.0;
        r.mean_subjectivity = 0.0;
        assert_eq!(aggregate_score(&r), 0.0);
    }

    #[test]
    fn window_examples() {
        assert_eq!(smooth_values(&[0.0, 3.0, 0.0], 3).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(smooth_values(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap(), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(smooth_values(&[0.1; 7], 5).unwrap(), [0.1; 7]);
        assert_eq!(smooth_values(&[1.0, 9.0], 3).unwrap(), [1.0, 9.0]);
        for w in [0, 2, 4] {
            assert!(matches!(smooth_values(&[1.0_f64], w), Err(Error::InvalidWindow(_))));
        }
    }

    #[test]
    fn window_uses_index_adjacency() {
        // weekend gap between 6 and 9 does not matter
        let series = BTreeMap::from([(day(5), 0.0), (day(6), 3.0), (day(9), 0.0)]);
        let out = sliding_window(&series, 3).unwrap();
        assert_eq!(out[&day(6)], 1.0);
        assert_eq!(out.keys().collect::<Vec<_>>(), series.keys().collect::<Vec<_>>());
    }

    #[test]
    fn daily_csv_round_trip() {
        let input = BTreeMap::from([
            (day(6), scores(&[(0.4, 0.5), (-0.1, 0.25)])),
            (day(7), scores(&[(0.2, 0.5), (-0.3, 0.5), (0.0, 0.1)])),
            (day(8), scores(&[(0.123456789, 0.987654321)])),
        ]);
        let (rows, _) = daily_stats(&input).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_daily(f.path(), &rows, Some(3)).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text.lines().next().unwrap().ends_with("mean_polarity_w3,mean_subjectivity_w3,p_d_w3,aggregate_w3"));
        assert_eq!(read_daily::<f64>(f.path()).unwrap(), rows);
    }
}
