//! Lagged-sentiment regression, buy/hold/sell recommendations and evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::DailySentimentRow;
use crate::error::{Error, Result};
use crate::market::MovementSeries;
use crate::scalar::Scalar;

/// Damping added to the Gram matrix diagonal before solving.
pub const RIDGE_LAMBDA: f64 = 1e-8;

pub const DEFAULT_LAGS: [u32; 3] = [1, 2, 3];

/// Calendar-day lags, validated positive and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Lags(Vec<u32>);

impl Lags {
    pub fn new(lags: Vec<u32>) -> Result<Self> {
        if lags.is_empty() || lags.contains(&0) {
            return Err(Error::InvalidArgument("lags must be non-empty and positive".into()));
        }
        let mut sorted = lags.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != lags.len() {
            return Err(Error::InvalidArgument("lags must be distinct".into()));
        }
        Ok(Lags(lags))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Two features (polarity, subjectivity) per lag.
    pub fn feature_count(&self) -> usize {
        2 * self.0.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let pol = self.0.iter().map(|l| format!("polarity_lag{l}"));
        let subj = self.0.iter().map(|l| format!("subjectivity_lag{l}"));
        pol.chain(subj).collect()
    }
}

impl Default for Lags {
    fn default() -> Self {
        Lags(DEFAULT_LAGS.to_vec())
    }
}

impl TryFrom<Vec<u32>> for Lags {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Lags::new(v)
    }
}

impl From<Lags> for Vec<u32> {
    fn from(l: Lags) -> Self {
        l.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow<T> {
    pub date: NaiveDate,
    /// Polarity at each lag, then subjectivity at each lag.
    pub features: Vec<T>,
    /// Corrected percent movement on `date`.
    pub target: T,
}

type SentimentByDate<T> = BTreeMap<NaiveDate, (T, T)>;

fn sentiment_by_date<T: Scalar>(daily: &[DailySentimentRow<T>]) -> SentimentByDate<T> {
    daily
        .iter()
        .map(|r| (r.date, (r.mean_polarity, r.mean_subjectivity)))
        .collect()
}

fn lagged<T: Scalar>(by_date: &SentimentByDate<T>, date: NaiveDate, lags: &Lags) -> Option<Vec<T>> {
    let at = |l: u32| date.checked_sub_days(Days::new(l.into())).and_then(|d| by_date.get(&d));
    let mut pol = Vec::with_capacity(lags.0.len());
    let mut subj = Vec::with_capacity(lags.0.len());
    for &l in &lags.0 {
        let &(p, s) = at(l)?;
        pol.push(p);
        subj.push(s);
    }
    pol.extend(subj);
    Some(pol)
}

/// Lagged sentiment features for `date`, if every lag has a sentiment row.
pub fn lagged_features<T: Scalar>(daily: &[DailySentimentRow<T>], date: NaiveDate, lags: &Lags) -> Option<Vec<T>> {
    lagged(&sentiment_by_date(daily), date, lags)
}

/// One row per movement date whose every lagged sentiment day exists.
pub fn build_features<T: Scalar>(
    daily: &[DailySentimentRow<T>],
    movement: &MovementSeries<T>,
    lags: &Lags,
) -> Result<Vec<FeatureRow<T>>> {
    let by_date = sentiment_by_date(daily);
    let rows: Vec<FeatureRow<T>> = movement
        .iter()
        .filter_map(|(date, target)| {
            lagged(&by_date, date, lags).map(|features| FeatureRow { date, features, target })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    pub intercept: T,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> LinearModel<T> {
    /// Predicted percent movement: intercept plus dot product.
    pub fn predict(&self, features: &[T]) -> T {
        debug_assert_eq!(features.len(), self.coefficients.len());
        self.coefficients
            .iter()
            .zip(features)
            .fold(self.intercept, |acc, (&c, &f)| acc + c * f)
    }
}

/// Ordinary least squares via normal equations with a small ridge term.
pub fn fit_ols<T: Scalar>(rows: &[FeatureRow<T>]) -> Result<LinearModel<T>> {
    let k = rows.first().map_or(0, |r| r.features.len());
    let p = k + 1;
    if rows.len() < p + 1 {
        return Err(Error::InsufficientData { needed: p + 1, got: rows.len() });
    }
    if rows.iter().any(|r| r.features.len() != k) {
        return Err(Error::InvalidArgument("feature rows differ in width".into()));
    }
    if rows
        .iter()
        .any(|r| !r.target.is_finite() || r.features.iter().any(|f| !f.is_finite()))
    {
        return Err(Error::NonFinite("regression input"));
    }

    // Design column 0 is the constant.
    let mut gram = vec![vec![T::zero(); p]; p];
    let mut rhs = vec![T::zero(); p];
    let mut x = vec![T::one(); p];
    for r in rows {
        x[1..].copy_from_slice(&r.features);
        for i in 0..p {
            rhs[i] = rhs[i] + x[i] * r.target;
            for j in 0..=i {
                gram[i][j] = gram[i][j] + x[i] * x[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[j][i] = gram[i][j];
        }
        gram[i][i] = gram[i][i] + T::lit(RIDGE_LAMBDA);
    }

    let beta = cholesky_solve(gram, rhs)?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
    })
}

/// Solves `a · x = b` for symmetric positive definite `a`.
fn cholesky_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - a[j][k] * a[j][k];
        }
        if !(d > T::zero()) {
            return Err(Error::Singular);
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    // forward: L y = b
    for i in 0..n {
        for k in 0..i {
            b[i] = b[i] - a[i][k] * b[k];
        }
        b[i] = b[i] / a[i][i];
    }
    // back: Lᵀ x = y
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] = b[i] - a[k][i] * b[k];
        }
        b[i] = b[i] / a[i][i];
    }
    Ok(b)
}

pub fn predict_movement<T: Scalar>(model: &LinearModel<T>, features: &[T]) -> T {
    model.predict(features)
}

/// Ordered `Sell < Hold < Buy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recommendation {
    Sell,
    Hold,
    Buy,
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recommendation::Sell => "sell",
            Recommendation::Hold => "hold",
            Recommendation::Buy => "buy",
        })
    }
}

impl FromStr for Recommendation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sell" => Ok(Recommendation::Sell),
            "hold" => Ok(Recommendation::Hold),
            "buy" => Ok(Recommendation::Buy),
            other => Err(Error::InvalidArgument(format!("unknown recommendation {other:?}"))),
        }
    }
}

/// Percent thresholds for turning predictions into recommendations and for
/// judging them against actual movement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecommendationRule<T> {
    /// Buy above `+threshold`, sell below `-threshold`, hold in between
    /// (boundaries inclusive).
    pub threshold: T,
    /// A hold is correct when actual movement lies strictly inside
    /// `(-hold_band, hold_band)`.
    pub hold_band: T,
}

impl<T: Scalar> Default for RecommendationRule<T> {
    fn default() -> Self {
        RecommendationRule {
            threshold: T::lit(0.5),
            hold_band: T::lit(1.0),
        }
    }
}

impl<T: Scalar> RecommendationRule<T> {
    pub fn recommend(&self, predicted: T) -> Recommendation {
        if predicted > self.threshold {
            Recommendation::Buy
        } else if predicted < -self.threshold {
            Recommendation::Sell
        } else {
            Recommendation::Hold
        }
    }

    pub fn is_correct(&self, rec: Recommendation, actual: T) -> bool {
        match rec {
            Recommendation::Buy => actual > self.threshold,
            Recommendation::Hold => actual > -self.hold_band && actual < self.hold_band,
            Recommendation::Sell => actual < -self.threshold,
        }
    }
}

pub fn recommend<T: Scalar>(predicted: T) -> Recommendation {
    RecommendationRule::default().recommend(predicted)
}

pub fn validate_recommendation<T: Scalar>(rec: Recommendation, actual: T) -> bool {
    RecommendationRule::default().is_correct(rec, actual)
}

/// Root mean squared difference.
pub fn rmse<T: Scalar>(predicted: &[T], actual: &[T]) -> Result<T> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let ss: T = predicted.iter().zip(actual).map(|(&p, &a)| (p - a) * (p - a)).sum();
    Ok((ss / T::from_count(predicted.len())).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow<T> {
    pub date: NaiveDate,
    pub predicted: T,
    pub actual: T,
    pub recommendation: Recommendation,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport<T> {
    pub n: usize,
    pub accuracy: T,
    pub null_accuracy: T,
    pub null_trials: usize,
    pub seed: u64,
    pub rmse: T,
    pub rows: Vec<EvalRow<T>>,
}

fn accuracy_of<T: Scalar>(
    model: &LinearModel<T>,
    rows: &[FeatureRow<T>],
    rule: &RecommendationRule<T>,
) -> T {
    let correct = rows
        .iter()
        .filter(|r| rule.is_correct(rule.recommend(model.predict(&r.features)), r.target))
        .count();
    T::from_count(correct) / T::from_count(rows.len())
}

/// Mean accuracy of `trials` models with zero intercept and i.i.d. standard
/// normal coefficients. Trial `i` draws from a generator seeded with
/// `seed + i`, so the result does not depend on scheduling.
pub fn null_accuracy<T: Scalar>(
    rows: &[FeatureRow<T>],
    trials: usize,
    seed: u64,
    rule: &RecommendationRule<T>,
) -> T {
    if trials == 0 || rows.is_empty() {
        return T::zero();
    }
    let k = rows[0].features.len();
    let per_trial: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let model = LinearModel {
                intercept: T::zero(),
                coefficients: (0..k)
                    .map(|_| T::lit(StandardNormal.sample(&mut rng)))
                    .collect(),
            };
            accuracy_of(&model, rows, rule)
        })
        .collect();
    per_trial.into_iter().fold(T::zero(), |a, b| a + b) / T::from_count(trials)
}

pub fn evaluate<T: Scalar>(
    model: &LinearModel<T>,
    rows: &[FeatureRow<T>],
    null_trials: usize,
    seed: u64,
) -> Result<EvalReport<T>> {
    evaluate_with(model, rows, null_trials, seed, &RecommendationRule::default())
}

pub fn evaluate_with<T: Scalar>(
    model: &LinearModel<T>,
    rows: &[FeatureRow<T>],
    null_trials: usize,
    seed: u64,
    rule: &RecommendationRule<T>,
) -> Result<EvalReport<T>> {
    if rows.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let eval_rows: Vec<EvalRow<T>> = rows
        .iter()
        .map(|r| {
            let predicted = model.predict(&r.features);
            let recommendation = rule.recommend(predicted);
            EvalRow {
                date: r.date,
                predicted,
                actual: r.target,
                recommendation,
                correct: rule.is_correct(recommendation, r.target),
            }
        })
        .collect();
    let correct = eval_rows.iter().filter(|r| r.correct).count();
    let predicted: Vec<T> = eval_rows.iter().map(|r| r.predicted).collect();
    let actual: Vec<T> = eval_rows.iter().map(|r| r.actual).collect();
    Ok(EvalReport {
        n: rows.len(),
        accuracy: T::from_count(correct) / T::from_count(rows.len()),
        null_accuracy: null_accuracy(rows, null_trials, seed, rule),
        null_trials,
        seed,
        rmse: rmse(&predicted, &actual)?,
        rows: eval_rows,
    })
}

/// Inclusive calendar date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidArgument(format!("date range {start}..{end} is reversed")));
        }
        Ok(DateRange { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

pub fn select_range<T: Clone>(rows: &[FeatureRow<T>], range: &DateRange) -> Vec<FeatureRow<T>> {
    rows.iter().filter(|r| range.contains(r.date)).cloned().collect()
}

/// Predictions for every calendar date (weekends included, and days past
/// the last sentiment date) whose lags all have sentiment.
pub fn predict_dates<T: Scalar>(
    model: &LinearModel<T>,
    daily: &[DailySentimentRow<T>],
    lags: &Lags,
) -> BTreeMap<NaiveDate, T> {
    let by_date = sentiment_by_date(daily);
    let (Some(&first), Some(&last)) = (by_date.keys().next(), by_date.keys().next_back()) else {
        return BTreeMap::new();
    };
    let min_lag = *lags.0.iter().min().expect("lags non-empty");
    let mut out = BTreeMap::new();
    let mut date = first + Days::new(1);
    let end = last + Days::new(min_lag.into());
    while date <= end {
        if let Some(f) = lagged(&by_date, date, lags) {
            out.insert(date, model.predict(&f));
        }
        date = date + Days::new(1);
    }
    out
}

/// On-disk model: JSON with intercept, coefficients, lags and date ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lags: Lags,
    pub trained_range: DateRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_range: Option<DateRange>,
    #[serde(default)]
    pub training_rows: usize,
}

impl ModelFile {
    pub fn from_model<T: Scalar>(
        model: &LinearModel<T>,
        lags: Lags,
        trained_range: DateRange,
        test_range: Option<DateRange>,
        training_rows: usize,
    ) -> Self {
        ModelFile {
            intercept: model.intercept.as_f64(),
            coefficients: model.coefficients.iter().map(|c| c.as_f64()).collect(),
            lags,
            trained_range,
            test_range,
            training_rows,
        }
    }

    pub fn model<T: Scalar>(&self) -> Result<LinearModel<T>> {
        if self.coefficients.len() != self.lags.feature_count() {
            return Err(Error::InvalidArgument(format!(
                "model has {} coefficients for {} lags",
                self.coefficients.len(),
                self.lags.0.len()
            )));
        }
        Ok(LinearModel {
            intercept: T::lit(self.intercept),
            coefficients: self.coefficients.iter().map(|&c| T::lit(c)).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Writes `date,<feature names>,target` CSV.
pub fn write_features<T: Scalar>(path: &Path, rows: &[FeatureRow<T>], lags: &Lags) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["date".to_string()];
    header.extend(lags.feature_names());
    header.push("target".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let mut rec = vec![r.date.to_string()];
        rec.extend(r.features.iter().map(|f| f.to_string()));
        rec.push(r.target.to_string());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a features CSV; the lags are recovered from the header.
pub fn read_features<T: Scalar>(path: &Path) -> Result<(Vec<FeatureRow<T>>, Lags)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let bad_header = |message: String| Error::Parse {
        path: path.to_owned(),
        line: 1,
        message,
    };
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 4 || names[0] != "date" || names[names.len() - 1] != "target" {
        return Err(bad_header("expected date,<features>,target".into()));
    }
    let lags: Vec<u32> = names[1..names.len() - 1]
        .iter()
        .filter_map(|n| n.strip_prefix("polarity_lag"))
        .map(|l| l.parse().map_err(|_| bad_header(format!("bad lag column {l:?}"))))
        .collect::<Result<_>>()?;
    let lags = Lags::new(lags)?;
    if lags.feature_names() != names[1..names.len() - 1] {
        return Err(bad_header("feature columns do not match polarity/subjectivity lag layout".into()));
    }

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        let num = |s: &str| T::parse_finite(s).ok_or_else(|| bad(format!("not a number: {s:?}")));
        let date = rec[0].parse().map_err(|e| bad(format!("date: {e}")))?;
        let features = (1..rec.len() - 1).map(|j| num(&rec[j])).collect::<Result<Vec<T>>>()?;
        rows.push(FeatureRow {
            date,
            features,
            target: num(&rec[rec.len() - 1])?,
        });
    }
    Ok((rows, lags))
}

/// Writes `date,predicted,recommendation` CSV.
pub fn write_predictions<T: Scalar>(
    path: &Path,
    predictions: &BTreeMap<NaiveDate, T>,
    rule: &RecommendationRule<T>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["date", "predicted", "recommendation"])
        .map_err(|e| Error::csv(path, e))?;
    for (d, p) in predictions {
        w.write_record([d.to_string(), p.to_string(), rule.recommend(*p).to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions<T: Scalar>(path: &Path) -> Result<BTreeMap<NaiveDate, T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        if rec.len() < 2 {
            return Err(bad("expected date,predicted".into()));
        }
        let date: NaiveDate = rec[0].parse().map_err(|e| bad(format!("date: {e}")))?;
        let p = T::parse_finite(&rec[1]).ok_or_else(|| bad(format!("not a number: {:?}", &rec[1])))?;
        if out.insert(date, p).is_some() {
            return Err(bad(format!("duplicate date {date}")));
        }
    }
    Ok(out)
}
