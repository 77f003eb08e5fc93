//! Prices, percent movement, index correction and correlation analysis.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::aggregate::{column, sliding_window, DailySentimentRow};
use crate::error::{Error, Result};
use crate::scalar::{mean, sample_std, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar<T> {
    pub date: NaiveDate,
    pub adj_close: T,
}

/// Percent movement keyed by trading date.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MovementSeries<T>(pub BTreeMap<NaiveDate, T>);

impl<T: Scalar> MovementSeries<T> {
    pub fn get(&self, date: NaiveDate) -> Option<T> {
        self.0.get(&date).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, T)> + '_ {
        self.0.iter().map(|(d, v)| (*d, *v))
    }
}

#[derive(Deserialize)]
struct PriceLine {
    #[serde(alias = "Date")]
    date: String,
    #[serde(alias = "Adj Close", alias = "adj close", alias = "Adj_Close")]
    adj_close: String,
}

/// Reads a price CSV with at least `date` and `adj_close` columns; other
/// columns are ignored. Rows are sorted by date.
pub fn load_prices<T: Scalar>(path: &Path) -> Result<Vec<PriceBar<T>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<PriceLine>().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        let date: NaiveDate = rec.date.trim().parse().map_err(|e| bad(format!("date: {e}")))?;
        let adj_close = T::parse_finite(&rec.adj_close).ok_or_else(|| bad(format!("adj_close: {:?}", rec.adj_close)))?;
        rows.push(PriceBar { date, adj_close });
    }
    price_series(rows)
}

/// Sorts bars by date and checks positivity and date uniqueness.
pub fn price_series<T: Scalar>(mut bars: Vec<PriceBar<T>>) -> Result<Vec<PriceBar<T>>> {
    if let Some(b) = bars.iter().find(|b| !(b.adj_close > T::zero())) {
        return Err(Error::Price(format!("non-positive price {} on {}", b.adj_close, b.date)));
    }
    bars.sort_by_key(|b| b.date);
    if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(Error::Price(format!("duplicate date {}", w[0].date)));
    }
    Ok(bars)
}

/// `100 · (p_t − p_{t−1}) / p_{t−1}` keyed at `t`.
pub fn pct_movement<T: Scalar>(bars: &[PriceBar<T>]) -> Result<MovementSeries<T>> {
    if bars.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: bars.len() });
    }
    let hundred = T::lit(100.0);
    Ok(MovementSeries(
        bars.windows(2)
            .map(|w| (w[1].date, hundred * (w[1].adj_close - w[0].adj_close) / w[0].adj_close))
            .collect(),
    ))
}

/// Company movement minus index movement on each of the company's dates.
pub fn corrected_movement<T: Scalar>(company: &MovementSeries<T>, index: &MovementSeries<T>) -> Result<MovementSeries<T>> {
    company
        .iter()
        .map(|(d, m)| index.get(d).map(|i| (d, m - i)).ok_or(Error::MissingIndexDate(d)))
        .collect::<Result<BTreeMap<_, _>>>()
        .map(MovementSeries)
}

/// Sample Pearson correlation coefficient.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input"));
    }
    let mx = mean(x).expect("non-empty");
    let my = mean(y).expect("non-empty");
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::ZeroVariance("correlation"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Z-scores using the sample standard deviation.
pub fn standardize<T: Scalar>(series: &[T]) -> Result<Vec<T>> {
    if series.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: series.len() });
    }
    let m = mean(series).expect("non-empty");
    let sd = sample_std(series).expect("len >= 2");
    if !(sd > T::zero()) {
        return Err(Error::ZeroVariance("standardization"));
    }
    Ok(series.iter().map(|&x| (x - m) / sd).collect())
}

/// Sentiment columns correlated against movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SentimentMeasure {
    Polarity,
    Subjectivity,
    Aggregate,
}

impl SentimentMeasure {
    pub const ALL: [SentimentMeasure; 3] = [Self::Polarity, Self::Subjectivity, Self::Aggregate];

    pub fn label(self) -> &'static str {
        match self {
            Self::Polarity => "Polarity Correlation",
            Self::Subjectivity => "Subjectivity Correlation",
            Self::Aggregate => "Aggregate Score Correlation",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Self::Polarity => "polarity",
            Self::Subjectivity => "subjectivity",
            Self::Aggregate => "aggregate",
        }
    }

    pub fn of<T: Scalar>(self, row: &DailySentimentRow<T>) -> T {
        match self {
            Self::Polarity => row.mean_polarity,
            Self::Subjectivity => row.mean_subjectivity,
            Self::Aggregate => row.aggregate,
        }
    }
}

/// Correlations of smoothed sentiment with movement: one row per measure,
/// one column per window size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable<T> {
    pub windows: Vec<usize>,
    pub rows: Vec<(SentimentMeasure, Vec<T>)>,
    /// Number of dates in the sentiment/movement inner join.
    pub overlap: usize,
}

impl<T: Scalar> CorrelationTable<T> {
    pub fn cell(&self, measure: SentimentMeasure, window: usize) -> Option<T> {
        let col = self.windows.iter().position(|&w| w == window)?;
        self.rows.iter().find(|(m, _)| *m == measure).map(|(_, v)| v[col])
    }

    /// CSV with a `Window Size` header row and one labelled row per measure.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec!["Window Size".to_string()];
        header.extend(self.windows.iter().map(|w| w.to_string()));
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for (m, cells) in &self.rows {
            let mut rec = vec![m.label().to_string()];
            rec.extend(cells.iter().map(|c| c.to_string()));
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Smooths each sentiment measure over its full date index, inner-joins
/// with movement dates and correlates, for every window size.
pub fn correlation_table<T: Scalar>(
    movement: &MovementSeries<T>,
    daily: &[DailySentimentRow<T>],
    windows: &[usize],
) -> Result<CorrelationTable<T>> {
    let overlap = daily.iter().filter(|r| movement.0.contains_key(&r.date)).count();
    if overlap < 2 {
        return Err(Error::InsufficientData { needed: 2, got: overlap });
    }
    let mut rows = Vec::with_capacity(3);
    for measure in SentimentMeasure::ALL {
        let series = column(daily, |r| measure.of(r));
        let mut cells = Vec::with_capacity(windows.len());
        for &w in windows {
            let (x, y) = join(&sliding_window(&series, w)?, movement);
            cells.push(pearson(&x, &y)?);
        }
        rows.push((measure, cells));
    }
    Ok(CorrelationTable {
        windows: windows.to_vec(),
        rows,
        overlap,
    })
}

/// Inner join on dates: (sentiment values, movement values).
fn join<T: Scalar>(sentiment: &BTreeMap<NaiveDate, T>, movement: &MovementSeries<T>) -> (Vec<T>, Vec<T>) {
    sentiment
        .iter()
        .filter_map(|(d, s)| movement.get(*d).map(|m| (*s, m)))
        .unzip()
}

/// One row of the standardized movement vs. negated sentiment plot data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow<T> {
    pub date: NaiveDate,
    pub movement_z: T,
    pub neg_polarity_z: T,
    pub neg_subjectivity_z: T,
    pub neg_aggregate_z: T,
}

/// Standardized movement against standardized negated, `w`-smoothed
/// sentiment on the joined dates.
pub fn plot_data<T: Scalar>(movement: &MovementSeries<T>, daily: &[DailySentimentRow<T>], w: usize) -> Result<Vec<PlotRow<T>>> {
    let mut neg = Vec::new();
    let mut dates = Vec::new();
    let mut moves = Vec::new();
    for measure in SentimentMeasure::ALL {
        let smoothed = sliding_window(&column(daily, |r| measure.of(r)), w)?;
        let joined: Vec<(NaiveDate, T, T)> = smoothed
            .iter()
            .filter_map(|(d, s)| movement.get(*d).map(|m| (*d, -*s, m)))
            .collect();
        if dates.is_empty() {
            dates = joined.iter().map(|j| j.0).collect();
            moves = joined.iter().map(|j| j.2).collect();
        }
        neg.push(standardize(&joined.iter().map(|j| j.1).collect::<Vec<_>>())?);
    }
    let moves = standardize(&moves)?;
    Ok(dates
        .into_iter()
        .enumerate()
        .map(|(i, date)| PlotRow {
            date,
            movement_z: moves[i],
            neg_polarity_z: neg[0][i],
            neg_subjectivity_z: neg[1][i],
            neg_aggregate_z: neg[2][i],
        })
        .collect())
}

pub fn write_plot_csv<T: Scalar>(path: &Path, rows: &[PlotRow<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["date", "movement_z", "neg_polarity_z", "neg_subjectivity_z", "neg_aggregate_z"])
        .map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.date.to_string(),
            r.movement_z.to_string(),
            r.neg_polarity_z.to_string(),
            r.neg_subjectivity_z.to_string(),
            r.neg_aggregate_z.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Datelike;
    use std::io::Write as _;

    fn d(m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, m, day).unwrap()
    }

    fn bars(prices: &[f64]) -> Vec<PriceBar<f64>> {
        prices
            .iter()
            .enumerate()
            .map(|(i, &p)| PriceBar { date: d(3, 2 + i as u32), adj_close: p })
            .collect()
    }

    fn csv_file(s: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(s.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_prices_sorts_and_validates() {
        let f = csv_file("date,open,adj_close\n2020-03-03,1,101.5\n2020-03-02,1,100\n");
        let b = load_prices::<f64>(f.path()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].date, d(3, 2));
        assert_eq!(b[1].adj_close, 101.5);

        let f = csv_file("Date,Open,High,Low,Close,Adj Close,Volume\n2020-03-02,1,1,1,1,5,100\n");
        assert_eq!(load_prices::<f64>(f.path()).unwrap()[0].adj_close, 5.0);

        let f = csv_file("date,adj_close\n2020-03-02,0\n");
        assert!(matches!(load_prices::<f64>(f.path()), Err(Error::Price(_))));
        let f = csv_file("date,adj_close\n2020-03-02,10\n2020-03-02,11\n");
        assert!(matches!(load_prices::<f64>(f.path()), Err(Error::Price(_))));
    }

    #[test]
    fn pct_movement_examples() {
        assert_eq!(pct_movement(&bars(&[100.0, 101.0])).unwrap().get(d(3, 3)), Some(1.0));
        assert_eq!(pct_movement(&bars(&[100.0, 100.0])).unwrap().get(d(3, 3)), Some(0.0));
        assert_eq!(pct_movement(&bars(&[100.0, 90.0])).unwrap().get(d(3, 3)), Some(-10.0));
        let m = pct_movement(&bars(&[100.0, 90.0, 99.0])).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.get(d(3, 2)).is_none());
        assert!(pct_movement(&bars(&[100.0])).is_err());
    }

    #[test]
    fn corrected_movement_examples() {
        let c = MovementSeries(BTreeMap::from([(d(3, 3), 2.0), (d(3, 4), -1.0)]));
        let i = MovementSeries(BTreeMap::from([(d(3, 3), 0.5), (d(3, 4), -3.0), (d(3, 5), 9.0)]));
        let out = corrected_movement(&c, &i).unwrap();
        assert_eq!(out.get(d(3, 3)), Some(1.5));
        assert_eq!(out.get(d(3, 4)), Some(2.0));
        assert_eq!(out.len(), 2);
        assert!(corrected_movement(&c, &c).unwrap().iter().all(|(_, v)| v == 0.0));
        match corrected_movement(&i, &c) {
            Err(Error::MissingIndexDate(day)) => assert_eq!(day, d(3, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0_f64, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // cov = 2.5, var(x) = 1, var(y) = 6.333…, r = 2.5 / √6.333…
        let r = pearson(&x, &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - 2.5 / (19.0_f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(matches!(pearson(&x, &[1.0, 1.0, 1.0]), Err(Error::ZeroVariance(_))));
        assert!(pearson(&x, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn standardize_examples() {
        assert_eq!(standardize(&[1.0, 2.0, 3.0]).unwrap(), [-1.0, 0.0, 1.0]);
        assert!(standardize(&[4.0, 4.0]).is_err());
        let z = standardize(&[0.3_f64, -1.2, 5.5, 2.0]).unwrap();
        let zz = standardize(&z).unwrap();
        for (a, b) in z.iter().zip(&zz) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn daily_rows(values: &[(NaiveDate, f64, f64)]) -> Vec<DailySentimentRow<f64>> {
        values
            .iter()
            .map(|&(date, p, s)| DailySentimentRow {
                date,
                sum_pos: 0.0,
                sum_neg: 0.0,
                count: 1,
                mean_pos: 0.0,
                mean_neg: 0.0,
                mean_polarity: p,
                mean_subjectivity: s,
                p_d: 0.0,
                aggregate: (p + s) / 2.0,
            })
            .collect()
    }

    #[test]
    fn table_layout_and_self_correlation() {
        let moves: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let dates: Vec<NaiveDate> = (0..20).map(|i| d(3, 1) + chrono::Days::new(i)).collect();
        let movement = MovementSeries(dates.iter().copied().zip(moves.iter().copied()).collect());
        let daily = daily_rows(&dates.iter().zip(&moves).map(|(&dt, &m)| (dt, m, (m * m) / 30.0)).collect::<Vec<_>>());
        let t = correlation_table(&movement, &daily, &[1, 3, 5, 7, 9]).unwrap();
        assert_eq!(t.windows, [1, 3, 5, 7, 9]);
        assert_eq!(t.rows.iter().map(|r| r.0).collect::<Vec<_>>(), SentimentMeasure::ALL);
        assert!((t.cell(SentimentMeasure::Polarity, 1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(t.overlap, 20);

        let f = tempfile::NamedTempFile::new().unwrap();
        t.write_csv(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Window Size,1,3,5,7,9");
        assert!(lines[1].starts_with("Polarity Correlation,"));
        assert!(lines[3].starts_with("Aggregate Score Correlation,"));
    }

    #[test]
    fn table_needs_overlap() {
        let movement = MovementSeries(BTreeMap::from([(d(3, 9), 1.0)]));
        let daily = daily_rows(&[(d(3, 9), 0.1, 0.2), (d(3, 10), 0.2, 0.3)]);
        assert!(matches!(
            correlation_table(&movement, &daily, &[1]),
            Err(Error::InsufficientData { got: 1, .. })
        ));
    }

    #[test]
    fn plot_data_is_standardized() {
        let dates: Vec<NaiveDate> = (0..12).map(|i| d(3, 1) + chrono::Days::new(i)).collect();
        let movement = MovementSeries(dates.iter().map(|&dt| (dt, (dt.ordinal() % 5) as f64)).collect());
        let daily = daily_rows(&dates.iter().map(|&dt| (dt, (dt.ordinal() % 3) as f64 / 10.0, (dt.ordinal() % 4) as f64 / 10.0)).collect::<Vec<_>>());
        let rows = plot_data(&movement, &daily, 3).unwrap();
        assert_eq!(rows.len(), 12);
        let m: f64 = rows.iter().map(|r| r.movement_z).sum::<f64>() / 12.0;
        assert!(m.abs() < 1e-12);
    }
}
