//! Extreme predicted-movement days and their most repeated tweets.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::TweetCorpus;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_THRESHOLD: f64 = 10.0;
pub const DEFAULT_TOP_K: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatedTweet {
    pub text: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeDayReport<T> {
    pub date: NaiveDate,
    pub predicted_movement: T,
    /// Set when the corpus has no tweets for this date.
    pub no_tweets: bool,
    pub entries: Vec<RepeatedTweet>,
}

/// Dates whose predicted movement magnitude is strictly above `threshold`,
/// ascending.
pub fn flag_dates<T: Scalar>(predictions: &BTreeMap<NaiveDate, T>, threshold: T) -> Result<Vec<NaiveDate>> {
    if !(threshold > T::zero()) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    Ok(predictions
        .iter()
        .filter(|(_, p)| p.abs() > threshold)
        .map(|(d, _)| *d)
        .collect())
}

/// Top-`k` repeated tweets for each date. Dates missing from `predictions`
/// are skipped.
pub fn report_top_tweets<T: Scalar>(
    corpus: &TweetCorpus,
    predictions: &BTreeMap<NaiveDate, T>,
    dates: &[NaiveDate],
    k: usize,
) -> Vec<ExtremeDayReport<T>> {
    dates
        .iter()
        .filter_map(|&date| {
            let predicted_movement = *predictions.get(&date)?;
            let entries: Vec<RepeatedTweet> = corpus
                .most_repeated(date, k)
                .into_iter()
                .map(|(text, count)| RepeatedTweet { text, count })
                .collect();
            Some(ExtremeDayReport {
                date,
                predicted_movement,
                no_tweets: entries.is_empty(),
                entries,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile<'a, T> {
    pub company: &'a str,
    pub threshold: T,
    pub top_k: usize,
    pub flagged: Vec<NaiveDate>,
    pub reports: &'a [ExtremeDayReport<T>],
}

pub fn write_report<T: Scalar + Serialize>(path: &Path, file: &ReportFile<'_, T>) -> Result<()> {
    let json = serde_json::to_string_pretty(file).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{clean_and_tokenize, parse_timestamp, CompanyId, RawTweet};

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 4, day).unwrap()
    }

    fn corpus(day_texts: &[(u32, &str)]) -> TweetCorpus {
        let tweets = day_texts
            .iter()
            .enumerate()
            .map(|(i, (day, text))| {
                clean_and_tokenize(&RawTweet {
                    id: format!("{i:04}"),
                    timestamp: parse_timestamp(&format!("2020-04-{day:02}T12:00:00Z")).unwrap(),
                    text: text.to_string(),
                    company_query: "tesla".into(),
                })
            })
            .collect();
        TweetCorpus::new(CompanyId::new("tesla"), tweets).0
    }

    #[test]
    fn flagging_is_strict_and_by_magnitude() {
        let p = BTreeMap::from([(d(1), 10.6), (d(2), 3.0), (d(3), 10.0), (d(4), -12.3)]);
        assert_eq!(flag_dates(&p, 10.0).unwrap(), [d(1), d(4)]);
        assert!(flag_dates(&p, 0.0).is_err());
    }

    #[test]
    fn truncates_to_k() {
        let texts: Vec<String> = (0..20).map(|i| format!("tweet number {i}")).collect();
        let c = corpus(&texts.iter().map(|t| (12, t.as_str())).collect::<Vec<_>>());
        let p = BTreeMap::from([(d(12), 10.6)]);
        let r = report_top_tweets(&c, &p, &[d(12)], 15);
        assert_eq!(r[0].entries.len(), 15);
        let c = corpus(&[(12, "a"), (12, "b"), (12, "c")]);
        assert_eq!(report_top_tweets(&c, &p, &[d(12)], 15)[0].entries.len(), 3);
    }

    #[test]
    fn planted_duplicate_leads() {
        let mut texts = vec![(12, "Tesla Model 3 orders are huge")];
        texts.extend([(12, "other"), (12, "noise"), (12, "other")]);
        texts.extend(std::iter::repeat_n((12, "Tesla Model 3 orders are huge"), 4));
        let c = corpus(&texts);
        let p = BTreeMap::from([(d(12), 10.6), (d(13), -11.0)]);
        let r = report_top_tweets(&c, &p, &[d(12), d(13)], 15);
        assert_eq!(r[0].entries[0], RepeatedTweet { text: "tesla model 3 orders are huge".into(), count: 5 });
        assert_eq!(r[0].entries[1].count, 2);
        assert!(!r[0].no_tweets);
        assert!(r[1].no_tweets && r[1].entries.is_empty());
    }
}
