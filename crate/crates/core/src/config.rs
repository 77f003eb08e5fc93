//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` or `;` are ignored, as are
//! `[section]` headers. Relative paths resolve against the config file's
//! directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::predict::{DateRange, Lags};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub company: String,
    pub tweets: PathBuf,
    pub lexicon: PathBuf,
    pub prices: PathBuf,
    pub index_prices: PathBuf,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    /// Smoothing window for the exported daily columns and plot data.
    pub window: usize,
    /// Window sizes for the correlation table.
    pub windows: Vec<usize>,
    pub lags: Lags,
    pub recommendation_threshold: f64,
    pub hold_band: f64,
    pub report_threshold: f64,
    pub top_k: usize,
    pub train: DateRange,
    pub test: DateRange,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub null_trials: usize,
}

const KEYS: [&str; 21] = [
    "company",
    "tweets",
    "lexicon",
    "prices",
    "index_prices",
    "include",
    "exclude",
    "window",
    "windows",
    "lags",
    "recommendation_threshold",
    "hold_band",
    "report_threshold",
    "top_k",
    "train_start",
    "train_end",
    "test_start",
    "test_end",
    "output_dir",
    "seed",
    "null_trials",
];

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().to_ascii_lowercase().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(map)
}

/// Splits a comma-separated list, dropping empty items.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(String::from)
        .collect()
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    split_list(s)
        .iter()
        .map(|x| x.parse().map_err(|_| Error::Config(format!("{what}: bad item {x:?}"))))
        .collect()
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let map = parse_pairs(text)?;
        let req = |k: &str| {
            map.get(k)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::Config(format!("missing required key {k:?}")))
        };
        let path = |k: &str| -> Result<PathBuf> {
            let p = PathBuf::from(req(k)?);
            Ok(if p.is_absolute() { p } else { base_dir.join(p) })
        };
        fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, k: &str, default: T) -> Result<T> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| Error::Config(format!("{k}: invalid value {v:?}"))),
            }
        }
        let date = |k: &str| -> Result<NaiveDate> {
            let v = req(k)?;
            v.parse().map_err(|_| Error::Config(format!("{k}: invalid date {v:?}")))
        };

        let cfg = PipelineConfig {
            company: req("company")?.clone(),
            tweets: path("tweets")?,
            lexicon: path("lexicon")?,
            prices: path("prices")?,
            index_prices: path("index_prices")?,
            include: map.get("include").map(|s| split_list(s)).unwrap_or_default(),
            exclude: map.get("exclude").map(|s| split_list(s)).unwrap_or_default(),
            window: num(&map, "window", 3)?,
            windows: match map.get("windows") {
                Some(s) => parse_list(s, "windows")?,
                None => vec![1, 3, 5, 7, 9],
            },
            lags: match map.get("lags") {
                Some(s) => Lags::new(parse_list(s, "lags")?).map_err(|e| Error::Config(e.to_string()))?,
                None => Lags::default(),
            },
            recommendation_threshold: num(&map, "recommendation_threshold", 0.5)?,
            hold_band: num(&map, "hold_band", 1.0)?,
            report_threshold: num(&map, "report_threshold", 10.0)?,
            top_k: num(&map, "top_k", 15)?,
            train: DateRange::new(date("train_start")?, date("train_end")?)
                .map_err(|e| Error::Config(format!("train range: {e}")))?,
            test: DateRange::new(date("test_start")?, date("test_end")?)
                .map_err(|e| Error::Config(format!("test range: {e}")))?,
            output_dir: path("output_dir")?,
            seed: num(&map, "seed", 42)?,
            null_trials: num(&map, "null_trials", 1000)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.company.trim().is_empty() {
            return bad("company must not be empty".into());
        }
        let paths = [&self.tweets, &self.lexicon, &self.prices, &self.index_prices, &self.output_dir];
        for (i, a) in paths.iter().enumerate() {
            if paths[i + 1..].contains(a) {
                return bad(format!("path {} is referenced twice", a.display()));
            }
        }
        if self.train.overlaps(&self.test) || self.train.end >= self.test.start {
            return bad(format!("train range {} must end before test range {}", self.train, self.test));
        }
        for (name, v) in [
            ("recommendation_threshold", self.recommendation_threshold),
            ("hold_band", self.hold_band),
            ("report_threshold", self.report_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        if self.windows.is_empty() {
            return bad("windows must not be empty".into());
        }
        if let Some(w) = std::iter::once(&self.window).chain(&self.windows).find(|w| **w == 0 || **w % 2 == 0) {
            return bad(format!("window sizes must be odd and positive, got {w}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# fixture
[pipeline]
company = tesla
tweets = tweets.jsonl
lexicon = /abs/lexicon.tsv
prices = tsla.csv
index_prices = dji.csv
include = tesla, tsla
exclude = nikola
train_start = 2020-03-06
train_end = 2020-04-10
test_start = 2020-04-11
test_end = 2020-04-25
output_dir = out
";

    #[test]
    fn parses_with_defaults() {
        let c = PipelineConfig::parse(BASIC, Path::new("/data")).unwrap();
        assert_eq!(c.tweets, PathBuf::from("/data/tweets.jsonl"));
        assert_eq!(c.lexicon, PathBuf::from("/abs/lexicon.tsv"));
        assert_eq!(c.include, ["tesla", "tsla"]);
        assert_eq!(c.windows, [1, 3, 5, 7, 9]);
        assert_eq!(c.lags, Lags::default());
        assert_eq!((c.report_threshold, c.top_k, c.seed, c.null_trials), (10.0, 15, 42, 1000));
        assert_eq!(c.recommendation_threshold, 0.5);
    }

    #[test]
    fn rejects_invalid() {
        let with = |extra: &str| PipelineConfig::parse(&format!("{BASIC}{extra}\n"), Path::new("/d"));
        assert!(with("bogus = 1").is_err());
        assert!(with("window = 4").is_err());
        assert!(with("report_threshold = -1").is_err());
        assert!(with("top_k = 0").is_err());
        assert!(with("company = again").is_err());
        let overlapping = BASIC.replace("test_start = 2020-04-11", "test_start = 2020-04-10");
        assert!(PipelineConfig::parse(&overlapping, Path::new("/d")).is_err());
        let same_path = BASIC.replace("dji.csv", "tsla.csv");
        assert!(PipelineConfig::parse(&same_path, Path::new("/d")).is_err());
        let missing = BASIC.replace("prices = tsla.csv\n", "");
        assert!(PipelineConfig::parse(&missing, Path::new("/d")).is_err());
    }
}
