//! Pattern-lexicon sentiment engine.
//!
//! Every token that matches a plain lexicon entry is a hit. A negator in the
//! three tokens before a hit flips and damps its polarity, and an intensifier
//! directly before it scales the polarity. The tweet score is the mean over
//! hits of polarity and subjectivity, or `(0, 0)` with no hits.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{CleanTweet, TweetCorpus};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LEXICON_HEADER: &str = "term\tpolarity\tsubjectivity\tintensity";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SentimentScore<T> {
    pub polarity: T,
    pub subjectivity: T,
}

impl<T: Scalar> SentimentScore<T> {
    pub fn neutral() -> Self {
        SentimentScore {
            polarity: T::zero(),
            subjectivity: T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry<T> {
    pub term: String,
    pub polarity: T,
    pub subjectivity: T,
    /// 1.0 for ordinary entries; anything else marks an intensifier
    /// (> 1) or diminisher (< 1).
    pub intensity: T,
}

impl<T: Scalar> LexiconEntry<T> {
    pub fn new(term: &str, polarity: T, subjectivity: T, intensity: T) -> Self {
        LexiconEntry {
            term: term.to_lowercase(),
            polarity,
            subjectivity,
            intensity,
        }
    }

    pub fn is_intensifier(&self) -> bool {
        self.intensity != T::one()
    }

    fn check(&self) -> std::result::Result<(), String> {
        let in_range = |x: T, lo: f64, hi: f64| x >= T::lit(lo) && x <= T::lit(hi);
        if self.term.is_empty() || self.term.chars().any(char::is_whitespace) {
            return Err(format!("invalid term {:?}", self.term));
        }
        if !in_range(self.polarity, -1.0, 1.0) {
            return Err(format!("polarity {} outside [-1, 1]", self.polarity));
        }
        if !in_range(self.subjectivity, 0.0, 1.0) {
            return Err(format!("subjectivity {} outside [0, 1]", self.subjectivity));
        }
        if !(self.intensity > T::zero() && self.intensity.is_finite()) {
            return Err(format!("intensity {} must be positive", self.intensity));
        }
        Ok(())
    }
}

/// Immutable term table; safe to share across scoring threads.
#[derive(Debug, Clone, Default)]
pub struct Lexicon<T> {
    entries: HashMap<String, LexiconEntry<T>>,
}

impl<T: Scalar> Lexicon<T> {
    /// Validates ranges and term uniqueness. Row numbers in errors are
    /// 1-based positions in `entries`.
    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry<T>>) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, entry) in entries.into_iter().enumerate() {
            let row = i + 1;
            entry.check().map_err(|message| Error::Lexicon { row, message })?;
            if map.contains_key(&entry.term) {
                return Err(Error::Lexicon {
                    row,
                    message: format!("duplicate term {:?}", entry.term),
                });
            }
            map.insert(entry.term.clone(), entry);
        }
        Ok(Lexicon { entries: map })
    }

    pub fn get(&self, term: &str) -> Option<&LexiconEntry<T>> {
        self.entries.get(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn intensifier(&self, term: &str) -> Option<T> {
        self.get(term).filter(|e| e.is_intensifier()).map(|e| e.intensity)
    }
}

/// Reads a tab-separated lexicon. The header line is optional, `#` starts a
/// comment line, and a missing intensity column defaults to 1.0. Row numbers
/// in errors are file line numbers.
pub fn load_lexicon<T: Scalar>(path: &Path) -> Result<Lexicon<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text)
}

pub fn parse_lexicon<T: Scalar>(text: &str) -> Result<Lexicon<T>> {
    let mut entries: HashMap<String, LexiconEntry<T>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || (row == 1 && line.starts_with("term\t")) {
            continue;
        }
        let err = |message: String| Error::Lexicon { row, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(err(format!("expected 3 or 4 tab-separated columns, got {}", cols.len())));
        }
        let num = |s: &str, what: &str| {
            T::parse_finite(s).ok_or_else(|| err(format!("{what}: not a number: {s:?}")))
        };
        let entry = LexiconEntry::new(
            cols[0].trim(),
            num(cols[1], "polarity")?,
            num(cols[2], "subjectivity")?,
            match cols.get(3) {
                Some(s) => num(s, "intensity")?,
                None => T::one(),
            },
        );
        entry.check().map_err(err)?;
        if entries.contains_key(&entry.term) {
            return Err(err(format!("duplicate term {:?}", entry.term)));
        }
        entries.insert(entry.term.clone(), entry);
    }
    Ok(Lexicon { entries })
}

/// Negation and intensification constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringRules<T> {
    pub negators: Vec<String>,
    /// Number of tokens before a hit searched for a negator.
    pub negation_window: usize,
    /// Multiplier applied to a negated hit's polarity.
    pub negation_factor: T,
}

impl<T: Scalar> Default for ScoringRules<T> {
    fn default() -> Self {
        ScoringRules {
            negators: ["not", "no", "never", "n't"].map(String::from).to_vec(),
            negation_window: 3,
            negation_factor: T::lit(-0.5),
        }
    }
}

impl<T> ScoringRules<T> {
    /// Listed negators match whole tokens; `n't` also matches contractions
    /// such as `don't` that the tokenizer keeps as one token.
    pub fn is_negator(&self, token: &str) -> bool {
        self.negators
            .iter()
            .any(|n| token == n || (n.contains('\'') && token.ends_with(n.as_str())))
    }
}

pub fn score_tweet<T: Scalar>(tweet: &CleanTweet, lexicon: &Lexicon<T>) -> SentimentScore<T> {
    score_tokens(&tweet.tokens, lexicon, &ScoringRules::default())
}

pub fn score_tokens<T: Scalar, S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon<T>,
    rules: &ScoringRules<T>,
) -> SentimentScore<T> {
    let clamp = |x: T| x.max(-T::one()).min(T::one());
    let mut polarity_sum = T::zero();
    let mut subjectivity_sum = T::zero();
    let mut hits = 0usize;

    for (i, token) in tokens.iter().enumerate() {
        let Some(entry) = lexicon.get(token.as_ref()).filter(|e| !e.is_intensifier()) else {
            continue;
        };
        let mut polarity = entry.polarity;
        let window = &tokens[i.saturating_sub(rules.negation_window)..i];
        if window.iter().any(|t| rules.is_negator(t.as_ref())) {
            polarity = polarity * rules.negation_factor;
        }
        if let Some(intensity) = i
            .checked_sub(1)
            .and_then(|j| lexicon.intensifier(tokens[j].as_ref()))
        {
            polarity = clamp(polarity * intensity);
        }
        polarity_sum = polarity_sum + clamp(polarity);
        subjectivity_sum = subjectivity_sum + entry.subjectivity;
        hits += 1;
    }

    if hits == 0 {
        return SentimentScore::neutral();
    }
    let n = T::from_count(hits);
    SentimentScore {
        polarity: clamp(polarity_sum / n),
        subjectivity: (subjectivity_sum / n).max(T::zero()).min(T::one()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredTweet<T> {
    pub id: String,
    pub date: NaiveDate,
    pub score: SentimentScore<T>,
}

/// Per-date scores, each list ordered by tweet id.
pub type DailyScores<T> = BTreeMap<NaiveDate, Vec<ScoredTweet<T>>>;

fn group_scored<T>(mut scored: Vec<ScoredTweet<T>>) -> DailyScores<T> {
    scored.sort_by(|a, b| (a.date, &a.id).cmp(&(b.date, &b.id)));
    let mut out: DailyScores<T> = BTreeMap::new();
    for s in scored {
        out.entry(s.date).or_default().push(s);
    }
    out
}

fn score_one<T: Scalar>(t: &CleanTweet, lexicon: &Lexicon<T>) -> ScoredTweet<T> {
    ScoredTweet {
        id: t.id.clone(),
        date: t.date,
        score: score_tweet(t, lexicon),
    }
}

/// Scores every tweet once, in parallel.
pub fn score_corpus<T: Scalar>(corpus: &TweetCorpus, lexicon: &Lexicon<T>) -> DailyScores<T> {
    group_scored(
        corpus
            .tweets()
            .par_iter()
            .map(|t| score_one(t, lexicon))
            .collect(),
    )
}

pub fn score_corpus_serial<T: Scalar>(corpus: &TweetCorpus, lexicon: &Lexicon<T>) -> DailyScores<T> {
    group_scored(corpus.tweets().iter().map(|t| score_one(t, lexicon)).collect())
}

/// Drops tweet ids, keeping only the per-date score lists.
pub fn scores_by_date<T: Copy>(scored: &DailyScores<T>) -> BTreeMap<NaiveDate, Vec<SentimentScore<T>>> {
    scored
        .iter()
        .map(|(d, v)| (*d, v.iter().map(|s| s.score).collect()))
        .collect()
}

/// Writes `id,date,polarity,subjectivity` CSV.
pub fn write_scores<T: Scalar>(path: &Path, scored: &DailyScores<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["id", "date", "polarity", "subjectivity"])
        .map_err(|e| Error::csv(path, e))?;
    for s in scored.values().flatten() {
        w.write_record([
            s.id.clone(),
            s.date.to_string(),
            s.score.polarity.to_string(),
            s.score.subjectivity.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores<T: Scalar>(path: &Path) -> Result<DailyScores<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut scored = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        if rec.len() < 4 {
            return Err(bad("expected id,date,polarity,subjectivity".into()));
        }
        let date = rec[1]
            .parse::<NaiveDate>()
            .map_err(|e| bad(format!("date: {e}")))?;
        let num = |s: &str| T::parse_finite(s).ok_or_else(|| bad(format!("not a number: {s:?}")));
        scored.push(ScoredTweet {
            id: rec[0].to_owned(),
            date,
            score: SentimentScore {
                polarity: num(&rec[2])?,
                subjectivity: num(&rec[3])?,
            },
        });
    }
    Ok(group_scored(scored))
}

/// Renders a lexicon back to TSV with the header, terms sorted.
pub fn write_lexicon<T: Scalar>(out: &mut impl Write, lexicon: &Lexicon<T>) -> std::io::Result<()> {
    writeln!(out, "{LEXICON_HEADER}")?;
    let mut terms: Vec<&LexiconEntry<T>> = lexicon.entries.values().collect();
    terms.sort_by(|a, b| a.term.cmp(&b.term));
    for e in terms {
        writeln!(out, "{}\t{}\t{}\t{}", e.term, e.polarity, e.subjectivity, e.intensity)?;
    }
    Ok(())
}
