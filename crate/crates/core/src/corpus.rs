//! Tweet ingestion, keyword filtering, normalization and tokenization.
//!
//! Input is JSON lines with `id`, `created_at` and `text`. Every tweet is
//! bucketed by its UTC calendar date and the corpus is kept sorted by
//! `(date, id)` so downstream stages see a canonical order no matter how the
//! export was arranged.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static LINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("link regex"));
static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@[\p{L}\p{N}_]+").expect("mention regex"));

/// Emoticon sequences recognized inside tweets and the sentinel token each
/// one becomes.
pub const EMOTICONS: [(&str, &str); 4] = [
    (":)", "emo_pos"),
    (":(", "emo_neg"),
    (":D", "emo_pos"),
    (";)", "emo_pos"),
];

/// Company a corpus was collected for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompanyId(pub String);

impl CompanyId {
    pub fn new(name: impl Into<String>) -> Self {
        CompanyId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CompanyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTweet {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub company_query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanTweet {
    pub id: String,
    pub date: NaiveDate,
    pub tokens: Vec<String>,
    pub normalized_text: String,
}

/// Cleaned tweets for one company, sorted by `(date, id)` with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetCorpus {
    company: CompanyId,
    tweets: Vec<CleanTweet>,
}

impl TweetCorpus {
    /// Builds a corpus, keeping the first occurrence of each id and sorting.
    /// Returns the corpus and the number of duplicates dropped.
    pub fn new(company: CompanyId, tweets: Vec<CleanTweet>) -> (Self, usize) {
        let mut seen = HashSet::with_capacity(tweets.len());
        let before = tweets.len();
        let mut kept: Vec<CleanTweet> = tweets
            .into_iter()
            .filter(|t| seen.insert(t.id.clone()))
            .collect();
        let duplicates = before - kept.len();
        kept.sort_by(|a, b| (a.date, &a.id).cmp(&(b.date, &b.id)));
        (
            TweetCorpus {
                company,
                tweets: kept,
            },
            duplicates,
        )
    }

    pub fn empty(company: CompanyId) -> Self {
        TweetCorpus {
            company,
            tweets: Vec::new(),
        }
    }

    pub fn company(&self) -> &CompanyId {
        &self.company
    }

    pub fn tweets(&self) -> &[CleanTweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Tweets posted on `date`.
    pub fn day(&self, date: NaiveDate) -> &[CleanTweet] {
        let start = self.tweets.partition_point(|t| t.date < date);
        let end = self.tweets.partition_point(|t| t.date <= date);
        &self.tweets[start..end]
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> = self.tweets.iter().map(|t| t.date).collect();
        dates.dedup();
        dates
    }

    /// The `k` most repeated normalized texts on `date`, by descending count
    /// then ascending text.
    pub fn most_repeated(&self, date: NaiveDate, k: usize) -> Vec<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in self.day(date) {
            *counts.entry(t.normalized_text.as_str()).or_default() += 1;
        }
        let mut groups: Vec<(String, usize)> = counts
            .into_iter()
            .map(|(text, n)| (text.to_owned(), n))
            .collect();
        // BTreeMap iteration is already text-ascending; a stable sort on count keeps that tie order.
        groups.sort_by_key(|g| std::cmp::Reverse(g.1));
        groups.truncate(k);
        groups
    }

    /// Writes one [`CleanTweet`] JSON object per line.
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for t in &self.tweets {
            serde_json::to_writer(&mut out, t).map_err(|e| Error::json(path, e))?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a corpus written by [`TweetCorpus::save_jsonl`].
    pub fn load_jsonl(path: &Path, company: CompanyId) -> Result<Self> {
        let tweets = read_lines(path)?
            .into_iter()
            .map(|(line_no, line)| {
                serde_json::from_str::<CleanTweet>(&line).map_err(|e| Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TweetCorpus::new(company, tweets).0)
    }
}

/// Case-insensitive substring keyword rule.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordFilter {
    include: Vec<String>,
    exclude: Vec<String>,
}

impl KeywordFilter {
    pub fn new<I, E, S, U>(include: I, exclude: E) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        E: IntoIterator<Item = U>,
        S: AsRef<str>,
        U: AsRef<str>,
    {
        let norm = |s: &str| s.trim().to_lowercase();
        let include: Vec<String> = include
            .into_iter()
            .map(|s| norm(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        if include.is_empty() {
            return Err(Error::InvalidArgument(
                "keyword filter needs at least one include term".into(),
            ));
        }
        let exclude = exclude
            .into_iter()
            .map(|s| norm(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        Ok(KeywordFilter { include, exclude })
    }

    pub fn matches(&self, tweet: &CleanTweet) -> bool {
        let text = tweet.normalized_text.to_lowercase();
        self.include.iter().any(|k| text.contains(k.as_str()))
            && !self.exclude.iter().any(|k| text.contains(k.as_str()))
    }
}

pub fn filter_by_keywords(corpus: &TweetCorpus, filter: &KeywordFilter) -> TweetCorpus {
    TweetCorpus {
        company: corpus.company.clone(),
        tweets: corpus
            .tweets
            .iter()
            .filter(|t| filter.matches(t))
            .cloned()
            .collect(),
    }
}

/// Normalizes and tokenizes one tweet.
///
/// Links and @mentions are dropped entirely, `#` is stripped from hashtags,
/// emoticons become sentinel tokens and every other non letter/digit/
/// apostrophe character separates tokens.
pub fn clean_and_tokenize(raw: &RawTweet) -> CleanTweet {
    let stripped = strip_links_and_mentions(&raw.text);
    // Characters without a lowercase form (e.g. mathematical capitals) are dropped.
    let lowered: String = stripped.to_lowercase().chars().filter(|c| !c.is_uppercase()).collect();
    let normalized_text = lowered
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let tokens = stripped.split_whitespace().flat_map(tokenize_chunk).collect();
    CleanTweet {
        id: raw.id.clone(),
        date: raw.timestamp.date_naive(),
        tokens,
        normalized_text,
    }
}

fn strip_links_and_mentions(text: &str) -> String {
    let no_links = LINK.replace_all(text, " ");
    MENTION.replace_all(&no_links, " ").into_owned()
}

fn tokenize_chunk(chunk: &str) -> Vec<String> {
    fn flush(buf: &mut String, out: &mut Vec<String>) {
        let token = buf.trim_matches('\'');
        if !token.is_empty() {
            out.push(token.to_owned());
        }
        buf.clear();
    }

    let mut out = Vec::new();
    let mut buf = String::new();
    let mut rest = chunk;
    'scan: while let Some(c) = rest.chars().next() {
        for (emoticon, sentinel) in EMOTICONS {
            if let Some(after) = rest.strip_prefix(emoticon) {
                flush(&mut buf, &mut out);
                out.push(sentinel.to_owned());
                rest = after;
                continue 'scan;
            }
        }
        rest = &rest[c.len_utf8()..];
        if c == '\'' || c == '\u{2019}' {
            buf.push('\'');
        } else if c.is_alphanumeric() {
            buf.extend(c.to_lowercase().filter(|l| !l.is_uppercase()));
        } else {
            flush(&mut buf, &mut out);
        }
    }
    flush(&mut buf, &mut out);
    out
}

#[derive(Deserialize)]
struct TweetLine {
    id: TweetId,
    created_at: String,
    text: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TweetId {
    Text(String),
    Number(u64),
}

impl TweetId {
    fn into_string(self) -> String {
        match self {
            TweetId::Text(s) => s,
            TweetId::Number(n) => n.to_string(),
        }
    }
}

/// Parses RFC 3339 / ISO-8601 timestamps with an offset, falling back to the
/// classic Twitter API format (`Wed Oct 10 20:19:24 +0000 2018`).
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f%z"))
        .or_else(|_| DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y"))
        .ok()
        .map(|dt| dt.with_timezone(&Utc))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    Ok(lines)
}

/// Parses raw tweets from a JSON-lines file. Blank lines are skipped.
pub fn read_raw_tweets(path: &Path, company: &CompanyId) -> Result<Vec<RawTweet>> {
    read_lines(path)?
        .into_iter()
        .map(|(line_no, line)| {
            let parse_err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: line_no,
                message,
            };
            let rec: TweetLine = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            let id = rec.id.into_string();
            if id.is_empty() {
                return Err(parse_err("empty tweet id".into()));
            }
            if rec.text.trim().is_empty() {
                return Err(parse_err(format!("tweet {id}: empty text")));
            }
            let timestamp = parse_timestamp(&rec.created_at).ok_or_else(|| Error::Timestamp {
                id: id.clone(),
                timestamp: rec.created_at.clone(),
            })?;
            Ok(RawTweet {
                id,
                timestamp,
                text: rec.text,
                company_query: company.0.clone(),
            })
        })
        .collect()
}

/// Reads, cleans and indexes a tweet export. Returns the corpus and the
/// number of duplicate ids that were collapsed to their first occurrence.
pub fn ingest_jsonl(path: &Path, company: CompanyId) -> Result<(TweetCorpus, usize)> {
    let raw = read_raw_tweets(path, &company)?;
    let cleaned: Vec<CleanTweet> = raw.par_iter().map(clean_and_tokenize).collect();
    Ok(TweetCorpus::new(company, cleaned))
}
