//! Regenerates the bundled Tesla fixture under `fixtures/tesla/`.
//!
//! ```text
//! cargo run -p taureau-cli --example make_fixture -- fixtures
//! ```
//!
//! Tweets run daily from 2020-03-01 to 2020-04-30. Company prices exist on
//! trading days only, and the index-corrected movement is planted from the
//! previous day's mean polarity, so the fitted model has a real signal. An
//! all-positive Saturday (April 11) pushes Sunday's prediction past +10%.
//! That Sunday also carries a five-times repeated tweet for the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, TimeZone, Utc, Weekday};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use taureau_core::sentiment::{load_lexicon, score_tweet};
use taureau_core::{corpus, Lexicon};

const SEED: u64 = 20200412;
const SPIKE: (u32, u32) = (4, 11);
const REPEAT_DAY: (u32, u32) = (4, 12);
const REPEATED: &str = "Tesla is getting a huge number of Model 3 orders this week";
/// Corrected percent movement per unit of lag-1 polarity above the centre.
const GAIN: f64 = 45.0;
const CENTRE: f64 = 0.14;
const GOOD_FRIDAY: (u32, u32) = (4, 10);

const SUBJECTS: [&str; 10] = [
    "Tesla",
    "$TSLA",
    "TSLA",
    "Tesla stock",
    "The new Tesla Model Y",
    "Tesla Model 3",
    "Tesla deliveries",
    "Elon and Tesla",
    "Tesla Gigafactory",
    "My Tesla",
];

const POSITIVE: [&str; 14] = [
    "is looking really good today",
    "had a great quarter",
    "is amazing, love it",
    "deliveries are ahead of expectations",
    "is a very strong buy",
    "just keeps winning",
    "rally is impressive",
    "feels like a solid recovery",
    "is the best car I have owned :)",
    "growth is incredible",
    "is not bad at all",
    "shares soaring, bullish",
    "looks super promising",
    "production is efficient and fast",
];

const NEGATIVE: [&str; 12] = [
    "is overvalued and risky",
    "had a terrible week",
    "drops again, bearish",
    "delays are disappointing",
    "is not good news for anyone",
    "selloff looks ugly :(",
    "recall problems again",
    "shares falling hard",
    "is a bubble waiting to crash",
    "factory shutdown is bad",
    "losses keep growing, I'm worried",
    "don't like this at all",
];

const NEUTRAL: [&str; 8] = [
    "earnings call is on Wednesday",
    "what do you all think",
    "charging stations near the highway",
    "article in the paper this morning",
    "price target updated",
    "test drive booked for Saturday",
    "stock split rumours",
    "autopilot update rolling out",
];

const OFF_TOPIC: [&str; 4] = [
    "Nikola Tesla biography is a great read",
    "Nikola Tesla invented so much, amazing genius",
    "visiting the Nikola Tesla museum in Belgrade",
    "Nikola Tesla coil demonstration was terrible",
];

const EXTRAS: [&str; 6] = [
    "",
    " #Tesla",
    " https://t.co/aBc123",
    " @elonmusk",
    " #EV #stocks",
    " www.example.com/tsla",
];

struct Day {
    date: NaiveDate,
    texts: Vec<String>,
}

fn d(m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, m, day).expect("valid date")
}

fn company_tweet(rng: &mut ChaCha8Rng, p_pos: f64, p_sent: f64) -> String {
    let subject = SUBJECTS.choose(rng).unwrap();
    let body = if rng.random_bool(p_sent) {
        if rng.random_bool(p_pos) {
            POSITIVE.choose(rng).unwrap()
        } else {
            NEGATIVE.choose(rng).unwrap()
        }
    } else {
        NEUTRAL.choose(rng).unwrap()
    };
    format!("{subject} {body}{}", EXTRAS.choose(rng).unwrap())
}

fn day_polarity(texts: &[String], lexicon: &Lexicon, date: NaiveDate) -> f64 {
    let total: f64 = texts
        .iter()
        .map(|text| {
            let raw = corpus::RawTweet {
                id: String::new(),
                timestamp: Utc.from_utc_datetime(&date.and_hms_opt(12, 0, 0).unwrap()),
                text: text.clone(),
                company_query: String::new(),
            };
            score_tweet(&corpus::clean_and_tokenize(&raw), lexicon).polarity
        })
        .sum();
    total / texts.len() as f64
}

/// Company tweets for one day, resampled until the day's mean polarity sits
/// in the narrow positive band typical of real collections.
fn ordinary_day(rng: &mut ChaCha8Rng, lexicon: &Lexicon, date: NaiveDate, p_pos: f64) -> (Vec<String>, f64) {
    loop {
        let n = rng.random_range(28..=44);
        let texts: Vec<String> = (0..n).map(|_| company_tweet(rng, p_pos, 0.7)).collect();
        let pol = day_polarity(&texts, lexicon, date);
        if (0.06..=0.22).contains(&pol) {
            return (texts, pol);
        }
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn is_trading_day(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) && date != d(GOOD_FRIDAY.0, GOOD_FRIDAY.1)
}

fn write_prices(path: &Path, bars: &[(NaiveDate, f64)]) -> std::io::Result<()> {
    let mut s = String::from("Date,Open,Close,Adj Close,Volume\n");
    for (i, (date, px)) in bars.iter().enumerate() {
        let px = (px * 100.0).round() / 100.0;
        writeln!(s, "{date},{px:.2},{px:.2},{px:.2},{}", 1_000_000 + 7919 * i).unwrap();
    }
    fs::write(path, s)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    let lexicon: Lexicon = load_lexicon(&root.join("lexicon.tsv"))?;
    let out = root.join("tesla");
    fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // Latent daily mood: a bounded random walk on the probability that a
    // sentiment-bearing tweet is positive.
    let mut days = Vec::new();
    let mut polarity = BTreeMap::new();
    let mut p_pos: f64 = 0.62;
    let mut date = d(3, 1);
    while date <= d(4, 30) {
        p_pos = (p_pos + rng.random_range(-0.06..0.06)).clamp(0.5, 0.75);
        let (mut texts, pol) = if date == d(SPIKE.0, SPIKE.1) {
            let texts: Vec<String> = (0..40).map(|_| company_tweet(&mut rng, 1.0, 1.0)).collect();
            let pol = day_polarity(&texts, &lexicon, date);
            (texts, pol)
        } else {
            ordinary_day(&mut rng, &lexicon, date, p_pos)
        };
        if date == d(REPEAT_DAY.0, REPEAT_DAY.1) {
            texts.extend(std::iter::repeat_n(REPEATED.to_string(), 5));
        }
        let pol = if texts.len() > 44 { day_polarity(&texts, &lexicon, date) } else { pol };
        polarity.insert(date, pol);
        // Query noise the keyword filter must remove.
        for _ in 0..rng.random_range(2..=4) {
            texts.push(OFF_TOPIC.choose(&mut rng).unwrap().to_string());
        }
        texts.push("SpaceX starship static fire went well".into());
        texts.shuffle(&mut rng);
        days.push(Day { date, texts });
        date = date + Days::new(1);
    }

    let mut jsonl = String::new();
    let mut id: u64 = 1_234_000_000_000_000_000;
    for day in &days {
        let mut secs: Vec<u32> = (0..day.texts.len()).map(|_| rng.random_range(0..86_400)).collect();
        secs.sort_unstable();
        for (text, s) in day.texts.iter().zip(secs) {
            id += rng.random_range(1..5000);
            let ts = Utc.from_utc_datetime(&day.date.and_hms_opt(s / 3600, s / 60 % 60, s % 60).unwrap());
            // Mix the two timestamp formats seen in exports.
            let created = if id % 3 == 0 {
                ts.format("%a %b %d %H:%M:%S %z %Y").to_string()
            } else {
                ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
            };
            writeln!(jsonl, "{{\"id\":\"{id}\",\"created_at\":\"{created}\",\"text\":{}}}", json_escape(text))?;
        }
        // One repeated export line per week to exercise duplicate removal.
        if day.date.weekday() == Weekday::Wed {
            let last = jsonl.lines().last().unwrap().to_string();
            writeln!(jsonl, "{last}")?;
        }
    }
    fs::write(out.join("tweets.jsonl"), jsonl)?;

    let index_noise = Normal::new(0.0, 2.2)?;
    let residual = Normal::new(0.0, 0.35)?;
    let trading: Vec<NaiveDate> = {
        let mut v = Vec::new();
        let mut t = d(3, 2);
        while t <= d(4, 30) {
            if is_trading_day(t) {
                v.push(t);
            }
            t = t + Days::new(1);
        }
        v
    };
    let (mut dji, mut tsla) = (26_703.32, 743.62);
    let mut dji_bars = vec![(trading[0], dji)];
    let mut tsla_bars = vec![(trading[0], tsla)];
    for &t in &trading[1..] {
        let index_move: f64 = index_noise.sample(&mut rng);
        let lag1 = polarity[&(t - Days::new(1))];
        let corrected = GAIN * (lag1 - CENTRE) + residual.sample(&mut rng);
        dji *= 1.0 + index_move / 100.0;
        tsla *= 1.0 + (index_move + corrected) / 100.0;
        dji_bars.push((t, dji));
        tsla_bars.push((t, tsla));
    }
    write_prices(&out.join("tsla.csv"), &tsla_bars)?;
    write_prices(&out.join("dji.csv"), &dji_bars)?;

    let ini = "\
# Bundled example: Tesla tweets and prices, March-April 2020.
[pipeline]
company = tesla
tweets = tweets.jsonl
lexicon = ../lexicon.tsv
prices = tsla.csv
index_prices = dji.csv
include = tesla, tsla
exclude = nikola
window = 3
windows = 1, 3, 5, 7, 9
lags = 1, 2, 3
recommendation_threshold = 0.5
hold_band = 1.0
report_threshold = 10
top_k = 15
train_start = 2020-03-04
train_end = 2020-04-09
test_start = 2020-04-13
test_end = 2020-04-30
output_dir = out
seed = 42
null_trials = 1000
";
    fs::write(out.join("pipeline.ini"), ini)?;
    eprintln!("wrote fixture for {} days to {}", days.len(), out.display());
    Ok(())
}
