use std::collections::BTreeMap;

use chrono::{DateTime, Days, NaiveDate, Utc};
use proptest::prelude::*;

use taureau_core::aggregate::{daily_stats, smooth_values};
use taureau_core::corpus::{clean_and_tokenize, filter_by_keywords};
use taureau_core::market::{pct_movement, pearson};
use taureau_core::predict::{fit_ols, recommend};
use taureau_core::report::flag_dates;
use taureau_core::sentiment::{score_tweet, score_tokens, ScoringRules};
use taureau_core::{CompanyId, FeatureRow, KeywordFilter, Lexicon, LexiconEntry, PriceBar, RawTweet, SentimentScore, TweetCorpus};

fn day(i: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, 1).unwrap() + Days::new(i)
}

fn raw(id: usize, d: u64, text: &str) -> RawTweet {
    RawTweet {
        id: format!("{id:04}"),
        timestamp: DateTime::<Utc>::from_naive_utc_and_offset(day(d).and_hms_opt(10, 0, 0).unwrap(), Utc),
        text: text.to_string(),
        company_query: "acme".into(),
    }
}

fn lexicon_strategy() -> impl Strategy<Value = Lexicon> {
    prop::collection::btree_map("[a-e]{1,2}", (-1.0f64..=1.0, 0.0f64..=1.0, prop::sample::select(vec![1.0, 1.0, 0.5, 1.5, 3.0])), 0..20)
        .prop_map(|m| {
            Lexicon::from_entries(m.into_iter().map(|(t, (p, s, i))| LexiconEntry::new(&t, p, s, i))).unwrap()
        })
}

fn tokens_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop_oneof![4 => "[a-e]{1,2}", 1 => Just("not".to_string()), 1 => Just("isn't".to_string())], 0..30)
}

proptest! {
    #[test]
    fn tokens_are_lowercase_without_whitespace(text in "\\PC{0,80}") {
        let t = clean_and_tokenize(&raw(1, 0, &text));
        for tok in &t.tokens {
            prop_assert!(!tok.is_empty());
            prop_assert!(!tok.chars().any(char::is_whitespace), "{tok:?}");
            prop_assert!(!tok.chars().any(char::is_uppercase), "{tok:?}");
        }
        prop_assert!(!t.normalized_text.chars().any(char::is_uppercase));
    }

    #[test]
    fn keyword_filter_is_idempotent(texts in prop::collection::vec("(tesla|nikola|car|stock| ){1,6}", 0..30)) {
        let tweets = texts.iter().enumerate().map(|(i, t)| clean_and_tokenize(&raw(i, (i % 4) as u64, t))).collect();
        let (corpus, _) = TweetCorpus::new(CompanyId::new("tesla"), tweets);
        let filter = KeywordFilter::new(["tesla"], ["nikola"]).unwrap();
        let once = filter_by_keywords(&corpus, &filter);
        let twice = filter_by_keywords(&once, &filter);
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.tweets().iter().all(|t| t.normalized_text.contains("tesla") && !t.normalized_text.contains("nikola")));
    }

    #[test]
    fn most_repeated_counts_are_sorted_and_bounded(texts in prop::collection::vec("[ab]{1,2}", 1..40), k in 1usize..10) {
        let tweets = texts.iter().enumerate().map(|(i, t)| clean_and_tokenize(&raw(i, 0, t))).collect();
        let (corpus, _) = TweetCorpus::new(CompanyId::new("x"), tweets);
        let top = corpus.most_repeated(day(0), k);
        prop_assert!(top.len() <= k);
        prop_assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
        let all = corpus.most_repeated(day(0), usize::MAX);
        prop_assert_eq!(all.iter().map(|(_, n)| n).sum::<usize>(), texts.len());
    }

    #[test]
    fn scores_stay_in_range(lex in lexicon_strategy(), tokens in tokens_strategy()) {
        let s = score_tokens(&tokens, &lex, &ScoringRules::default());
        prop_assert!((-1.0..=1.0).contains(&s.polarity));
        prop_assert!((0.0..=1.0).contains(&s.subjectivity));
        let again = score_tokens(&tokens, &lex, &ScoringRules::default());
        prop_assert_eq!(s, again);
    }

    #[test]
    fn daily_stats_is_permutation_invariant(
        scores in prop::collection::vec((-1.0f64..=1.0, 0.0f64..=1.0), 1..60),
        seed in any::<u64>(),
    ) {
        let as_scores = |v: &[(f64, f64)]| v.iter().map(|&(p, s)| SentimentScore { polarity: p, subjectivity: s }).collect::<Vec<_>>();
        let mut shuffled = scores.clone();
        // Deterministic Fisher-Yates driven by the seed.
        let mut x = seed | 1;
        for i in (1..shuffled.len()).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            shuffled.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let a = daily_stats(&BTreeMap::from([(day(0), as_scores(&scores))])).unwrap();
        let b = daily_stats(&BTreeMap::from([(day(0), as_scores(&shuffled))])).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn window_preserves_length_and_bounds(xs in prop::collection::vec(-100.0f64..100.0, 0..50), half in 0usize..5) {
        let w = 2 * half + 1;
        let out = smooth_values(&xs, w).unwrap();
        prop_assert_eq!(out.len(), xs.len());
        let n = xs.len();
        for i in 0..n {
            if i >= half && i + half < n {
                let win = &xs[i - half..=i + half];
                let lo = win.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = win.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= out[i] && out[i] <= hi);
            } else {
                prop_assert_eq!(out[i].to_bits(), xs[i].to_bits());
            }
        }
    }

    #[test]
    fn constant_series_is_a_fixed_point(c in -1e6f64..1e6, n in 0usize..40, half in 0usize..5) {
        let xs = vec![c; n];
        prop_assert_eq!(smooth_values(&xs, 2 * half + 1).unwrap(), xs);
    }

    #[test]
    fn pearson_is_symmetric_and_bounded(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..80)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&y, &x)) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn compounding_movements_rebuilds_last_price(prices in prop::collection::vec(1.0f64..1000.0, 2..60)) {
        let bars: Vec<PriceBar> = prices.iter().enumerate().map(|(i, &p)| PriceBar { date: day(i as u64), adj_close: p }).collect();
        let m = pct_movement(&bars).unwrap();
        prop_assert_eq!(m.len(), prices.len() - 1);
        let rebuilt = m.iter().fold(prices[0], |p, (_, pct)| p * (1.0 + pct / 100.0));
        let last = *prices.last().unwrap();
        prop_assert!((rebuilt - last).abs() <= 1e-9 * last);
    }

    #[test]
    fn shifting_targets_shifts_only_the_intercept(
        rows in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 3), -5.0f64..5.0), 12..40),
        c in -10.0f64..10.0,
    ) {
        let build = |shift: f64| rows.iter().enumerate().map(|(i, (f, y))| FeatureRow { date: day(i as u64), features: f.clone(), target: y + shift }).collect::<Vec<_>>();
        let (a, b) = (fit_ols(&build(0.0)).unwrap(), fit_ols(&build(c)).unwrap());
        prop_assert!((b.intercept - a.intercept - c).abs() < 1e-5);
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn recommend_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(recommend(lo) <= recommend(hi));
    }

    #[test]
    fn raising_threshold_never_adds_flags(
        preds in prop::collection::vec(-30.0f64..30.0, 0..40),
        t1 in 0.1f64..20.0,
        dt in 0.0f64..10.0,
    ) {
        let map: BTreeMap<NaiveDate, f64> = preds.iter().enumerate().map(|(i, &p)| (day(i as u64), p)).collect();
        let low = flag_dates(&map, t1).unwrap();
        let high = flag_dates(&map, t1 + dt).unwrap();
        prop_assert!(high.iter().all(|d| low.contains(d)));
    }
}

#[test]
fn double_negation_applies_once() {
    let lex = Lexicon::from_entries([LexiconEntry::new("great", 0.8, 0.75, 1.0)]).unwrap();
    let t = clean_and_tokenize(&raw(1, 0, "not not great"));
    let s = score_tweet(&t, &lex);
    assert!((s.polarity + 0.4).abs() < 1e-15);
}
