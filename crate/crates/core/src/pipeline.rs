//! File-to-file stages and their composition into the full pipeline.
//!
//! Each stage reads its inputs from disk and writes its output file, so the
//! CLI subcommands and [`run_pipeline`] share one code path: the pipeline
//! reloads every intermediate file instead of passing values in memory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::aggregate::{daily_stats, read_daily, write_daily, MetaStats};
use crate::config::PipelineConfig;
use crate::corpus::{filter_by_keywords, ingest_jsonl, CompanyId, KeywordFilter, TweetCorpus};
use crate::error::{Error, Result};
use crate::market::{corrected_movement, correlation_table, load_prices, pct_movement, plot_data, write_plot_csv, CorrelationTable, MovementSeries};
use crate::predict::{
    build_features, evaluate_with, fit_ols, predict_dates, read_features, read_predictions, select_range,
    write_features, write_predictions, DateRange, EvalReport, Lags, ModelFile, RecommendationRule,
};
use crate::report::{flag_dates, report_top_tweets, write_report, ExtremeDayReport, ReportFile};
use crate::sentiment::{load_lexicon, read_scores, score_corpus, score_corpus_serial, scores_by_date, write_scores};

/// Pipeline stage, used to pick the process exit code on failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Score,
    Aggregate,
    Market,
    Model,
    Report,
    Config,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Ingest => 1,
            Stage::Score => 2,
            Stage::Aggregate => 3,
            Stage::Market => 4,
            Stage::Model => 5,
            Stage::Report => 6,
            Stage::Config => 64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Score => "score",
            Stage::Aggregate => "aggregate",
            Stage::Market => "market",
            Stage::Model => "train/evaluate",
            Stage::Report => "report",
            Stage::Config => "config",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{} stage failed: {source}", stage.name())]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestStats {
    pub read: usize,
    pub duplicates: usize,
    pub filtered_out: usize,
    pub kept: usize,
}

impl fmt::Display for IngestStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} tweets kept ({} unique read, {} duplicate ids collapsed, {} filtered out)",
            self.kept, self.read, self.duplicates, self.filtered_out
        )
    }
}

pub fn ingest_stage(
    input: &Path,
    company: &str,
    include: &[String],
    exclude: &[String],
    out: &Path,
) -> Result<IngestStats> {
    let (corpus, duplicates) = ingest_jsonl(input, CompanyId::new(company))?;
    let read = corpus.len();
    let kept = if include.is_empty() {
        if !exclude.is_empty() {
            return Err(Error::InvalidArgument("exclude terms need at least one include term".into()));
        }
        corpus
    } else {
        filter_by_keywords(&corpus, &KeywordFilter::new(include, exclude)?)
    };
    kept.save_jsonl(out)?;
    Ok(IngestStats {
        read,
        duplicates,
        filtered_out: read - kept.len(),
        kept: kept.len(),
    })
}

/// Scores a saved corpus; returns the number of tweets scored.
pub fn score_stage(corpus: &Path, lexicon: &Path, out: &Path, parallel: bool) -> Result<usize> {
    let corpus = TweetCorpus::load_jsonl(corpus, CompanyId::new(""))?;
    let lexicon = load_lexicon::<f64>(lexicon)?;
    let scored = if parallel {
        score_corpus(&corpus, &lexicon)
    } else {
        score_corpus_serial(&corpus, &lexicon)
    };
    write_scores(out, &scored)?;
    Ok(scored.values().map(Vec::len).sum())
}

/// Aggregates a score file into daily rows; returns the number of days and
/// the meta statistics.
pub fn aggregate_stage(scores: &Path, window: Option<usize>, out: &Path) -> Result<(usize, MetaStats<f64>)> {
    let scored = read_scores::<f64>(scores)?;
    let (rows, meta) = daily_stats(&scores_by_date(&scored))?;
    write_daily(out, &rows, window)?;
    Ok((rows.len(), meta))
}

/// Company movement corrected by index movement.
pub fn load_corrected_movement(prices: &Path, index_prices: &Path) -> Result<MovementSeries<f64>> {
    let company = pct_movement(&load_prices::<f64>(prices)?)?;
    let index = pct_movement(&load_prices::<f64>(index_prices)?)?;
    corrected_movement(&company, &index)
}

pub struct CorrelateOutputs<'a> {
    pub table: &'a Path,
    pub plot: &'a Path,
    pub plot_window: usize,
}

pub fn correlate_stage(
    daily: &Path,
    prices: &Path,
    index_prices: &Path,
    windows: &[usize],
    out: CorrelateOutputs<'_>,
) -> Result<CorrelationTable<f64>> {
    let rows = read_daily::<f64>(daily)?;
    let movement = load_corrected_movement(prices, index_prices)?;
    let table = correlation_table(&movement, &rows, windows)?;
    table.write_csv(out.table)?;
    write_plot_csv(out.plot, &plot_data(&movement, &rows, out.plot_window)?)?;
    Ok(table)
}

/// Builds the lagged feature file; returns the number of rows.
pub fn features_stage(daily: &Path, prices: &Path, index_prices: &Path, lags: &Lags, out: &Path) -> Result<usize> {
    let rows = read_daily::<f64>(daily)?;
    let movement = load_corrected_movement(prices, index_prices)?;
    let features = build_features(&rows, &movement, lags)?;
    write_features(out, &features, lags)?;
    Ok(features.len())
}

pub fn train_stage(features: &Path, train: DateRange, test: Option<DateRange>, out: &Path) -> Result<ModelFile> {
    if let Some(t) = &test {
        if train.overlaps(t) {
            return Err(Error::InvalidArgument(format!("train range {train} overlaps test range {t}")));
        }
    }
    let (rows, lags) = read_features::<f64>(features)?;
    let train_rows = select_range(&rows, &train);
    let model = fit_ols(&train_rows)?;
    let file = ModelFile::from_model(&model, lags, train, test, train_rows.len());
    file.save(out)?;
    Ok(file)
}

pub struct EvaluateOptions {
    /// Overrides the model file's test range.
    pub test: Option<DateRange>,
    pub null_trials: usize,
    pub seed: u64,
    pub rule: RecommendationRule<f64>,
}

pub fn evaluate_stage(model: &Path, features: &Path, opts: &EvaluateOptions, out: &Path) -> Result<EvalReport<f64>> {
    let model_file = ModelFile::load(model)?;
    let (rows, lags) = read_features::<f64>(features)?;
    if lags != model_file.lags {
        return Err(Error::InvalidArgument("feature lags do not match the model".into()));
    }
    let range = opts
        .test
        .or(model_file.test_range)
        .ok_or_else(|| Error::InvalidArgument("no test range given and none stored in the model".into()))?;
    let test_rows = select_range(&rows, &range);
    let report = evaluate_with(&model_file.model()?, &test_rows, opts.null_trials, opts.seed, &opts.rule)?;
    write_json(out, &report)?;
    Ok(report)
}

/// Predicts every date the daily file supports; returns the predictions.
pub fn predict_stage(
    model: &Path,
    daily: &Path,
    rule: &RecommendationRule<f64>,
    out: &Path,
) -> Result<BTreeMap<NaiveDate, f64>> {
    let model_file = ModelFile::load(model)?;
    let rows = read_daily::<f64>(daily)?;
    let predictions = predict_dates(&model_file.model()?, &rows, &model_file.lags);
    write_predictions(out, &predictions, rule)?;
    Ok(predictions)
}

pub fn report_stage(
    corpus: &Path,
    company: &str,
    predictions: &Path,
    threshold: f64,
    top_k: usize,
    out: &Path,
) -> Result<Vec<ExtremeDayReport<f64>>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top must be at least 1".into()));
    }
    let corpus = TweetCorpus::load_jsonl(corpus, CompanyId::new(company))?;
    let predictions = read_predictions::<f64>(predictions)?;
    let flagged = flag_dates(&predictions, threshold)?;
    let reports = report_top_tweets(&corpus, &predictions, &flagged, top_k);
    write_report(
        out,
        &ReportFile {
            company,
            threshold,
            top_k,
            flagged,
            reports: &reports,
        },
    )?;
    Ok(reports)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// File names written under the output directory.
pub mod artifacts {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const SCORES: &str = "scores.csv";
    pub const DAILY: &str = "daily.csv";
    pub const CORRELATION: &str = "correlation.csv";
    pub const PLOT: &str = "plot.csv";
    pub const FEATURES: &str = "features.csv";
    pub const MODEL: &str = "model.json";
    pub const EVALUATION: &str = "evaluation.json";
    pub const TRAIN_EVALUATION: &str = "evaluation_train.json";
    pub const PREDICTIONS: &str = "predictions.csv";
    pub const REPORT: &str = "report.json";
    pub const SUMMARY: &str = "summary.json";
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSummary {
    pub windows: Vec<usize>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub company: String,
    pub ingest: IngestStats,
    pub scored_tweets: usize,
    pub days: usize,
    pub meta: MetaStats<f64>,
    pub feature_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub correlation: CorrelationSummary,
    pub train_accuracy: f64,
    pub accuracy: f64,
    pub null_accuracy: f64,
    pub rmse: f64,
    pub seed: u64,
    pub null_trials: usize,
    pub flagged_dates: Vec<NaiveDate>,
    pub artifacts: Vec<&'static str>,
}

/// Runs ingest → score → aggregate → correlate → features → train →
/// evaluate → predict → report, writing every artifact and `summary.json`
/// under the configured output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> std::result::Result<Summary, PipelineError> {
    use artifacts::*;

    cfg.validate().stage(Stage::Config)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::io(&cfg.output_dir, e))
        .stage(Stage::Config)?;
    let at = |name: &str| -> PathBuf { cfg.output_dir.join(name) };

    let ingest = ingest_stage(&cfg.tweets, &cfg.company, &cfg.include, &cfg.exclude, &at(CORPUS)).stage(Stage::Ingest)?;
    let scored_tweets = score_stage(&at(CORPUS), &cfg.lexicon, &at(SCORES), true).stage(Stage::Score)?;
    let (days, meta) = aggregate_stage(&at(SCORES), Some(cfg.window), &at(DAILY)).stage(Stage::Aggregate)?;

    let table = correlate_stage(
        &at(DAILY),
        &cfg.prices,
        &cfg.index_prices,
        &cfg.windows,
        CorrelateOutputs {
            table: &at(CORRELATION),
            plot: &at(PLOT),
            plot_window: cfg.window,
        },
    )
    .stage(Stage::Market)?;
    let feature_rows = features_stage(&at(DAILY), &cfg.prices, &cfg.index_prices, &cfg.lags, &at(FEATURES)).stage(Stage::Market)?;

    let rule = RecommendationRule {
        threshold: cfg.recommendation_threshold,
        hold_band: cfg.hold_band,
    };
    let model = train_stage(&at(FEATURES), cfg.train, Some(cfg.test), &at(MODEL)).stage(Stage::Model)?;
    let eval_opts = |test| EvaluateOptions {
        test: Some(test),
        null_trials: cfg.null_trials,
        seed: cfg.seed,
        rule,
    };
    let train_eval = evaluate_stage(&at(MODEL), &at(FEATURES), &eval_opts(cfg.train), &at(TRAIN_EVALUATION)).stage(Stage::Model)?;
    let eval = evaluate_stage(&at(MODEL), &at(FEATURES), &eval_opts(cfg.test), &at(EVALUATION)).stage(Stage::Model)?;
    predict_stage(&at(MODEL), &at(DAILY), &rule, &at(PREDICTIONS)).stage(Stage::Model)?;

    let reports = report_stage(&at(CORPUS), &cfg.company, &at(PREDICTIONS), cfg.report_threshold, cfg.top_k, &at(REPORT))
        .stage(Stage::Report)?;

    let summary = Summary {
        company: cfg.company.clone(),
        ingest,
        scored_tweets,
        days,
        meta,
        feature_rows,
        train_rows: model.training_rows,
        test_rows: eval.n,
        correlation: CorrelationSummary {
            windows: table.windows.clone(),
            rows: table.rows.iter().map(|(m, v)| (m.label().to_string(), v.clone())).collect(),
        },
        train_accuracy: train_eval.accuracy,
        accuracy: eval.accuracy,
        null_accuracy: eval.null_accuracy,
        rmse: eval.rmse,
        seed: cfg.seed,
        null_trials: cfg.null_trials,
        flagged_dates: reports.iter().map(|r| r.date).collect(),
        artifacts: vec![
            CORPUS,
            SCORES,
            DAILY,
            CORRELATION,
            PLOT,
            FEATURES,
            MODEL,
            TRAIN_EVALUATION,
            EVALUATION,
            PREDICTIONS,
            REPORT,
        ],
    };
    write_json(&at(SUMMARY), &summary).stage(Stage::Report)?;
    Ok(summary)
}
