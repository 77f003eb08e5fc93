use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use taureau_core::pipeline::{self, CorrelateOutputs, EvaluateOptions, PipelineError, Stage, StageContext};
use taureau_core::{DateRange, Error, Lags, PipelineConfig, RecommendationRule};

#[derive(Parser)]
#[command(name = "taureau", version, about = "Tweet sentiment to stock movement inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a tweet JSONL export, filter by keywords and write a cleaned corpus.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        company: String,
        #[arg(long, value_delimiter = ',')]
        include: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every tweet of a corpus with a lexicon.
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Score on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Aggregate tweet scores into daily statistics.
    Aggregate {
        #[arg(long)]
        scores: PathBuf,
        /// Append sliding-window smoothed columns with this odd window.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate smoothed daily sentiment with index-corrected movement.
    Correlate {
        #[command(flatten)]
        market: MarketArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9")]
        windows: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Plot data CSV; defaults to `<out stem>_plot.csv`.
        #[arg(long)]
        plot_out: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        plot_window: usize,
    },
    /// Build lagged sentiment feature rows with corrected movement targets.
    Features {
        #[command(flatten)]
        market: MarketArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        lags: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the least-squares model on the training date range.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        train_start: NaiveDate,
        #[arg(long)]
        train_end: NaiveDate,
        #[command(flatten)]
        test: TestRange,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on the test range, including the random-model baseline.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        test: TestRange,
        #[arg(long, default_value_t = 1000)]
        null_trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict movement for every date the daily sentiment supports.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        daily: PathBuf,
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the most repeated tweets on days with extreme predicted movement.
    Report {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        threshold: f64,
        #[arg(long, default_value_t = 15)]
        top: usize,
        #[arg(long, default_value = "")]
        company: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MarketArgs {
    #[arg(long)]
    daily: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[arg(long)]
    index_prices: PathBuf,
}

#[derive(Args)]
struct TestRange {
    #[arg(long, requires = "test_end")]
    test_start: Option<NaiveDate>,
    #[arg(long, requires = "test_start")]
    test_end: Option<NaiveDate>,
}

impl TestRange {
    fn range(&self) -> taureau_core::Result<Option<DateRange>> {
        match (self.test_start, self.test_end) {
            (Some(s), Some(e)) => DateRange::new(s, e).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Args)]
struct RuleArgs {
    /// Buy above +threshold, sell below -threshold (percent).
    #[arg(long = "recommend-threshold", default_value_t = 0.5)]
    threshold: f64,
    /// Hold is correct when |actual| is below this (percent).
    #[arg(long, default_value_t = 1.0)]
    hold_band: f64,
}

impl RuleArgs {
    fn rule(&self) -> RecommendationRule {
        RecommendationRule {
            threshold: self.threshold,
            hold_band: self.hold_band,
        }
    }
}

fn default_plot_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("correlation");
    out.with_file_name(format!("{stem}_plot.csv"))
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest {
            input,
            company,
            include,
            exclude,
            out,
        } => {
            let stats = pipeline::ingest_stage(&input, &company, &include, &exclude, &out).stage(Stage::Ingest)?;
            eprintln!("{stats}");
        }
        Command::Score {
            corpus,
            lexicon,
            out,
            serial,
        } => {
            let n = pipeline::score_stage(&corpus, &lexicon, &out, !serial).stage(Stage::Score)?;
            eprintln!("scored {n} tweets");
        }
        Command::Aggregate { scores, window, out } => {
            let (days, _) = pipeline::aggregate_stage(&scores, window, &out).stage(Stage::Aggregate)?;
            eprintln!("aggregated {days} days");
        }
        Command::Correlate {
            market,
            windows,
            out,
            plot_out,
            plot_window,
        } => {
            let plot = plot_out.unwrap_or_else(|| default_plot_path(&out));
            let table = pipeline::correlate_stage(
                &market.daily,
                &market.prices,
                &market.index_prices,
                &windows,
                CorrelateOutputs {
                    table: &out,
                    plot: &plot,
                    plot_window,
                },
            )
            .stage(Stage::Market)?;
            print!("{:<28}", "Window Size");
            for w in &table.windows {
                print!("{w:>9}");
            }
            println!();
            for (measure, cells) in &table.rows {
                print!("{:<28}", measure.label());
                for c in cells {
                    print!("{c:>9.3}");
                }
                println!();
            }
        }
        Command::Features { market, lags, out } => {
            let lags = Lags::new(lags).stage(Stage::Market)?;
            let n = pipeline::features_stage(&market.daily, &market.prices, &market.index_prices, &lags, &out)
                .stage(Stage::Market)?;
            eprintln!("wrote {n} feature rows");
        }
        Command::Train {
            features,
            train_start,
            train_end,
            test,
            out,
        } => {
            let train = DateRange::new(train_start, train_end).stage(Stage::Model)?;
            let model = pipeline::train_stage(&features, train, test.range().stage(Stage::Model)?, &out).stage(Stage::Model)?;
            eprintln!("trained on {} rows, intercept {:.4}", model.training_rows, model.intercept);
        }
        Command::Evaluate {
            model,
            features,
            test,
            null_trials,
            seed,
            rule,
            out,
        } => {
            let opts = EvaluateOptions {
                test: test.range().stage(Stage::Model)?,
                null_trials,
                seed,
                rule: rule.rule(),
            };
            let report = pipeline::evaluate_stage(&model, &features, &opts, &out).stage(Stage::Model)?;
            println!(
                "accuracy {:.3} (null {:.3} over {} trials), rmse {:.4}, n = {}",
                report.accuracy, report.null_accuracy, report.null_trials, report.rmse, report.n
            );
        }
        Command::Predict { model, daily, rule, out } => {
            let p = pipeline::predict_stage(&model, &daily, &rule.rule(), &out).stage(Stage::Model)?;
            eprintln!("predicted {} dates", p.len());
        }
        Command::Report {
            corpus,
            predictions,
            threshold,
            top,
            company,
            out,
        } => {
            let reports = pipeline::report_stage(&corpus, &company, &predictions, threshold, top, &out).stage(Stage::Report)?;
            for r in &reports {
                println!("{} predicted {:+.2}%: {} repeated tweets", r.date, r.predicted_movement, r.entries.len());
            }
        }
        Command::Pipeline { config, output_dir } => {
            let mut cfg = PipelineConfig::load(&config).stage(Stage::Config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let s = taureau_core::run_pipeline(&cfg)?;
            println!(
                "{}: {} tweets over {} days; test accuracy {:.3} (null {:.3}), rmse {:.4}; flagged {:?}",
                s.company,
                s.scored_tweets,
                s.days,
                s.accuracy,
                s.null_accuracy,
                s.rmse,
                s.flagged_dates.iter().map(|d| d.to_string()).collect::<Vec<_>>()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Stage::Config.exit_code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Io { path, .. } = &e.source {
                eprintln!("  path: {}", path.display());
            }
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
