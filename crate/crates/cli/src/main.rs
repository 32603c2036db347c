use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gec_core::annotate::AnnotationProvider;
use gec_core::corpus::{parse_annotated, parse_nbest, parse_sources, serialize_annotated, serialize_nbest, serialize_sources, Dataset, NBestList, Sentence};
use gec_core::cw::{CWModel, CWTrainConfig};
use gec_core::decision::{correct_all, tune_weights, ClassifierScorer, DecisionConfig, LogLinearWeights, Mode, ScoredList, TuneConfig};
use gec_core::edit::serialize_edit_list;
use gec_core::eval::{evaluate, sign_test};
use gec_core::features::{parse_examples, pool_edits, serialize_examples, FeatureDictionary, FeatureExtractor, FeatureGroups};
use gec_core::lm::{train_lm, NGramModel};
use gec_core::pipeline::{
    ablation_report, ablation_tsv, edits_from_hypotheses, featurize, run_ablation, run_pipeline, train_classifier,
    tune_selection_threshold, vectorize_all, write_file, write_outputs, Inputs, PipelineConfig, Split,
};
use gec_core::synth::{build_corpus, SynthConfig};

/// Edit classification, n-best reranking and edit selection for grammatical
/// error correction.
#[derive(Parser)]
#[command(name = "nbest-gec", version)]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an n-gram language model on a sentence-per-line corpus.
    TrainLm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the distinct edits of every n-best list.
    ExtractEdits {
        #[command(flatten)]
        lists: ListArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write labeled feature vectors for every edit of a gold-annotated n-best file.
    Featurize {
        #[command(flatten)]
        scoring: LmArgs,
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the edit classifier on a labeled example file.
    TrainClassifier {
        #[arg(long)]
        examples: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.9)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        initial_variance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// Output classifier model.
        #[arg(long)]
        out: PathBuf,
        /// Output feature dictionary.
        #[arg(long)]
        dict_out: PathBuf,
    },
    /// Grid-search the classifier threshold for edit selection on a dev set.
    TuneThreshold {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Output model with the tuned threshold.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune the log-linear weights for reranking on a dev set.
    TuneWeights {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Starting weights (defaults to 1 for every decoder feature).
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerank n-best lists with the edit-classifier feature.
    Rerank {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        lists: ListArgs,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedily select classifier-approved edits from n-best lists.
    Select {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        lists: ListArgs,
        /// Threshold (defaults to the one stored in the model).
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score corrected sentences against gold annotations.
    Evaluate {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Print the tab-separated record instead of the text block.
        #[arg(long)]
        tsv: bool,
    },
    /// Bootstrap sign test that system A beats system B.
    Significance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Classifier accuracy with each feature group removed.
    Ablate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic corpus with simulated n-best lists.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        train: usize,
        #[arg(long, default_value_t = 300)]
        dev: usize,
        #[arg(long, default_value_t = 300)]
        test: usize,
        #[arg(long, default_value_t = 5000)]
        lm_extra: usize,
        #[arg(long, default_value_t = 5)]
        nbest: usize,
    },
    /// Run every stage and write the comparison report.
    Pipeline {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long, env = "NBEST_GEC_CONFIG")]
    config: PathBuf,
    /// Overrides a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overrides the output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::from_file(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        for o in &self.overrides {
            let Some((k, v)) = o.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {o:?}");
            };
            cfg.set(k.trim(), v.trim(), Path::new("."))?;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ListArgs {
    #[arg(long)]
    nbest: PathBuf,
    /// Source sentences: an annotated file or one sentence per line.
    #[arg(long)]
    sources: PathBuf,
}

impl ListArgs {
    fn load(&self) -> Result<Vec<NBestList>> {
        let text = read(&self.sources)?;
        let sources = if text.starts_with("S ") {
            parse_annotated(&text)?.sources()
        } else {
            parse_sources(&text)
        };
        Ok(parse_nbest(&read(&self.nbest)?, &sources)?)
    }
}

#[derive(Args)]
struct LmArgs {
    #[arg(long)]
    lm: PathBuf,
    /// Annotation file (sentences not in it fall back to the builtin tagger).
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value = "smt,lexical_pos,context,lm")]
    groups: FeatureGroups,
}

struct Scoring {
    lm: NGramModel,
    provider: AnnotationProvider,
    groups: FeatureGroups,
}

impl LmArgs {
    fn load(&self) -> Result<Scoring> {
        let provider = match &self.annotations {
            Some(p) => AnnotationProvider::from_file_text(&read(p)?, true)?,
            None => AnnotationProvider::Builtin,
        };
        Ok(Scoring {
            lm: NGramModel::from_text(&read(&self.lm)?)?,
            provider,
            groups: self.groups.clone(),
        })
    }
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    scoring: LmArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dict: PathBuf,
}

impl ModelArgs {
    fn load(&self) -> Result<(Scoring, FeatureDictionary, CWModel)> {
        Ok((
            self.scoring.load()?,
            FeatureDictionary::from_text(&read(&self.dict)?)?,
            CWModel::from_text(&read(&self.model)?)?,
        ))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_gold(path: &Path) -> Result<Dataset> {
    Ok(parse_annotated(&read(path)?)?)
}

fn score_lists(s: &Scoring, dict: &FeatureDictionary, model: &CWModel, lists: &[NBestList]) -> Result<Vec<ScoredList>> {
    let scorer = ClassifierScorer {
        extractor: FeatureExtractor::new(&s.lm, &s.provider, &s.groups),
        dictionary: dict,
        model,
    };
    Ok(gec_core::decision::score_lists(lists, &scorer)?)
}

fn write_sentences(path: &Path, out: &[(Sentence, Vec<gec_core::edit::Edit>)]) -> Result<()> {
    let sentences: Vec<Sentence> = out.iter().map(|(s, _)| s.clone()).collect();
    Ok(write_file(path, &serialize_sources(&sentences))?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainLm { corpus, order, out } => {
            let lm = train_lm(&parse_sources(&read(&corpus)?), order)?;
            write_file(&out, &lm.to_text())?;
        }
        Command::ExtractEdits { lists, out } => {
            let lists = lists.load()?;
            let edits: Vec<_> = lists
                .iter()
                .flat_map(|l| pool_edits(l, l.entries.len()).into_iter().map(move |e| (l.source_id, e)))
                .collect();
            write_file(&out, &serialize_edit_list(&edits))?;
        }
        Command::Featurize { scoring, nbest, gold, out } => {
            let s = scoring.load()?;
            let gold = load_gold(&gold)?;
            let split = Split::new(gold.clone(), parse_nbest(&read(&nbest)?, &gold.sources())?)?;
            let examples = featurize(&split, &FeatureExtractor::new(&s.lm, &s.provider, &s.groups))?;
            write_file(&out, &serialize_examples(&examples))?;
        }
        Command::TrainClassifier {
            examples,
            epochs,
            eta,
            initial_variance,
            seed,
            min_count,
            out,
            dict_out,
        } => {
            let examples = parse_examples(&read(&examples)?)?;
            let cfg = CWTrainConfig {
                epochs,
                eta,
                initial_variance,
                shuffle_seed: seed,
            };
            let (dict, model) = train_classifier(&examples, min_count, &cfg)?;
            let train_acc = gec_core::cw::accuracy(&model, &vectorize_all(&examples, &dict))?;
            write_outputs_pair(&out, &model.to_text(), &dict_out, &dict.to_text())?;
            println!("training accuracy {train_acc:.4}");
        }
        Command::TuneThreshold { model, nbest, gold, out } => {
            let (s, dict, mut cw) = model.load()?;
            let gold = load_gold(&gold)?;
            let lists = parse_nbest(&read(&nbest)?, &gold.sources())?;
            let scored = score_lists(&s, &dict, &cw, &lists)?;
            let (tau, grid) = tune_selection_threshold(&scored, &gold);
            cw.tau = tau;
            write_file(&out, &cw.to_text())?;
            let f = grid.iter().find(|g| g.0 == tau).map_or(0.0, |g| g.1);
            println!("tau {tau:.2}\tdev F0.5 {f:.4}");
        }
        Command::TuneWeights {
            model,
            nbest,
            gold,
            init,
            seed,
            out,
        } => {
            let (s, dict, cw) = model.load()?;
            let gold = load_gold(&gold)?;
            let lists = parse_nbest(&read(&nbest)?, &gold.sources())?;
            let scored = score_lists(&s, &dict, &cw, &lists)?;
            let init = match init {
                Some(p) => LogLinearWeights::from_text(&read(&p)?)?,
                None => LogLinearWeights::uniform(&lists[0].best().features, 1.0, 0.0),
            };
            let cfg = TuneConfig { seed, ..Default::default() };
            let (w, f) = tune_weights(&scored, &gold.sentences, &init, &cfg)?;
            write_file(&out, &w.to_text())?;
            println!("dev F0.5 {f:.4}");
        }
        Command::Rerank {
            model,
            lists,
            weights,
            n,
            out,
        } => {
            let (s, dict, cw) = model.load()?;
            let w = LogLinearWeights::from_text(&read(&weights)?)?;
            let scored = score_lists(&s, &dict, &cw, &lists.load()?)?;
            let result = correct_all(&scored, &DecisionConfig::new(Mode::Rerank, n, cw.tau)?, &w)?;
            write_sentences(&out, &result)?;
        }
        Command::Select { model, lists, tau, n, out } => {
            let (s, dict, cw) = model.load()?;
            let scored = score_lists(&s, &dict, &cw, &lists.load()?)?;
            let cfg = DecisionConfig::new(Mode::Select, n, tau.unwrap_or(cw.tau))?;
            let w = LogLinearWeights::uniform(&scored[0].nbest.best().features, 1.0, 0.0);
            write_sentences(&out, &correct_all(&scored, &cfg, &w)?)?;
        }
        Command::Evaluate { hyp, gold, tsv } => {
            let gold = load_gold(&gold)?;
            let hyps = parse_sources(&read(&hyp)?);
            let result = evaluate(&gold.sentences, &edits_from_hypotheses(&gold, &hyps)?)?;
            if tsv {
                println!("{}", result.tsv());
            } else {
                print!("{}", result.report());
            }
        }
        Command::Significance { a, b, gold, samples, seed } => {
            let gold = load_gold(&gold)?;
            let score = |p: &Path| -> Result<_> {
                let hyps = parse_sources(&read(p)?);
                Ok(evaluate(&gold.sentences, &edits_from_hypotheses(&gold, &hyps)?)?)
            };
            let (ra, rb) = (score(&a)?, score(&b)?);
            let sig = sign_test(&ra.per_sentence, &rb.per_sentence, samples, seed)?;
            println!("F0.5 A {:.4}\tF0.5 B {:.4}", ra.f05, rb.f05);
            print!("{}", sig.report());
        }
        Command::Ablate { config } => {
            let cfg = config.load()?;
            let inputs = Inputs::load(&cfg)?;
            let rows = run_ablation(&inputs, &cfg)?;
            let report = ablation_report(&rows);
            write_outputs(
                &cfg.output_dir,
                &[("ablation.txt".into(), report.clone()), ("ablation.tsv".into(), ablation_tsv(&rows))],
            )?;
            print!("{report}");
        }
        Command::Synth {
            out_dir,
            seed,
            train,
            dev,
            test,
            lm_extra,
            nbest,
        } => {
            let cfg = SynthConfig {
                seed,
                train,
                dev,
                test,
                lm_extra,
                nbest,
                ..Default::default()
            };
            let c = build_corpus(&cfg)?;
            let files = vec![
                ("train.m2".to_string(), serialize_annotated(&c.train)),
                ("dev.m2".to_string(), serialize_annotated(&c.dev)),
                ("test.m2".to_string(), serialize_annotated(&c.test)),
                ("train.nbest".to_string(), serialize_nbest(&c.train_nbest)),
                ("dev.nbest".to_string(), serialize_nbest(&c.dev_nbest)),
                ("test.nbest".to_string(), serialize_nbest(&c.test_nbest)),
                ("lm_corpus.txt".to_string(), serialize_sources(&c.lm_corpus)),
                ("decoder.weights".to_string(), c.decoder_weights.to_text()),
                ("demo.cfg".to_string(), DEMO_CONFIG.to_string()),
            ];
            write_outputs(&out_dir, &files)?;
        }
        Command::Pipeline { config } => {
            let cfg = config.load()?;
            let inputs = Inputs::load(&cfg)?;
            let out = run_pipeline(&inputs, &cfg)?;
            write_outputs(&cfg.output_dir, &out.files())?;
            print!("{}", out.report());
        }
    }
    Ok(())
}

const DEMO_CONFIG: &str = "\
# synthetic desk-scale experiment
train_gold=train.m2
dev_gold=dev.m2
test_gold=test.m2
train_nbest=train.nbest
dev_nbest=dev.nbest
test_nbest=test.nbest
lm_corpus=lm_corpus.txt
init_weights=decoder.weights
output_dir=out
lm_order=3
epochs=5
eta=0.9
cw_seed=0
feature_groups=smt,lexical_pos,context,lm
tune_seed=0
rerank_sizes=5,10
select_sizes=1,2,3,4,5
samples=100
significance_seed=1
";

fn write_outputs_pair(a: &Path, a_text: &str, b: &Path, b_text: &str) -> Result<()> {
    // both or neither
    write_file(a, a_text)?;
    if let Err(e) = write_file(b, b_text) {
        let _ = fs::remove_file(a);
        return Err(e.into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    let result = match jobs {
        Some(0) => Err(anyhow::anyhow!("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")
            .and_then(|pool| pool.install(|| run(cli))),
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
