//! End-to-end experiment driver: configuration, the train/tune/test stages,
//! report rendering and all-or-nothing output writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::annotate::AnnotationProvider;
use crate::corpus::{parse_annotated, parse_nbest, parse_sources, Dataset, NBestList, Sentence};
use crate::cw::{accuracy, cw_train, tune_threshold, CWModel, CWTrainConfig, SparseVector};
use crate::decision::{
    correct_all, select_scored, tune_weights, ClassifierScorer, DecisionConfig, LogLinearWeights, Mode, ScoredList,
    TuneConfig,
};
use crate::edit::{extract_edits, Edit};
use crate::error::{Error, Result};
use crate::eval::{evaluate, sentence_counts, sign_test, sum_counts, EvalResult, SignificanceResult};
use crate::features::{
    build_dictionary, label_edits, vectorize, FeatureDictionary, FeatureExtractor, FeatureGroup, FeatureGroups,
    Label, LabeledExample,
};
use crate::lm::{train_lm, NGramModel};
use crate::synth::SynthCorpus;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train_gold: Option<PathBuf>,
    pub dev_gold: Option<PathBuf>,
    pub test_gold: Option<PathBuf>,
    pub train_nbest: Option<PathBuf>,
    pub dev_nbest: Option<PathBuf>,
    pub test_nbest: Option<PathBuf>,
    pub lm_corpus: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub init_weights: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub lm_order: usize,
    pub cw: CWTrainConfig,
    pub feature_groups: FeatureGroups,
    pub min_count: usize,
    pub tune_seed: u64,
    pub tune_restarts: usize,
    pub tune_sweeps: usize,
    pub rerank_sizes: Vec<usize>,
    pub select_sizes: Vec<usize>,
    pub samples: usize,
    pub significance_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train_gold: None,
            dev_gold: None,
            test_gold: None,
            train_nbest: None,
            dev_nbest: None,
            test_nbest: None,
            lm_corpus: None,
            annotations: None,
            init_weights: None,
            output_dir: PathBuf::from("out"),
            lm_order: 3,
            cw: CWTrainConfig::default(),
            feature_groups: FeatureGroups::all(),
            min_count: 1,
            tune_seed: 0,
            tune_restarts: 3,
            tune_sweeps: 10,
            rerank_sizes: vec![5, 10],
            select_sizes: vec![1, 2, 3, 4, 5],
            samples: 100,
            significance_seed: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_sizes(key: &str, value: &str) -> Result<Vec<usize>> {
    let sizes: Vec<usize> = value
        .split(',')
        .map(|s| parse_num(key, s.trim()))
        .collect::<Result<_>>()?;
    if sizes.contains(&0) {
        return Err(Error::Config(format!("{key} entries must be at least 1")));
    }
    Ok(sizes)
}

impl PipelineConfig {
    /// Flat `key=value` lines; `#` starts a comment. Relative paths are
    /// resolved against `base`.
    pub fn from_text(text: &str, base: &Path) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            cfg.set(key.trim(), value.trim(), base)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::from_text(&text, base)
    }

    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(value));
        match key {
            "train_gold" => self.train_gold = path(),
            "dev_gold" => self.dev_gold = path(),
            "test_gold" => self.test_gold = path(),
            "train_nbest" => self.train_nbest = path(),
            "dev_nbest" => self.dev_nbest = path(),
            "test_nbest" => self.test_nbest = path(),
            "lm_corpus" => self.lm_corpus = path(),
            "annotations" => self.annotations = path(),
            "init_weights" => self.init_weights = path(),
            "output_dir" => self.output_dir = base.join(value),
            "lm_order" => self.lm_order = parse_num(key, value)?,
            "epochs" => self.cw.epochs = parse_num(key, value)?,
            "eta" => self.cw.eta = parse_num(key, value)?,
            "initial_variance" => self.cw.initial_variance = parse_num(key, value)?,
            "cw_seed" => self.cw.shuffle_seed = parse_num(key, value)?,
            "feature_groups" => self.feature_groups = value.parse()?,
            "min_count" => self.min_count = parse_num(key, value)?,
            "tune_seed" => self.tune_seed = parse_num(key, value)?,
            "tune_restarts" => self.tune_restarts = parse_num(key, value)?,
            "tune_sweeps" => self.tune_sweeps = parse_num(key, value)?,
            "rerank_sizes" => self.rerank_sizes = parse_sizes(key, value)?,
            "select_sizes" => self.select_sizes = parse_sizes(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "significance_seed" => self.significance_seed = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("missing required key {key}")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// A gold dataset with its n-best lists.
#[derive(Debug, Clone)]
pub struct Split {
    pub gold: Dataset,
    pub nbest: Vec<NBestList>,
}

impl Split {
    pub fn new(gold: Dataset, nbest: Vec<NBestList>) -> Result<Split> {
        if gold.len() != nbest.len() {
            return Err(Error::LengthMismatch(gold.len(), nbest.len()));
        }
        Ok(Split { gold, nbest })
    }

    pub fn load(gold: &Path, nbest: &Path) -> Result<Split> {
        let gold = parse_annotated(&read(gold)?)?;
        let nbest = parse_nbest(&read(nbest)?, &gold.sources())?;
        Split::new(gold, nbest)
    }
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub train: Split,
    pub dev: Split,
    pub test: Split,
    pub lm_corpus: Vec<Sentence>,
    pub provider: AnnotationProvider,
    pub init_weights: Option<LogLinearWeights>,
}

impl Inputs {
    pub fn load(cfg: &PipelineConfig) -> Result<Inputs> {
        let train = Split::load(required(&cfg.train_gold, "train_gold")?, required(&cfg.train_nbest, "train_nbest")?)?;
        let dev = Split::load(required(&cfg.dev_gold, "dev_gold")?, required(&cfg.dev_nbest, "dev_nbest")?)?;
        let test = Split::load(required(&cfg.test_gold, "test_gold")?, required(&cfg.test_nbest, "test_nbest")?)?;
        let lm_corpus = match &cfg.lm_corpus {
            Some(p) => parse_sources(&read(p)?),
            None => train.gold.sources(),
        };
        let provider = match &cfg.annotations {
            Some(p) => AnnotationProvider::from_file_text(&read(p)?, true)?,
            None => AnnotationProvider::Builtin,
        };
        let init_weights = match &cfg.init_weights {
            Some(p) => Some(LogLinearWeights::from_text(&read(p)?)?),
            None => None,
        };
        Ok(Inputs {
            train,
            dev,
            test,
            lm_corpus,
            provider,
            init_weights,
        })
    }

    pub fn from_synth(c: SynthCorpus) -> Result<Inputs> {
        Ok(Inputs {
            train: Split::new(c.train, c.train_nbest)?,
            dev: Split::new(c.dev, c.dev_nbest)?,
            test: Split::new(c.test, c.test_nbest)?,
            lm_corpus: c.lm_corpus,
            provider: AnnotationProvider::Builtin,
            init_weights: Some(c.decoder_weights),
        })
    }
}

/// Labeled examples for every distinct edit of every list, in list order.
pub fn featurize(split: &Split, extractor: &FeatureExtractor) -> Result<Vec<LabeledExample>> {
    let per_list: Vec<Vec<LabeledExample>> = split
        .nbest
        .par_iter()
        .zip(&split.gold.sentences)
        .enumerate()
        .map(|(i, (list, gold))| {
            let labeled = label_edits(list, gold);
            if labeled.is_empty() {
                return Ok(Vec::new());
            }
            let info = extractor.source_info(&list.source)?;
            labeled
                .into_iter()
                .map(|(edit, label)| {
                    Ok(LabeledExample {
                        vector: extractor.extract(&edit, &list.source, &info)?,
                        label,
                        sentence_id: i,
                        edit,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_list.into_iter().flatten().collect())
}

pub fn vectorize_all(examples: &[LabeledExample], dict: &FeatureDictionary) -> Vec<(SparseVector, Label)> {
    examples
        .iter()
        .map(|e| (vectorize(&e.vector, dict), e.label))
        .collect()
}

/// Builds the dictionary on `examples` and trains a classifier on them.
pub fn train_classifier(
    examples: &[LabeledExample],
    min_count: usize,
    cfg: &CWTrainConfig,
) -> Result<(FeatureDictionary, CWModel)> {
    let vectors: Vec<_> = examples.iter().map(|e| &e.vector).collect();
    let dict = build_dictionary(&vectors, min_count)?;
    let data = vectorize_all(examples, &dict);
    let model = cw_train(&data, dict.dim(), cfg)?;
    Ok((dict, model))
}

/// Dev F0.5 of edit selection over full lists at each grid threshold.
pub fn tune_selection_threshold(lists: &[ScoredList], gold: &Dataset) -> (f64, Vec<(f64, f64)>) {
    tune_threshold(|tau| {
        let counts: Vec<_> = lists
            .iter()
            .zip(&gold.sentences)
            .map(|(l, g)| sentence_counts(g, &select_scored(l, tau, usize::MAX)).0)
            .collect();
        sum_counts(&counts).f05()
    })
}

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct SystemRow {
    pub mode: Mode,
    pub n: usize,
    pub result: EvalResult,
    pub significance: Option<SignificanceResult>,
    pub output: Vec<Sentence>,
}

impl SystemRow {
    pub fn label(&self) -> String {
        match self.mode {
            Mode::Baseline => "baseline 1-best".into(),
            Mode::Rerank => format!("rerank {}-best", self.n),
            Mode::Select => format!("select {}-best", self.n),
        }
    }

    fn name(&self) -> String {
        match self.mode {
            Mode::Baseline => "baseline".into(),
            Mode::Rerank => format!("rerank{}", self.n),
            Mode::Select => format!("select{}", self.n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub lm: NGramModel,
    pub dictionary: FeatureDictionary,
    pub model: CWModel,
    pub weights: LogLinearWeights,
    pub dev_weights_f05: f64,
    pub dev_threshold_f05: f64,
    pub rows: Vec<SystemRow>,
}

impl PipelineOutput {
    pub fn row(&self, mode: Mode, n: usize) -> Option<&SystemRow> {
        self.rows.iter().find(|r| r.mode == mode && r.n == n)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tau {:.2}", self.model.tau);
        let _ = writeln!(out, "dev F0.5 (select, tuned tau) {:.4}", self.dev_threshold_f05);
        let _ = writeln!(out, "dev F0.5 (rerank, tuned weights) {:.4}", self.dev_weights_f05);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<18}{:>8}{:>8}{:>8}", "System", "P", "R", "F0.5");
        for r in &self.rows {
            let mark = r.significance.as_ref().map_or("", |s| s.marker());
            let _ = writeln!(
                out,
                "{:<18}{:>8.4}{:>8.4}{:>8.4}{}",
                r.label(),
                r.result.precision,
                r.result.recall,
                r.result.f05,
                mark
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "* significantly better than the baseline (p < 0.01)");
        out
    }

    pub fn tsv(&self) -> String {
        let mut out = String::from("system\tn\tP\tR\tF0.5\tmatched\tproposed\tgold\tp_value\n");
        for r in &self.rows {
            let p = r
                .significance
                .as_ref()
                .map_or_else(|| "NA".to_string(), |s| format!("{:.6}", s.p_value));
            let _ = writeln!(out, "{}\t{}\t{}\t{p}", r.mode, r.n, r.result.tsv());
        }
        out
    }

    /// Every artifact as (file name, contents).
    pub fn files(&self) -> Vec<(String, String)> {
        let mut files = vec![
            ("lm.model".to_string(), self.lm.to_text()),
            ("features.dict".to_string(), self.dictionary.to_text()),
            ("classifier.model".to_string(), self.model.to_text()),
            ("weights.txt".to_string(), self.weights.to_text()),
            ("report.txt".to_string(), self.report()),
            ("report.tsv".to_string(), self.tsv()),
        ];
        for r in &self.rows {
            let text: String = r.output.iter().map(|s| s.text() + "\n").collect();
            files.push((format!("test.{}.txt", r.name()), text));
        }
        files
    }
}

fn system_edits(out: Vec<(Sentence, Vec<Edit>)>) -> (Vec<Sentence>, Vec<Vec<Edit>>) {
    out.into_iter().unzip()
}

/// train LM, featurize, train classifier, tune τ and weights on dev, then
/// evaluate every configured system on test.
pub fn run_pipeline(inputs: &Inputs, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let lm = train_lm(&inputs.lm_corpus, cfg.lm_order)?;
    let extractor = FeatureExtractor::new(&lm, &inputs.provider, &cfg.feature_groups);
    let examples = featurize(&inputs.train, &extractor)?;
    let (dictionary, mut model) = train_classifier(&examples, cfg.min_count, &cfg.cw)?;

    let score = |split: &Split, model: &CWModel| -> Result<Vec<ScoredList>> {
        let scorer = ClassifierScorer {
            extractor,
            dictionary: &dictionary,
            model,
        };
        split.nbest.par_iter().map(|l| ScoredList::new(l, &scorer)).collect()
    };
    let dev_lists = score(&inputs.dev, &model)?;
    let (tau, grid) = tune_selection_threshold(&dev_lists, &inputs.dev.gold);
    model.tau = tau;
    let dev_threshold_f05 = grid.iter().find(|g| g.0 == tau).map_or(0.0, |g| g.1);

    let schema = &inputs
        .dev
        .nbest
        .first()
        .ok_or(Error::EmptyInput("dev n-best lists"))?
        .best()
        .features;
    let init = match &inputs.init_weights {
        Some(w) => w.clone(),
        None => LogLinearWeights::uniform(schema, 1.0, 0.0),
    };
    let tune_cfg = TuneConfig {
        n: usize::MAX,
        max_sweeps: cfg.tune_sweeps,
        restarts: cfg.tune_restarts,
        seed: cfg.tune_seed,
    };
    let (weights, dev_weights_f05) = tune_weights(&dev_lists, &inputs.dev.gold.sentences, &init, &tune_cfg)?;

    let test_lists = score(&inputs.test, &model)?;
    let gold = &inputs.test.gold.sentences;
    let mut systems = vec![(Mode::Baseline, 1)];
    systems.extend(cfg.rerank_sizes.iter().map(|&n| (Mode::Rerank, n)));
    systems.extend(cfg.select_sizes.iter().map(|&n| (Mode::Select, n)));
    let mut rows: Vec<SystemRow> = Vec::new();
    for (mode, n) in systems {
        let dc = DecisionConfig::new(mode, n, tau)?;
        let (output, edits) = system_edits(correct_all(&test_lists, &dc, &weights)?);
        let result = evaluate(gold, &edits)?;
        let significance = match rows.first() {
            Some(base) => Some(sign_test(
                &result.per_sentence,
                &base.result.per_sentence,
                cfg.samples,
                cfg.significance_seed,
            )?),
            None => None,
        };
        rows.push(SystemRow {
            mode,
            n,
            result,
            significance,
            output,
        });
    }
    Ok(PipelineOutput {
        lm,
        dictionary,
        model,
        weights,
        dev_weights_f05,
        dev_threshold_f05,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub label: String,
    pub groups: FeatureGroups,
    pub accuracy: f64,
}

/// Classifier accuracy (τ = 0) on the test edits with all feature groups and
/// with each group removed.
pub fn run_ablation(inputs: &Inputs, cfg: &PipelineConfig) -> Result<Vec<AblationRow>> {
    let lm = train_lm(&inputs.lm_corpus, cfg.lm_order)?;
    let all = FeatureGroups::all();
    let mut variants = vec![("All".to_string(), all.clone())];
    for g in FeatureGroup::ALL {
        variants.push((format!("w/o {}", g.name()), all.without(g)?));
    }
    variants
        .into_iter()
        .map(|(label, groups)| {
            let extractor = FeatureExtractor::new(&lm, &inputs.provider, &groups);
            let train = featurize(&inputs.train, &extractor)?;
            let test = featurize(&inputs.test, &extractor)?;
            let (dict, model) = train_classifier(&train, cfg.min_count, &cfg.cw)?;
            let accuracy = accuracy(&model, &vectorize_all(&test, &dict))?;
            Ok(AblationRow { label, groups, accuracy })
        })
        .collect()
}

pub fn ablation_report(rows: &[AblationRow]) -> String {
    let mut out = format!("{:<20}{:>10}\n", "Features", "Accuracy");
    for r in rows {
        let _ = writeln!(out, "{:<20}{:>10.2}", r.label, r.accuracy * 100.0);
    }
    out
}

pub fn ablation_tsv(rows: &[AblationRow]) -> String {
    let mut out = String::from("features\tgroups\taccuracy\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{:.6}", r.label, r.groups, r.accuracy);
    }
    out
}

/// Writes all files into `dir` or none of them: everything is staged in a
/// temporary directory next to `dir` and only moved once fully written.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let staging = tempfile::Builder::new().prefix(".staging").tempdir_in(&parent)?;
    for (name, content) in files {
        fs::write(staging.path().join(name), content)?;
    }
    fs::create_dir_all(dir)?;
    for (name, _) in files {
        fs::rename(staging.path().join(name), dir.join(name))?;
    }
    Ok(())
}

/// Writes one file atomically.
pub fn write_file(path: &Path, content: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent)?;
    std::io::Write::write_all(&mut tmp, content.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// System edits implied by whole corrected sentences.
pub fn edits_from_hypotheses(gold: &Dataset, hypotheses: &[Sentence]) -> Result<Vec<Vec<Edit>>> {
    if gold.len() != hypotheses.len() {
        return Err(Error::LengthMismatch(gold.len(), hypotheses.len()));
    }
    Ok(gold
        .sentences
        .iter()
        .zip(hypotheses)
        .map(|(g, h)| extract_edits(&g.source, h))
        .collect())
}
