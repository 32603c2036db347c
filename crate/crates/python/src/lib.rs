use std::collections::BTreeMap;
use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gec_core::corpus::{parse_annotated, serialize_annotated, serialize_nbest, serialize_sources, Sentence};
use gec_core::cw;
use gec_core::decision::select_from_pool;
use gec_core::edit;
use gec_core::eval;
use gec_core::pipeline::{self, edits_from_hypotheses, Inputs, PipelineConfig};
use gec_core::synth::{build_corpus, SynthConfig};

fn err(e: gec_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn words(tokens: &[gec_core::corpus::Token]) -> Vec<String> {
    tokens.iter().map(|t| t.as_str().to_string()).collect()
}

/// A phrase edit: replace source tokens [start, end) with `replacement`.
#[pyclass(name = "Edit", from_py_object)]
#[derive(Clone)]
struct PyEdit {
    inner: edit::Edit,
}

#[pymethods]
impl PyEdit {
    #[new]
    #[pyo3(signature = (source, start, end, replacement, score=None, hyp_rank=1))]
    fn new(source: &str, start: usize, end: usize, replacement: &str, score: Option<f64>, hyp_rank: u32) -> PyResult<Self> {
        let src = Sentence::from(source);
        let mut inner = edit::Edit::new(&src, start, end, gec_core::corpus::tokenize(replacement)).map_err(err)?;
        inner.score = score;
        inner.hyp_rank = hyp_rank;
        Ok(PyEdit { inner })
    }

    #[getter]
    fn start(&self) -> usize {
        self.inner.start
    }

    #[getter]
    fn end(&self) -> usize {
        self.inner.end
    }

    #[getter]
    fn source(&self) -> Vec<String> {
        words(&self.inner.source_tokens)
    }

    #[getter]
    fn replacement(&self) -> Vec<String> {
        words(&self.inner.replacement)
    }

    #[getter]
    fn hyp_rank(&self) -> u32 {
        self.inner.hyp_rank
    }

    #[getter]
    fn score(&self) -> Option<f64> {
        self.inner.score
    }

    #[setter]
    fn set_score(&mut self, score: Option<f64>) {
        self.inner.score = score;
    }

    fn __repr__(&self) -> String {
        format!(
            "Edit({}, {}, {:?} -> {:?})",
            self.inner.start,
            self.inner.end,
            self.inner.source_tokens.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" "),
            self.inner.replacement.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" ")
        )
    }

    fn __eq__(&self, other: &PyEdit) -> bool {
        self.inner.key() == other.inner.key()
    }
}

fn unwrap_edits(edits: &[PyEdit]) -> Vec<edit::Edit> {
    edits.iter().map(|e| e.inner.clone()).collect()
}

/// Edits turning `source` into `hypothesis` (whitespace-tokenized).
#[pyfunction]
fn extract_edits(source: &str, hypothesis: &str) -> Vec<PyEdit> {
    edit::extract_edits(&Sentence::from(source), &Sentence::from(hypothesis))
        .into_iter()
        .map(|inner| PyEdit { inner })
        .collect()
}

#[pyfunction]
fn apply_edits(source: &str, edits: Vec<PyEdit>) -> PyResult<String> {
    Ok(edit::apply_edits(&Sentence::from(source), &unwrap_edits(&edits))
        .map_err(err)?
        .text())
}

/// Greedy non-overlapping selection of scored edits with score >= tau.
#[pyfunction]
fn select(edits: Vec<PyEdit>, tau: f64) -> PyResult<Vec<PyEdit>> {
    if edits.iter().any(|e| e.inner.score.is_none()) {
        return Err(PyValueError::new_err("every edit needs a score"));
    }
    Ok(select_from_pool(&unwrap_edits(&edits), tau)
        .into_iter()
        .map(|inner| PyEdit { inner })
        .collect())
}

#[pyfunction]
#[pyo3(signature = (p, r, beta=0.5))]
fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    eval::f_beta(p, r, beta)
}

/// Scores corrected sentences against M2 gold text. Returns a dict with
/// precision, recall, f05 and the counts.
#[pyfunction]
fn evaluate(gold_m2: &str, hypotheses: Vec<String>) -> PyResult<BTreeMap<String, f64>> {
    let gold = parse_annotated(gold_m2).map_err(err)?;
    let hyps: Vec<Sentence> = hypotheses.iter().map(|h| Sentence::from(h.as_str())).collect();
    let edits = edits_from_hypotheses(&gold, &hyps).map_err(err)?;
    let r = eval::evaluate(&gold.sentences, &edits).map_err(err)?;
    Ok(BTreeMap::from([
        ("precision".to_string(), r.precision),
        ("recall".to_string(), r.recall),
        ("f05".to_string(), r.f05),
        ("matched".to_string(), r.matched as f64),
        ("proposed".to_string(), r.proposed as f64),
        ("gold".to_string(), r.gold_count as f64),
    ]))
}

/// Confidence-weighted linear classifier over sparse features given as
/// lists of (index, value) pairs.
#[pyclass(name = "CWModel", from_py_object)]
#[derive(Clone)]
struct PyCWModel {
    inner: cw::CWModel,
}

#[pymethods]
impl PyCWModel {
    #[new]
    #[pyo3(signature = (dim, eta=0.9, initial_variance=1.0))]
    fn new(dim: usize, eta: f64, initial_variance: f64) -> PyResult<Self> {
        if !(eta > 0.5 && eta < 1.0) || initial_variance <= 0.0 {
            return Err(PyValueError::new_err("need 0.5 < eta < 1 and initial_variance > 0"));
        }
        Ok(PyCWModel {
            inner: cw::CWModel::new(dim, eta, initial_variance),
        })
    }

    /// One update with label +1 / -1; returns the step size.
    fn update(&mut self, x: Vec<(usize, f64)>, y: i32) -> PyResult<f64> {
        if y != 1 && y != -1 {
            return Err(PyValueError::new_err("label must be 1 or -1"));
        }
        Ok(self.inner.update(&cw::SparseVector::from_pairs(x), y as f64))
    }

    fn score(&self, x: Vec<(usize, f64)>) -> f64 {
        self.inner.score(&cw::SparseVector::from_pairs(x))
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.inner.mu.clone()
    }

    #[getter]
    fn sigma(&self) -> Vec<f64> {
        self.inner.sigma.clone()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[setter]
    fn set_tau(&mut self, tau: f64) {
        self.inner.tau = tau;
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyCWModel {
            inner: cw::CWModel::from_text(text).map_err(err)?,
        })
    }
}

fn synth_config(seed: u64, train: usize, dev: usize, test: usize, lm_extra: usize, nbest: usize) -> SynthConfig {
    SynthConfig {
        seed,
        train,
        dev,
        test,
        lm_extra,
        nbest,
        ..SynthConfig::default()
    }
}

/// Synthetic corpus as a dict of file name to file contents.
#[pyfunction]
#[pyo3(signature = (seed=42, train=2000, dev=300, test=300, lm_extra=5000, nbest=5))]
fn synth(seed: u64, train: usize, dev: usize, test: usize, lm_extra: usize, nbest: usize) -> PyResult<BTreeMap<String, String>> {
    let c = build_corpus(&synth_config(seed, train, dev, test, lm_extra, nbest)).map_err(err)?;
    Ok(BTreeMap::from([
        ("train.m2".to_string(), serialize_annotated(&c.train)),
        ("dev.m2".to_string(), serialize_annotated(&c.dev)),
        ("test.m2".to_string(), serialize_annotated(&c.test)),
        ("train.nbest".to_string(), serialize_nbest(&c.train_nbest)),
        ("dev.nbest".to_string(), serialize_nbest(&c.dev_nbest)),
        ("test.nbest".to_string(), serialize_nbest(&c.test_nbest)),
        ("lm_corpus.txt".to_string(), serialize_sources(&c.lm_corpus)),
        ("decoder.weights".to_string(), c.decoder_weights.to_text()),
    ]))
}

/// Runs the full experiment from a config file, or on a fresh synthetic
/// corpus when `config` is None. Returns every output file as a dict; writes
/// them to the configured output directory only when `write` is true.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (config=None, overrides=None, write=false, seed=42, train=2000, dev=300, test=300))]
fn run_pipeline(
    py: Python<'_>,
    config: Option<String>,
    overrides: Option<BTreeMap<String, String>>,
    write: bool,
    seed: u64,
    train: usize,
    dev: usize,
    test: usize,
) -> PyResult<BTreeMap<String, String>> {
    py.detach(|| {
        let (mut cfg, base) = match &config {
            Some(path) => {
                let p = Path::new(path);
                let base = p.parent().unwrap_or(Path::new(".")).to_path_buf();
                (PipelineConfig::from_file(p)?, base)
            }
            None => (PipelineConfig::default(), std::env::current_dir().unwrap_or_default()),
        };
        for (k, v) in overrides.iter().flatten() {
            cfg.set(k, v, &base)?;
        }
        let inputs = match config {
            Some(_) => Inputs::load(&cfg)?,
            None => Inputs::from_synth(build_corpus(&synth_config(seed, train, dev, test, 5000, 5))?)?,
        };
        let out = pipeline::run_pipeline(&inputs, &cfg)?;
        let files = out.files();
        if write {
            pipeline::write_outputs(&cfg.output_dir, &files)?;
        }
        Ok(files.into_iter().collect())
    })
    .map_err(err)
}

#[pymodule]
fn nbest_gec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEdit>()?;
    m.add_class::<PyCWModel>()?;
    m.add_function(wrap_pyfunction!(extract_edits, m)?)?;
    m.add_function(wrap_pyfunction!(apply_edits, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(f_beta, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
