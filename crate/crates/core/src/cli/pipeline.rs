//! Experiment stages: data, training, hardening, evaluation.
//!
//! Layout under the output directory:
//!
//! ```text
//! config.json                 resolved config and its hash
//! data/{train,eval}.{csv,json}
//! <pipeline>/cell.json        soft cell checkpoint
//! <pipeline>/history.json     per-epoch training record
//! <pipeline>/circuit.json     hardened circuit
//! <pipeline>/distill_report.json
//! baselines/rnn.json
//! eval_report.json, summary.txt, traces.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{stage_seed, ExperimentConfig};
use crate::circuit::{gate_census, HardCircuit, InputMask};
use crate::data::{balance_select, load_split, save_split, split, Dataset, LabelSet, Selection};
use crate::error::{Error, Result};
use crate::eval::elman::{eval_elman, train_elman, ElmanBaseline};
use crate::eval::{accuracy, evaluate_monitor, first_output, EvalReport, Monitor};
use crate::harden::{distill, refine_to_intersection, Calibration, DistillReport};
use crate::matrix::Matrix;
use crate::rdtlgn::{load_checkpoint, save_checkpoint, soft_verdict, train, EpochRecord, SoftCell};
use crate::stl::{causal_verdicts, quantize_signal, Pipeline};
use crate::ternary::Trit;

pub const REPORT_VERSION: u32 = 1;

/// A failure tagged with the stage it happened in.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Serialize)]
struct Envelope<'a, B: Serialize> {
    format: &'a str,
    version: u32,
    config_hash: &'a str,
    #[serde(flatten)]
    body: B,
}

/// Writes `body` as a versioned JSON document carrying the config hash.
pub fn write_report<B: Serialize>(path: &Path, format: &str, hash: &str, body: B) -> Result<()> {
    let env = Envelope { format, version: REPORT_VERSION, config_hash: hash, body };
    write_bytes(path, &serde_json::to_vec_pretty(&env)?)
}

/// Adds a `config_hash` field to an existing JSON object.
pub fn stamp(bytes: &[u8], hash: &str) -> Result<Vec<u8>> {
    let mut v: Value = serde_json::from_slice(bytes)?;
    if let Value::Object(m) = &mut v {
        m.insert("config_hash".into(), Value::String(hash.into()));
    }
    Ok(serde_json::to_vec_pretty(&v)?)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub hash: String,
}

/// Training and evaluation splits with both label pipelines.
pub struct Splits {
    pub train: Dataset,
    pub eval: Dataset,
    pub train_labels: LabelSet,
    pub eval_labels: LabelSet,
}

/// Everything `run` produces for one pipeline.
pub struct PipelineOutcome {
    pub pipeline: Pipeline,
    pub cell: SoftCell<f64>,
    pub history: Vec<EpochRecord>,
    pub circuit: HardCircuit,
    pub distill: DistillReport,
}

pub struct RunOutcome {
    pub selection: Selection,
    pub pipelines: Vec<PipelineOutcome>,
    pub reports: Vec<EvalReport>,
    pub summary: String,
}

impl RunOutcome {
    pub fn report(&self, system: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.system == system)
    }
}

fn system_name(p: Pipeline, hard: bool) -> String {
    format!("{}-{}", p.name(), if hard { "hard" } else { "soft" })
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash();
        Ok(Self { cfg, hash })
    }

    pub fn out(&self) -> &Path {
        &self.cfg.output_dir
    }

    fn path(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.out().to_path_buf(), |p, s| p.join(s))
    }

    pub fn write_config(&self) -> Result<()> {
        write_report(&self.path(&["config.json"]), "rdtlgn-config", &self.hash, &self.cfg)
    }

    fn label_set(&self, data: &Dataset) -> Result<LabelSet> {
        let spec = self.cfg.spec.clone();
        Ok(LabelSet {
            ctq: data.labels(&spec, Pipeline::Ctq, self.cfg.delta)?,
            qtc: data.labels(&spec, Pipeline::Qtc, self.cfg.delta)?,
            spec,
        })
    }

    /// Generates the pool, keeps a CtQ-balanced subset, splits and saves.
    pub fn gen_data(&self) -> Result<(Splits, Selection)> {
        let c = &self.cfg;
        let pool = Dataset::generate(&c.world, c.data.pool, c.data.length, c.stage_seed(stage_seed::DATA))?;
        let pool_labels = pool.labels(&c.spec, Pipeline::Ctq, c.delta)?;
        let selection = balance_select(&pool_labels, c.data.count)?;
        log::info!("selected {} trajectories, class frequencies {:?}", selection.indices.len(), selection.frequencies);
        let (tr, ev) = split(selection.indices.len(), c.data.train_fraction, c.stage_seed(stage_seed::SPLIT));
        let ids = |local: &[usize]| local.iter().map(|&i| selection.indices[i]).collect::<Vec<_>>();
        let (train_ids, eval_ids) = (ids(&tr), ids(&ev));
        let train = pool.subset(&train_ids);
        let eval = pool.subset(&eval_ids);
        let train_labels = self.label_set(&train)?;
        let eval_labels = self.label_set(&eval)?;
        let dir = self.path(&["data"]);
        save_split(&dir, "train", &train, &train_ids, vec![train_labels.clone()], c.delta, &self.hash)?;
        save_split(&dir, "eval", &eval, &eval_ids, vec![eval_labels.clone()], c.delta, &self.hash)?;
        Ok((Splits { train, eval, train_labels, eval_labels }, selection))
    }

    pub fn load_data(&self) -> Result<Splits> {
        let dir = self.path(&["data"]);
        let load = |stem: &str| -> Result<(Dataset, LabelSet)> {
            let (d, side) = load_split(&dir, stem)?;
            let labels = match side.labels.into_iter().find(|l| l.spec == self.cfg.spec) {
                Some(l) => l,
                None => self.label_set(&d)?,
            };
            Ok((d, labels))
        };
        let (train, train_labels) = load("train")?;
        let (eval, eval_labels) = load("eval")?;
        Ok(Splits { train, eval, train_labels, eval_labels })
    }

    /// Inputs the soft cell reads: continuous for CtQ, quantized for QtC.
    pub fn soft_inputs(&self, data: &Dataset, p: Pipeline) -> Vec<Matrix<f64>> {
        Calibration::from_signals(&data.spec_signals(&self.cfg.spec), p, self.cfg.delta).soft_inputs
    }

    pub fn trit_inputs(&self, data: &Dataset) -> Vec<Matrix<Trit>> {
        data.spec_signals(&self.cfg.spec).iter().map(|x| quantize_signal(x, self.cfg.delta)).collect()
    }

    fn pipeline_labels<'a>(&self, set: &'a LabelSet, p: Pipeline) -> &'a [Vec<Trit>] {
        match p {
            Pipeline::Ctq => &set.ctq,
            Pipeline::Qtc => &set.qtc,
        }
    }

    pub fn train_cell(&self, splits: &Splits, p: Pipeline) -> Result<(SoftCell<f64>, Vec<EpochRecord>)> {
        let cell = SoftCell::build(self.cfg.cell_config()?)?;
        let mut tc = self.cfg.train.clone();
        tc.seed = self.cfg.stage_seed(stage_seed::TRAIN);
        let inputs = self.soft_inputs(&splits.train, p);
        let (cell, history) = train(cell, &inputs, self.pipeline_labels(&splits.train_labels, p), &tc)?;
        let name = p.name();
        write_bytes(&self.path(&[name, "cell.json"]), &stamp(&save_checkpoint(&cell)?, &self.hash)?)?;
        write_report(&self.path(&[name, "history.json"]), "rdtlgn-train-history", &self.hash, serde_json::json!({ "epochs": &history }))?;
        Ok((cell, history))
    }

    pub fn load_cell(&self, p: Pipeline) -> Result<SoftCell<f64>> {
        load_checkpoint(&fs::read(self.path(&[p.name(), "cell.json"]))?)
    }

    pub fn harden(&self, splits: &Splits, cell: &SoftCell<f64>, p: Pipeline) -> Result<(HardCircuit, DistillReport)> {
        let signals = splits.train.spec_signals(&self.cfg.spec);
        let calib = Calibration::from_signals(&signals, p, self.cfg.delta);
        let (circuit, teacher, report) = distill(cell, &calib, &self.cfg.distill)?;
        let n = report.calibration_trajectories;
        let (circuit, report) =
            refine_to_intersection(circuit, &teacher, &calib.trit_inputs[..n], &self.cfg.distill, report)?;
        let name = p.name();
        write_bytes(&self.path(&[name, "circuit.json"]), &stamp(&circuit.to_json()?, &self.hash)?)?;
        write_report(&self.path(&[name, "distill_report.json"]), "rdtlgn-distill-report", &self.hash, &report)?;
        Ok((circuit, report))
    }

    pub fn load_circuit(&self, p: Pipeline) -> Result<HardCircuit> {
        HardCircuit::from_json(&fs::read(self.path(&[p.name(), "circuit.json"]))?)
    }

    fn report(&self, system: &str, pipeline: Option<Pipeline>, accuracy: f64) -> EvalReport {
        EvalReport {
            spec: self.cfg.spec.name.clone(),
            formula: self.cfg.spec.formula.clone(),
            system: system.into(),
            pipeline,
            accuracy,
            preservation: None,
            lattice_compliance: None,
            lattice_compliance_covering: None,
            abstention_curve: Default::default(),
            gate_census: None,
        }
    }

    fn eval_with<M: Monitor>(
        &self,
        m: &M,
        system: &str,
        pipeline: Option<Pipeline>,
        inputs: &[Matrix<M::Input>],
        labels: &[Vec<Trit>],
        lattice: bool,
    ) -> Result<EvalReport> {
        let (acc, pres, lat, curve) = evaluate_monitor(m, inputs, labels, lattice, self.cfg.stage_seed(stage_seed::EVAL))?;
        let mut r = self.report(system, pipeline, acc);
        r.preservation = Some(pres);
        r.lattice_compliance = lat.map(|l| l.0);
        r.lattice_compliance_covering = lat.map(|l| l.1);
        r.abstention_curve = curve;
        Ok(r)
    }

    /// Scores every system against CtQ labels on the evaluation split.
    pub fn evaluate(
        &self,
        splits: &Splits,
        trained: &[(Pipeline, &SoftCell<f64>, &HardCircuit)],
        rnn: Option<&ElmanBaseline<f64>>,
    ) -> Result<(Vec<EvalReport>, Vec<(String, Vec<Vec<Trit>>)>)> {
        let labels = &splits.eval_labels.ctq;
        let cont = splits.eval.spec_signals(&self.cfg.spec);
        let trits = self.trit_inputs(&splits.eval);
        let phi = self.cfg.spec.parse()?;
        let mut reports = Vec::new();
        let mut traces = Vec::new();

        let causal: Vec<Vec<Trit>> =
            cont.par_iter().map(|x| causal_verdicts(&phi, x, self.cfg.delta)).collect::<Result<_>>()?;
        reports.push(self.report("causal", None, accuracy(&causal, labels)?));
        traces.push(("causal".to_string(), causal));

        if let Some(rnn) = rnn {
            let v = eval_elman(rnn, &cont)?;
            let mut r = self.eval_with(rnn, "rnn", None, &cont, labels, false)?;
            r.accuracy = accuracy(&v, labels)?;
            reports.push(r);
            traces.push(("rnn".to_string(), v));
        }

        for &(p, cell, circuit) in trained {
            let soft_in = self.soft_inputs(&splits.eval, p);
            let soft: Vec<Vec<Trit>> = soft_in
                .par_iter()
                .map(|x| Ok(cell.run(x)?.row(0).iter().map(|&y| soft_verdict(y)).collect()))
                .collect::<Result<_>>()?;
            let name = system_name(p, false);
            reports.push(self.report(&name, Some(p), accuracy(&soft, labels)?));
            traces.push((name, soft));

            let name = system_name(p, true);
            let mut r = self.eval_with(circuit, &name, Some(p), &trits, labels, true)?;
            r.gate_census = Some(gate_census(circuit));
            reports.push(r);
            let hard: Vec<Matrix<Trit>> = trits
                .par_iter()
                .map(|x| crate::circuit::run(circuit, x, &InputMask::none()))
                .collect::<Result<_>>()?;
            traces.push((name, first_output(&hard)));
        }
        Ok((reports, traces))
    }

    pub fn write_eval(&self, reports: &[EvalReport], traces: &[(String, Vec<Vec<Trit>>)], labels: &[Vec<Trit>]) -> Result<String> {
        write_report(&self.path(&["eval_report.json"]), "rdtlgn-eval-report", &self.hash, EvalBody { reports })?;
        let summary = summary_table(&self.cfg, &self.hash, reports);
        write_bytes(&self.path(&["summary.txt"]), summary.as_bytes())?;
        let mut w = csv::Writer::from_path(self.path(&["traces.csv"]))?;
        w.write_record(["system", "traj", "t", "label", "verdict", "background"])?;
        for (system, v) in traces {
            for (n, (vs, ys)) in v.iter().zip(labels).enumerate() {
                for (t, (v, y)) in vs.iter().zip(ys).enumerate() {
                    w.write_record([system.clone(), n.to_string(), t.to_string(), y.to_string(), v.to_string(), class_name(*y).into()])?;
                }
            }
        }
        w.flush()?;
        Ok(summary)
    }

    /// Full pipeline. Stages run in order; each failure names its stage.
    pub fn run(&self) -> std::result::Result<RunOutcome, StageError> {
        fs::create_dir_all(self.out()).map_err(Error::from).stage("setup")?;
        self.write_config().stage("setup")?;
        let (splits, selection) = self.gen_data().stage("gen-data")?;
        let mut pipelines = Vec::new();
        for &p in &self.cfg.pipelines {
            let (cell, history) = self.train_cell(&splits, p).stage("train")?;
            let (circuit, distill) = self.harden(&splits, &cell, p).stage("harden")?;
            pipelines.push(PipelineOutcome { pipeline: p, cell, history, circuit, distill });
        }
        let rnn = match &self.cfg.rnn {
            Some(rc) => {
                let mut rc = rc.clone();
                rc.seed = self.cfg.stage_seed(stage_seed::RNN);
                let inputs = splits.train.spec_signals(&self.cfg.spec);
                let hidden = self.cfg.cell_config().stage("rnn")?.state.max(1);
                let m = train_elman(&inputs, &splits.train_labels.ctq, hidden, &rc).stage("rnn")?;
                write_report(&self.path(&["baselines", "rnn.json"]), "rdtlgn-elman", &self.hash, &m).stage("rnn")?;
                Some(m)
            }
            None => None,
        };
        let trained: Vec<_> = pipelines.iter().map(|o| (o.pipeline, &o.cell, &o.circuit)).collect();
        let (reports, traces) = self.evaluate(&splits, &trained, rnn.as_ref()).stage("eval")?;
        let summary = self.write_eval(&reports, &traces, &splits.eval_labels.ctq).stage("eval")?;
        Ok(RunOutcome { selection, pipelines, reports, summary })
    }
}

#[derive(Serialize, Deserialize)]
struct EvalBody<R> {
    reports: R,
}

fn class_name(t: Trit) -> &'static str {
    match t {
        Trit::Neg => "violated",
        Trit::Zero => "unknown",
        Trit::Pos => "satisfied",
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x))
}

/// Plain-text table, one row per system.
pub fn summary_table(cfg: &ExperimentConfig, hash: &str, reports: &[EvalReport]) -> String {
    let mut s = format!(
        "spec {} : {}\nconfig {}\n\n{:<10} {:>10} {:>13} {:>9} {:>9}\n",
        cfg.spec.name,
        cfg.spec.formula,
        &hash[..12],
        "system",
        "predict %",
        "preserve %",
        "lattice %",
        "NM∩IM %"
    );
    for r in reports {
        s += &format!(
            "{:<10} {:>10} {:>13} {:>9} {:>9}\n",
            r.system,
            pct(Some(r.accuracy)),
            pct(r.preservation),
            pct(r.lattice_compliance),
            pct(r.gate_census.as_ref().map(|c| c.fraction_nm_and_im)),
        );
    }
    s
}
