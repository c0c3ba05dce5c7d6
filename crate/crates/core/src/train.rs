//! Loss, optimizers, the 5-fold cross-trial protocol, metrics, and the
//! full training loop (curriculum-driven or plain shuffled epochs).

use crate::curriculum::{self, CurriculumConfig, CurriculumState, EpochDriver};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelGraph, ModelParams};
use crate::signal::FeatureSegment;
use crate::tensor::{Tape, TensorId};
use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Probability floor applied before the log in the cross-entropy.
pub const PROB_FLOOR: f32 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Training-loop settings.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub total_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub curriculum_enabled: bool,
    pub folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            total_epochs: 50,
            batch_size: 16,
            seed: 42,
            optimizer: OptimizerKind::Adam,
            curriculum_enabled: true,
            folds: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.total_epochs == 0 || self.folds == 0 {
            return Err(Error::Config("batch size, epochs and folds must be at least 1".into()));
        }
        Ok(())
    }
}

/// −ln(probs[label]) with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy(tape: &mut Tape, probs: TensorId, label: usize) -> Result<TensorId> {
    let (rows, cols) = tape.dims(probs);
    if label >= rows * cols {
        return Err(Error::Config(format!(
            "label {label} out of range for {} classes",
            rows * cols
        )));
    }
    tape.neg_log_entry(probs, label, PROB_FLOOR)
}

/// SGD or Adam over the canonical parameter order.
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f32,
    step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

const ADAM_BETA1: f32 = 0.9;
const ADAM_BETA2: f32 = 0.999;
const ADAM_EPS: f32 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f32) -> Self {
        Optimizer { kind, lr, step: 0, m: Vec::new(), v: Vec::new() }
    }

    /// Start a new optimizer step (advances Adam's bias-correction clock).
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Update one parameter slot. Slots must arrive in a fixed order so
    /// that Adam's moments stay attached to the same tensors.
    pub fn update_slice(&mut self, slot: usize, weights: &mut [f32], grads: &[f32]) -> Result<()> {
        if weights.len() != grads.len() {
            return Err(Error::Shape(format!(
                "gradient of {} entries for a parameter of {}",
                grads.len(),
                weights.len()
            )));
        }
        if !grads.iter().all(|g| g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in parameter slot {slot}; aborting the update"
            )));
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (w, g) in weights.iter_mut().zip(grads) {
                    *w -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                while self.m.len() <= slot {
                    self.m.push(Vec::new());
                    self.v.push(Vec::new());
                }
                if self.m[slot].is_empty() {
                    self.m[slot] = vec![0.0; weights.len()];
                    self.v[slot] = vec![0.0; weights.len()];
                }
                let t = self.step.max(1) as i32;
                let bc1 = 1.0 - ADAM_BETA1.powi(t);
                let bc2 = 1.0 - ADAM_BETA2.powi(t);
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                for i in 0..weights.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grads[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    weights[i] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        Ok(())
    }

    /// One optimizer step over a whole model.
    pub fn step_model(&mut self, params: &mut ModelParams, grads: &[Vec<f32>]) -> Result<()> {
        self.begin_step();
        let mut slot = 0usize;
        let mut result = Ok(());
        params.visit_mut(&mut |t| {
            if result.is_err() {
                return;
            }
            if slot >= grads.len() {
                result = Err(Error::Shape("fewer gradients than parameters".into()));
                return;
            }
            result = self.update_slice(slot, t.data_mut(), &grads[slot]);
            slot += 1;
        });
        result?;
        if slot != grads.len() {
            return Err(Error::Shape("more gradients than parameters".into()));
        }
        Ok(())
    }
}

/// One fold of the cross-trial protocol.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold_id: usize,
    pub train_trials: Vec<u32>,
    pub test_trials: Vec<u32>,
}

/// Shuffle trial ids by seed and partition them into near-equal folds.
/// Segments of one trial can therefore never straddle the train/test
/// boundary.
pub fn cross_trial_split(trials: &[u32], folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if folds == 0 {
        return Err(Error::Config("fold count must be at least 1".into()));
    }
    if trials.len() < folds {
        return Err(Error::Config(format!(
            "{} trials cannot fill {folds} folds",
            trials.len()
        )));
    }
    let mut shuffled = trials.to_vec();
    shuffled.sort_unstable();
    shuffled.dedup();
    if shuffled.len() != trials.len() {
        return Err(Error::Config("trial ids must be unique".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let base = shuffled.len() / folds;
    let extra = shuffled.len() % folds;
    let mut splits = Vec::with_capacity(folds);
    let mut start = 0usize;
    for fold_id in 0..folds {
        let size = base + usize::from(fold_id < extra);
        let test: Vec<u32> = shuffled[start..start + size].to_vec();
        let train: Vec<u32> =
            shuffled.iter().copied().filter(|t| !test.contains(t)).collect();
        debug_assert!(test.iter().all(|t| !train.contains(t)));
        splits.push(FoldSplit { fold_id, train_trials: train, test_trials: test });
        start += size;
    }
    Ok(splits)
}

/// Confusion matrix plus derived metrics.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    /// counts[true][predicted]
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

/// Metrics from a confusion matrix, with the 0/0 → 0 convention for
/// precision, recall, and F1.
pub fn metrics_from_confusion(confusion: Vec<Vec<usize>>) -> MetricsReport {
    let k = confusion.len();
    let total: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = if total > 0 { trace as f64 / total as f64 } else { 0.0 };
    let mut per_class_f1 = Vec::with_capacity(k);
    for c in 0..k {
        let tp = confusion[c][c];
        let fp: usize = (0..k).filter(|&r| r != c).map(|r| confusion[r][c]).sum();
        let fn_: usize = (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class_f1.push(f1);
    }
    let macro_f1 = per_class_f1.iter().sum::<f64>() / k as f64;
    MetricsReport { confusion, accuracy, macro_f1, per_class_f1 }
}

fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Argmax evaluation of a parameter set over labelled segments.
pub fn evaluate(
    params: &ModelParams,
    cfg: &ModelConfig,
    segments: &[FeatureSegment],
) -> Result<MetricsReport> {
    if segments.is_empty() {
        return Err(Error::Config("cannot evaluate an empty segment list".into()));
    }
    let predictions: Result<Vec<usize>> = segments
        .par_iter()
        .map(|seg| {
            let probs = crate::model::predict(seg, params, cfg)?;
            Ok(argmax(&probs))
        })
        .collect();
    let predictions = predictions?;
    let mut confusion = vec![vec![0usize; cfg.classes]; cfg.classes];
    for (seg, &pred) in segments.iter().zip(&predictions) {
        if seg.label >= cfg.classes {
            return Err(Error::Config(format!(
                "label {} out of range for {} classes",
                seg.label, cfg.classes
            )));
        }
        confusion[seg.label][pred] += 1;
    }
    Ok(metrics_from_confusion(confusion))
}

/// Forward one segment and return (loss, correct-at-argmax).
fn sample_loss(
    params: &ModelParams,
    cfg: &ModelConfig,
    seg: &FeatureSegment,
) -> Result<(f32, bool)> {
    let mut graph = ModelGraph::new(params, cfg)?;
    let probs = graph.forward(seg)?;
    let loss = cross_entropy(&mut graph.tape, probs, seg.label)?;
    let predicted = argmax(graph.tape.value(probs));
    Ok((graph.tape.value(loss)[0], predicted == seg.label))
}

/// Train on one batch (gradient averaged over the batch) and return the
/// pre-update (loss, correct) per sample.
fn train_batch(
    params: &mut ModelParams,
    optimizer: &mut Optimizer,
    cfg: &ModelConfig,
    batch: &[&FeatureSegment],
) -> Result<Vec<(f32, bool)>> {
    let mut results = Vec::with_capacity(batch.len());
    let mut grad_sum: Vec<Vec<f32>> = Vec::new();
    for seg in batch {
        let mut graph = ModelGraph::new(params, cfg)?;
        let probs = graph.forward(seg)?;
        let loss = cross_entropy(&mut graph.tape, probs, seg.label)?;
        let predicted = argmax(graph.tape.value(probs));
        results.push((graph.tape.value(loss)[0], predicted == seg.label));
        let grads = graph.tape.backward(loss)?;
        let ids = graph.param_ids();
        if grad_sum.is_empty() {
            grad_sum = ids
                .iter()
                .map(|&id| {
                    let (r, c) = graph.tape.dims(id);
                    grads.of(id, r * c)
                })
                .collect();
        } else {
            for (slot, &id) in ids.iter().enumerate() {
                if let Some(g) = grads.get(id) {
                    for (acc, gi) in grad_sum[slot].iter_mut().zip(g) {
                        *acc += gi;
                    }
                }
            }
        }
    }
    let scale = 1.0 / batch.len() as f32;
    for g in &mut grad_sum {
        for gi in g.iter_mut() {
            *gi *= scale;
        }
    }
    optimizer.step_model(params, &grad_sum)?;
    Ok(results)
}

/// Curriculum hooks over the training split.
struct HarnessDriver<'a> {
    params: &'a mut ModelParams,
    optimizer: &'a mut Optimizer,
    cfg: &'a ModelConfig,
    batch_size: usize,
    data: &'a [FeatureSegment],
}

impl EpochDriver for HarnessDriver<'_> {
    fn train(&mut self, indices: &[usize]) -> Result<Vec<(f32, bool)>> {
        let mut out = Vec::with_capacity(indices.len());
        for chunk in indices.chunks(self.batch_size) {
            let batch: Vec<&FeatureSegment> = chunk.iter().map(|&i| &self.data[i]).collect();
            out.extend(train_batch(self.params, self.optimizer, self.cfg, &batch)?);
        }
        Ok(out)
    }

    fn evaluate_all(&mut self) -> Result<Vec<(f32, bool)>> {
        let params = &*self.params;
        self.data
            .par_iter()
            .map(|seg| sample_loss(params, self.cfg, seg))
            .collect()
    }
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_macro_f1: f64,
}

/// One row of the per-epoch curriculum log.
#[derive(Debug, Clone)]
pub struct CurriculumLogRow {
    pub epoch: usize,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub subset_size: usize,
    pub mean_difficulty: f64,
    pub median_difficulty: f64,
    /// Histogram of the full difficulty table in [`HIST_BINS`] fixed bins
    /// spanning `[0, 2·ln(K) + β]`; overflow clamps into the last bin.
    pub histogram: Vec<usize>,
}

pub const HIST_BINS: usize = 20;

/// Upper edge of the fixed difficulty histogram.
pub fn histogram_ceiling(classes: usize, beta: f64) -> f64 {
    2.0 * (classes as f64).ln() + beta.max(0.0)
}

fn difficulty_histogram(difficulty: &[f64], ceiling: f64) -> Vec<usize> {
    let mut bins = vec![0usize; HIST_BINS];
    for &d in difficulty {
        let frac = (d / ceiling).clamp(0.0, 1.0);
        let bin = ((frac * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
        bins[bin] += 1;
    }
    bins
}

/// Everything produced while training one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub split: FoldSplit,
    pub report: MetricsReport,
    pub epochs: Vec<EpochLog>,
    pub curriculum: Vec<CurriculumLogRow>,
    pub params: ModelParams,
    /// Selection starvation was hit in at least one epoch.
    pub starved: bool,
    /// Final per-sample difficulty table over the fold's training split
    /// (curriculum runs only), aligned with `train_indices`.
    pub final_difficulty: Vec<f64>,
    /// Dataset indices of the fold's training split.
    pub train_indices: Vec<usize>,
}

/// Aggregate result across folds: per-fold outcomes plus mean ± std
/// (population) of the headline metrics.
#[derive(Debug, Clone)]
pub struct TrainRunResult {
    pub folds: Vec<FoldOutcome>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

fn splitmix64(mut state: u64) -> u64 {
    state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fold_seed(base: u64, fold_id: usize) -> u64 {
    splitmix64(base ^ splitmix64(fold_id as u64 + 1))
}

fn train_one_fold(
    dataset: &[FeatureSegment],
    split: FoldSplit,
    mc: &ModelConfig,
    tc: &TrainConfig,
    cc: &CurriculumConfig,
) -> Result<FoldOutcome> {
    let train_indices: Vec<usize> = dataset
        .iter()
        .enumerate()
        .filter(|(_, s)| split.train_trials.contains(&s.trial_id))
        .map(|(i, _)| i)
        .collect();
    let test_segments: Vec<FeatureSegment> = dataset
        .iter()
        .filter(|s| split.test_trials.contains(&s.trial_id))
        .cloned()
        .collect();
    if train_indices.is_empty() || test_segments.is_empty() {
        return Err(Error::Config(format!(
            "fold {} has an empty train or test side",
            split.fold_id
        )));
    }
    let train_segments: Vec<FeatureSegment> =
        train_indices.iter().map(|&i| dataset[i].clone()).collect();

    let seed = fold_seed(tc.seed, split.fold_id);
    let mut params = ModelParams::init(mc, seed)?;
    let mut optimizer = Optimizer::new(tc.optimizer, tc.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));

    let mut epochs = Vec::with_capacity(tc.total_epochs);
    let mut curriculum_rows = Vec::new();
    let mut starved = false;
    let mut state = CurriculumState::new(train_segments.len());
    let ceiling = histogram_ceiling(mc.classes, cc.beta);

    for epoch in 1..=tc.total_epochs {
        let (train_loss, train_accuracy) = if tc.curriculum_enabled {
            let mut driver = HarnessDriver {
                params: &mut params,
                optimizer: &mut optimizer,
                cfg: mc,
                batch_size: tc.batch_size,
                data: &train_segments,
            };
            let report = curriculum::run_epoch(&mut driver, &mut state, cc, &mut rng)?;
            starved |= report.starved;
            curriculum_rows.push(CurriculumLogRow {
                epoch,
                mu: report.schedule.mu,
                sigma: report.schedule.sigma,
                alpha: report.schedule.alpha,
                subset_size: report.trained.len(),
                mean_difficulty: report.subset_mean_difficulty,
                median_difficulty: report.subset_median_difficulty,
                histogram: difficulty_histogram(state.difficulty(), ceiling),
            });
            (report.train_loss, report.train_accuracy)
        } else {
            let mut order: Vec<usize> = (0..train_segments.len()).collect();
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0f64;
            let mut correct = 0usize;
            for chunk in order.chunks(tc.batch_size) {
                let batch: Vec<&FeatureSegment> =
                    chunk.iter().map(|&i| &train_segments[i]).collect();
                for (loss, ok) in train_batch(&mut params, &mut optimizer, mc, &batch)? {
                    loss_sum += loss as f64;
                    correct += usize::from(ok);
                }
            }
            (loss_sum / order.len() as f64, correct as f64 / order.len() as f64)
        };

        let test_report = evaluate(&params, mc, &test_segments)?;
        epochs.push(EpochLog {
            epoch,
            train_loss,
            train_accuracy,
            test_accuracy: test_report.accuracy,
            test_macro_f1: test_report.macro_f1,
        });
    }

    let report = evaluate(&params, mc, &test_segments)?;
    Ok(FoldOutcome {
        split,
        report,
        epochs,
        curriculum: curriculum_rows,
        params,
        starved,
        final_difficulty: state.difficulty().to_vec(),
        train_indices,
    })
}

/// Train and evaluate across cross-trial folds. Folds run in parallel;
/// each fold gets a fresh seeded model, so results are deterministic for
/// a given configuration and seed.
pub fn train_run(
    dataset: &[FeatureSegment],
    mc: &ModelConfig,
    tc: &TrainConfig,
    cc: &CurriculumConfig,
) -> Result<TrainRunResult> {
    tc.validate()?;
    cc.validate()?;
    mc.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let mut trials: Vec<u32> = dataset.iter().map(|s| s.trial_id).collect();
    trials.sort_unstable();
    trials.dedup();
    let splits = cross_trial_split(&trials, tc.folds, tc.seed)?;
    for split in &splits {
        let leak = split.train_trials.iter().any(|t| split.test_trials.contains(t));
        if leak {
            return Err(Error::Config(format!("fold {} leaks trials", split.fold_id)));
        }
    }

    let mut folds: Vec<FoldOutcome> = splits
        .into_par_iter()
        .map(|split| train_one_fold(dataset, split, mc, tc, cc))
        .collect::<Result<Vec<_>>>()?;
    folds.sort_by_key(|f| f.split.fold_id);

    let accs: Vec<f64> = folds.iter().map(|f| f.report.accuracy).collect();
    let f1s: Vec<f64> = folds.iter().map(|f| f.report.macro_f1).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    let (mean_macro_f1, std_macro_f1) = mean_std(&f1s);
    Ok(TrainRunResult { folds, mean_accuracy, std_accuracy, mean_macro_f1, std_macro_f1 })
}
