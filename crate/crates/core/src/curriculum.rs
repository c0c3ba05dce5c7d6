//! Intensity-aware curriculum: per-sample difficulty from instantaneous
//! loss plus historical error rate, a migrating-Gaussian selection kernel
//! over difficulty, and a linearly expanding training subset.
//!
//! Difficulty of sample i at epoch k:
//! `d_i = loss_i + β·(1 − correct_i/k)`.
//! Selection weight: `exp(−(d_i − μ_k)² / 2σ_k²)`, normalized over the
//! dataset, with μ_k walking up the difficulty quantiles and σ_k
//! narrowing as training progresses. The trained subset grows linearly
//! from ⌊α₀·M⌋ to M.

use crate::error::{Error, Result};
use rand::Rng;

/// Curriculum schedule settings.
#[derive(Debug, Clone)]
pub struct CurriculumConfig {
    /// Weight of the historical error-rate term.
    pub beta: f64,
    /// Initial subset fraction α₀.
    pub alpha0: f64,
    /// μ schedule endpoints, as quantiles of the difficulty table.
    pub mu_quantile_start: f64,
    pub mu_quantile_end: f64,
    /// σ schedule endpoints, as fractions of the difficulty spread.
    pub sigma_frac_start: f64,
    pub sigma_frac_end: f64,
    pub total_epochs: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            beta: 1.0,
            alpha0: 0.3,
            mu_quantile_start: 0.2,
            mu_quantile_end: 0.8,
            sigma_frac_start: 0.5,
            sigma_frac_end: 0.15,
            total_epochs: 50,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::Config(format!("alpha0 must be in (0,1], got {}", self.alpha0)));
        }
        if !(0.0..=1.0).contains(&self.mu_quantile_start)
            || !(0.0..=1.0).contains(&self.mu_quantile_end)
            || self.mu_quantile_start > self.mu_quantile_end
        {
            return Err(Error::Config(format!(
                "mu quantiles must satisfy 0 ≤ start ≤ end ≤ 1, got {}..{}",
                self.mu_quantile_start, self.mu_quantile_end
            )));
        }
        if self.sigma_frac_start <= 0.0 || self.sigma_frac_end <= 0.0 {
            return Err(Error::Config("sigma fractions must be positive".into()));
        }
        if self.total_epochs == 0 {
            return Err(Error::Config("total_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Guard added to the difficulty spread so σ stays positive when every
/// sample has the same difficulty.
const SPREAD_EPS: f64 = 1e-8;

/// Per-sample bookkeeping across epochs: history table H, difficulty
/// table D, selection probabilities P, and the subset staged for the
/// next epoch.
#[derive(Debug, Clone)]
pub struct CurriculumState {
    samples: usize,
    epoch: usize,
    histories: Vec<Vec<bool>>,
    /// Training-time correctness of the current epoch; informational,
    /// superseded by the evaluation pass that writes the history.
    train_slot: Vec<Option<bool>>,
    difficulty: Vec<f64>,
    probability: Vec<f64>,
    pending: Option<Vec<usize>>,
}

impl CurriculumState {
    pub fn new(samples: usize) -> Self {
        CurriculumState {
            samples,
            epoch: 0,
            histories: vec![Vec::new(); samples],
            train_slot: vec![None; samples],
            difficulty: vec![0.0; samples],
            probability: vec![0.0; samples],
            pending: None,
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Completed epochs (k after the k-th call to [`run_epoch`]).
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self, i: usize) -> &[bool] {
        &self.histories[i]
    }

    pub fn difficulty(&self) -> &[f64] {
        &self.difficulty
    }

    pub fn probability(&self) -> &[f64] {
        &self.probability
    }

    /// Append one evaluation-epoch correctness record for sample `i`.
    pub fn update_history(&mut self, i: usize, correct: bool) -> Result<()> {
        if i >= self.samples {
            return Err(Error::Config(format!(
                "sample index {i} out of range (M = {})",
                self.samples
            )));
        }
        self.histories[i].push(correct);
        Ok(())
    }

    /// Record the training-time prediction outcome for the current epoch.
    pub fn record_train_result(&mut self, i: usize, correct: bool) -> Result<()> {
        if i >= self.samples {
            return Err(Error::Config(format!(
                "sample index {i} out of range (M = {})",
                self.samples
            )));
        }
        self.train_slot[i] = Some(correct);
        Ok(())
    }
}

/// Eq-style difficulty: instantaneous loss plus β times the historical
/// error rate over `history.len()` evaluation epochs. An empty history
/// contributes nothing (the evaluation pass guarantees one entry per
/// epoch, so this is only reachable before the first epoch).
pub fn compute_difficulty(loss: f64, history: &[bool], beta: f64) -> f64 {
    if history.is_empty() {
        return loss;
    }
    let correct = history.iter().filter(|&&c| c).count() as f64;
    loss + beta * (1.0 - correct / history.len() as f64)
}

/// Schedule values for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
}

/// Linear-interpolation quantile (sorted copy, positions q·(n−1)).
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// μ_k, σ_k, α_k for epoch `k` (1-based), all linearly interpolated
/// between the configured endpoints. μ lives in difficulty-quantile
/// space and σ is a fraction of the observed difficulty spread, so the
/// schedule is scale-free in the loss magnitude.
pub fn schedule_params(k: usize, cfg: &CurriculumConfig, difficulty: &[f64]) -> Result<Schedule> {
    if difficulty.is_empty() {
        return Err(Error::Config("difficulty table is empty".into()));
    }
    cfg.validate()?;
    let lo = difficulty.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = difficulty.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo + SPREAD_EPS;
    if cfg.total_epochs < 2 {
        return Ok(Schedule {
            mu: quantile(difficulty, 0.5),
            sigma: cfg.sigma_frac_start.max(cfg.sigma_frac_end) * spread,
            alpha: 1.0,
        });
    }
    let progress = ((k.max(1) - 1) as f64 / (cfg.total_epochs - 1) as f64).clamp(0.0, 1.0);
    let q = cfg.mu_quantile_start + (cfg.mu_quantile_end - cfg.mu_quantile_start) * progress;
    let sigma_frac =
        cfg.sigma_frac_start + (cfg.sigma_frac_end - cfg.sigma_frac_start) * progress;
    Ok(Schedule {
        mu: quantile(difficulty, q),
        sigma: sigma_frac * spread,
        alpha: cfg.alpha0 + (1.0 - cfg.alpha0) * progress,
    })
}

/// Gaussian selection kernel over difficulty, normalized to the simplex
/// with max-exponent stabilization.
pub fn selection_probabilities(difficulty: &[f64], mu: f64, sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    let exponents: Vec<f64> = difficulty
        .iter()
        .map(|&d| -((d - mu) * (d - mu)) / (2.0 * sigma * sigma))
        .collect();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w / total).collect())
}

/// ⌊α·M⌋ clamped to at least one sample.
pub fn subset_size(alpha: f64, m: usize) -> usize {
    ((alpha * m as f64).floor() as usize).clamp(1, m)
}

/// Weighted sampling without replacement: sequential draw-and-rescale.
/// If fewer than `size` samples carry positive probability, the
/// remainder is filled uniformly at random and the `starved` flag is set.
pub fn sample_subset<R: Rng>(
    probability: &[f64],
    size: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, bool)> {
    let m = probability.len();
    if size > m {
        return Err(Error::Config(format!("cannot select {size} of {m} samples")));
    }
    if probability.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::Config("selection probabilities must be finite and ≥ 0".into()));
    }
    let mut weights = probability.to_vec();
    let mut picked: Vec<usize> = Vec::with_capacity(size);
    let mut taken = vec![false; m];
    while picked.len() < size {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut r = rng.gen::<f64>() * total;
        let mut chosen = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            r -= w;
            if r <= 0.0 {
                chosen = Some(i);
                break;
            }
        }
        // float round-off can leave r marginally positive after the loop
        let i = chosen.unwrap_or_else(|| {
            weights
                .iter()
                .enumerate()
                .rev()
                .find(|(_, &w)| w > 0.0)
                .map(|(i, _)| i)
                .expect("positive total implies a positive weight")
        });
        picked.push(i);
        taken[i] = true;
        weights[i] = 0.0;
    }
    let mut starved = false;
    if picked.len() < size {
        starved = true;
        let mut rest: Vec<usize> = (0..m).filter(|&i| !taken[i]).collect();
        while picked.len() < size {
            let j = rng.gen_range(0..rest.len());
            picked.push(rest.swap_remove(j));
        }
    }
    Ok((picked, starved))
}

/// Ascending difficulty order, ties broken by the original index.
pub fn sort_by_difficulty(mut indices: Vec<usize>, difficulty: &[f64]) -> Vec<usize> {
    indices.sort_by(|&a, &b| {
        difficulty[a]
            .partial_cmp(&difficulty[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    indices
}

/// Training-side hooks the curriculum drives each epoch.
pub trait EpochDriver {
    /// Train on the given samples in the given order; returns the
    /// training-time (loss, correct) per sample, aligned with `indices`.
    fn train(&mut self, indices: &[usize]) -> Result<Vec<(f32, bool)>>;

    /// Forward-only pass over the whole dataset; (loss, correct) per
    /// sample, aligned with dataset order.
    fn evaluate_all(&mut self) -> Result<Vec<(f32, bool)>>;
}

/// What one curriculum epoch did.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub epoch: usize,
    pub schedule: Schedule,
    /// Samples trained this epoch, ascending difficulty.
    pub trained: Vec<usize>,
    pub train_loss: f64,
    pub train_accuracy: f64,
    /// Difficulty statistics of the trained subset (at selection time).
    pub subset_mean_difficulty: f64,
    pub subset_median_difficulty: f64,
    /// Selection ran out of positive-probability samples.
    pub starved: bool,
}

/// One epoch of the curriculum loop: train on the staged subset in
/// ascending-difficulty order, evaluate the full dataset with learning
/// disabled, refresh H/D/P, and stage the next subset.
pub fn run_epoch<D: EpochDriver, R: Rng>(
    driver: &mut D,
    state: &mut CurriculumState,
    cfg: &CurriculumConfig,
    rng: &mut R,
) -> Result<EpochReport> {
    cfg.validate()?;
    let m = state.samples;
    if m == 0 {
        return Err(Error::Config("empty dataset".into()));
    }
    let k = state.epoch + 1;

    // Stage the first-epoch subset on demand. P is all-zero before the
    // first evaluation pass, so this draw falls back to uniform.
    let mut first_epoch_starved = false;
    let trained: Vec<usize> = match state.pending.take() {
        Some(list) => list,
        None => {
            let sched = schedule_params(k, cfg, &state.difficulty)?;
            let size = subset_size(sched.alpha, m);
            let (subset, starved) = sample_subset(&state.probability, size, rng)?;
            first_epoch_starved = starved;
            sort_by_difficulty(subset, &state.difficulty)
        }
    };

    let subset_mean_difficulty =
        trained.iter().map(|&i| state.difficulty[i]).sum::<f64>() / trained.len() as f64;
    let subset_median_difficulty = {
        let mut d: Vec<f64> = trained.iter().map(|&i| state.difficulty[i]).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d[d.len() / 2]
    };

    // (1) train on the subset, recording train-time outcomes.
    state.train_slot = vec![None; m];
    let train_results = driver.train(&trained)?;
    if train_results.len() != trained.len() {
        return Err(Error::Config("driver returned a result per-sample mismatch".into()));
    }
    let mut train_loss = 0.0f64;
    let mut train_correct = 0usize;
    for (&i, &(loss, correct)) in trained.iter().zip(&train_results) {
        state.record_train_result(i, correct)?;
        train_loss += loss as f64;
        if correct {
            train_correct += 1;
        }
    }
    train_loss /= trained.len() as f64;

    // (2) full-dataset evaluation writes the authoritative history entry
    // and refreshes D.
    let eval = driver.evaluate_all()?;
    if eval.len() != m {
        return Err(Error::Config(format!(
            "evaluation returned {} results for {m} samples",
            eval.len()
        )));
    }
    for (i, &(loss, correct)) in eval.iter().enumerate() {
        state.update_history(i, correct)?;
        state.difficulty[i] = compute_difficulty(loss as f64, &state.histories[i], cfg.beta);
    }
    state.epoch = k;

    // (3) refresh P with this epoch's schedule.
    let sched = schedule_params(k, cfg, &state.difficulty)?;
    state.probability = selection_probabilities(&state.difficulty, sched.mu, sched.sigma)?;

    // (4) stage the next subset, sized for the coming epoch.
    let next_alpha = schedule_params(k + 1, cfg, &state.difficulty)?.alpha;
    let size = subset_size(next_alpha, m);
    let (subset, starved) = sample_subset(&state.probability, size, rng)?;
    state.pending = Some(sort_by_difficulty(subset, &state.difficulty));

    Ok(EpochReport {
        epoch: k,
        schedule: sched,
        trained,
        train_loss,
        train_accuracy: train_correct as f64 / train_results.len() as f64,
        subset_mean_difficulty,
        subset_median_difficulty,
        starved: starved || first_epoch_starved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn history_appends_in_order() {
        let mut state = CurriculumState::new(2);
        state.update_history(0, true).unwrap();
        assert_eq!(state.history(0), &[true]);
        state.update_history(0, false).unwrap();
        assert_eq!(state.history(0), &[true, false]);
        assert!(state.update_history(5, true).is_err());
    }

    #[test]
    fn difficulty_worked_examples() {
        assert_eq!(compute_difficulty(0.7, &[true], 0.0), 0.7);
        assert_eq!(compute_difficulty(0.5, &[true, false], 1.0), 1.0);
        assert_eq!(compute_difficulty(0.3, &[true, true, true], 2.0), 0.3);
    }

    #[test]
    fn difficulty_monotone_in_error_count() {
        let mut last = -1.0;
        for errors in 0..=4usize {
            let history: Vec<bool> = (0..4).map(|i| i >= errors).collect();
            let d = compute_difficulty(0.5, &history, 1.0);
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn schedule_endpoints() {
        let cfg = CurriculumConfig { total_epochs: 10, ..CurriculumConfig::default() };
        let d: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let first = schedule_params(1, &cfg, &d).unwrap();
        assert!((first.alpha - 0.3).abs() < 1e-12);
        assert!((first.mu - quantile(&d, 0.2)).abs() < 1e-12);
        let last = schedule_params(10, &cfg, &d).unwrap();
        assert_eq!(last.alpha, 1.0);
        assert!((last.mu - quantile(&d, 0.8)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_difficulty_table_gives_uniform_selection() {
        let cfg = CurriculumConfig { total_epochs: 5, ..CurriculumConfig::default() };
        let d = vec![0.7; 8];
        let sched = schedule_params(3, &cfg, &d).unwrap();
        assert!(sched.sigma > 0.0);
        let p = selection_probabilities(&d, sched.mu, sched.sigma).unwrap();
        for &pi in &p {
            assert!((pi - 1.0 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_epoch_schedule_collapses_to_full_dataset() {
        let cfg = CurriculumConfig { total_epochs: 1, ..CurriculumConfig::default() };
        let d = vec![0.1, 0.9, 0.5];
        let sched = schedule_params(1, &cfg, &d).unwrap();
        assert_eq!(sched.alpha, 1.0);
        assert!((sched.mu - 0.5).abs() < 1e-12);
    }

    #[test]
    fn selection_probability_oracle_values() {
        // direct double-precision evaluation of the Gaussian kernel for
        // d = [0,1,2], μ = 0, σ = 0.5: weights 1, e⁻², e⁻⁸
        let p = selection_probabilities(&[0.0, 1.0, 2.0], 0.0, 0.5).unwrap();
        let w = [1.0f64, (-2.0f64).exp(), (-8.0f64).exp()];
        let total: f64 = w.iter().sum();
        for (got, want) in p.iter().zip(w.iter().map(|x| x / total)) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
        assert!((p[0] - 0.8805369018).abs() < 1e-9);
        assert!((p[1] - 0.1191677110).abs() < 1e-9);
        assert!((p[2] - 0.0002953872).abs() < 1e-9);
    }

    #[test]
    fn selection_peaks_at_mu() {
        let d = vec![0.3, 1.7, 0.9, 2.4];
        let p = selection_probabilities(&d, 0.9, 0.4).unwrap();
        let argmax = p.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert_eq!(argmax, 2);
        assert!(matches!(selection_probabilities(&d, 0.9, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn subset_size_floor_and_clamp() {
        assert_eq!(subset_size(1.0, 100), 100);
        assert_eq!(subset_size(0.5, 11), 5);
        assert_eq!(subset_size(0.001, 100), 1);
    }

    #[test]
    fn sampling_without_replacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = vec![0.25; 4];
        let (all, starved) = sample_subset(&p, 4, &mut rng).unwrap();
        assert!(!starved);
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);

        let one_hot = vec![0.0, 0.0, 1.0, 0.0];
        let (only, starved) = sample_subset(&one_hot, 1, &mut rng).unwrap();
        assert!(!starved);
        assert_eq!(only, vec![2]);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p: Vec<f64> = (1..=6).map(|i| i as f64 / 21.0).collect();
        let a = sample_subset(&p, 3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_subset(&p, 3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn starved_selection_falls_back_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = vec![0.0, 1.0, 0.0, 0.0];
        let (picked, starved) = sample_subset(&p, 3, &mut rng).unwrap();
        assert!(starved);
        assert_eq!(picked.len(), 3);
        assert!(picked.contains(&1));
        let mut dedup = picked.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 3);
    }

    #[test]
    fn first_draw_frequencies_match_probabilities() {
        let p = [0.05f64, 0.1, 0.15, 0.3, 0.4];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000usize;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            let (picked, _) = sample_subset(&p, 1, &mut rng).unwrap();
            counts[picked[0]] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            let sigma = (p[i] * (1.0 - p[i]) / draws as f64).sqrt();
            assert!(
                (freq - p[i]).abs() < 3.0 * sigma,
                "index {i}: freq {freq:.4} vs p {:.4} (3σ = {:.4})",
                p[i],
                3.0 * sigma
            );
        }
    }

    #[test]
    fn sort_is_ascending_and_stable() {
        let d = vec![0.3, 0.1, 0.2];
        assert_eq!(sort_by_difficulty(vec![0, 1, 2], &d), vec![1, 2, 0]);
        let ties = vec![0.5, 0.5, 0.5];
        assert_eq!(sort_by_difficulty(vec![2, 0, 1], &ties), vec![0, 1, 2]);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let got = sort_by_difficulty((0..50).collect(), &d);
        let mut want: Vec<usize> = (0..50).collect();
        want.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)));
        assert_eq!(got, want);
    }

    /// Frozen driver: fixed per-sample losses, never learns.
    struct FrozenDriver {
        losses: Vec<f32>,
        correct: Vec<bool>,
    }

    impl EpochDriver for FrozenDriver {
        fn train(&mut self, indices: &[usize]) -> Result<Vec<(f32, bool)>> {
            Ok(indices.iter().map(|&i| (self.losses[i], self.correct[i])).collect())
        }

        fn evaluate_all(&mut self) -> Result<Vec<(f32, bool)>> {
            Ok(self.losses.iter().zip(&self.correct).map(|(&l, &c)| (l, c)).collect())
        }
    }

    fn frozen_driver(m: usize, seed: u64) -> FrozenDriver {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FrozenDriver {
            losses: (0..m).map(|_| rng.gen_range(0.05..2.0f32)).collect(),
            correct: (0..m).map(|_| rng.gen_bool(0.5)).collect(),
        }
    }

    #[test]
    fn epoch_loop_invariants_under_a_frozen_model() {
        let m = 24;
        let mut driver = frozen_driver(m, 5);
        let cfg = CurriculumConfig { total_epochs: 8, ..CurriculumConfig::default() };
        let mut state = CurriculumState::new(m);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut sizes = Vec::new();
        let mut d_after_first: Option<Vec<f64>> = None;
        for k in 1..=cfg.total_epochs {
            let report = run_epoch(&mut driver, &mut state, &cfg, &mut rng).unwrap();
            assert_eq!(report.epoch, k);
            sizes.push(report.trained.len());
            // history has exactly k entries per sample
            for i in 0..m {
                assert_eq!(state.history(i).len(), k);
            }
            // trained subset is sorted ascending and duplicate-free
            for pair in report.trained.windows(2) {
                assert!(state.difficulty[pair[0]] <= state.difficulty[pair[1]] || k == 1);
            }
            let mut dedup = report.trained.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), report.trained.len());
            // P stays on the simplex
            let sum: f64 = state.probability().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            // frozen model ⇒ D is fixed after the first evaluation
            match &d_after_first {
                None => d_after_first = Some(state.difficulty().to_vec()),
                Some(d0) => {
                    for (a, b) in d0.iter().zip(state.difficulty()) {
                        assert!((a - b).abs() < 1e-12, "D must not drift under a frozen model");
                    }
                }
            }
        }
        // sizes never shrink and end at the full dataset
        for pair in sizes.windows(2) {
            assert!(pair[0] <= pair[1]);
        }
        assert_eq!(*sizes.last().unwrap(), m);
        assert_eq!(sizes[0], subset_size(0.3, m));
    }

    proptest! {
        #[test]
        fn probabilities_stay_on_the_simplex(
            seed in any::<u64>(),
            m in 1usize..40,
            mu in -2.0f64..4.0,
            sigma in 0.01f64..3.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..3.0)).collect();
            let p = selection_probabilities(&d, mu, sigma).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn sampled_subsets_are_distinct_permutations(seed in any::<u64>(), m in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let p = selection_probabilities(&d, 0.5, 0.5).unwrap();
            let (picked, _) = sample_subset(&p, m, &mut rng).unwrap();
            let mut sorted = picked.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..m).collect::<Vec<_>>());
        }
    }
}
