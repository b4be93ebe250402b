//! Two-stage stochastic training of the weighted ranking objective.
//!
//! Stage 1 runs SGD over observed (word, context) pairs, sampling one
//! contrast context per step; the triple update touches only u_w, v_c and
//! v_c', which is what makes the stratified parallel scheme sound. Stage 2
//! sets every auxiliary variable xi to its exact optimum, re-tightening the
//! linearized bound. Alternating the stages never increases the bound.
//!
//! Parallel runs partition words into fixed contiguous parts and resample a
//! context partition each outer iteration; within one stratum the p workers
//! own disjoint word rows and disjoint context rows, so no barrier is
//! needed until the stratum ends. One sweep of p strata visits every
//! observed pair exactly once, matching the sequential epoch's step budget,
//! and a single-worker sweep *is* the sequential epoch.

use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binio::derive_seed;
use crate::cooccur::CooccurrenceMatrix;
use crate::error::{Error, Result};
use crate::matmul::block_scores;
use crate::model::{dot, EmbeddingModel};
use crate::ranking::{LossSpec, RhoKind, RhoSpec, WeightConfig};

mod checkpoint;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

/// RNG stream tags; each derived stream is independent of the others.
const TAG_SGD: u64 = 0x5347_4431;
const TAG_PARTITION: u64 = 0x5041_5254;

/// One auxiliary variable per observed pair, aligned with the record order
/// of the co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxVariables {
    xi: Vec<f64>,
}

impl AuxVariables {
    /// Neutral initialization: every xi = 1, so the first stage evaluates
    /// rho' at 1 until the first exact update.
    pub fn ones(n: usize) -> AuxVariables {
        AuxVariables { xi: vec![1.0; n] }
    }

    pub fn from_values(xi: Vec<f64>) -> Result<AuxVariables> {
        if xi.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Validation(
                "auxiliary variables must be strictly positive and finite".into(),
            ));
        }
        Ok(AuxVariables { xi })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.xi
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.xi
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub rho: RhoSpec,
    pub loss: LossSpec,
    pub weights: WeightConfig,
    /// Use r = 1 everywhere instead of the saturating count weights.
    pub uniform_weights: bool,
    /// Constant step size.
    pub eta: f64,
    pub outer_iters: usize,
    /// Full passes over the observations between auxiliary updates.
    pub stage1_passes: usize,
    pub workers: usize,
    pub seed: u64,
    pub dim: usize,
    /// Word rows per score block in the exact auxiliary update; each worker
    /// holds a block_rows x |C| score buffer.
    pub score_block_rows: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rho: RhoSpec::default(),
            loss: LossSpec::default(),
            weights: WeightConfig::default(),
            uniform_weights: false,
            eta: 0.025,
            outer_iters: 20,
            stage1_passes: 1,
            workers: 1,
            seed: 1,
            dim: 100,
            score_block_rows: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, contexts: usize) -> Result<()> {
        self.rho.validate()?;
        self.weights.validate()?;
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.stage1_passes == 0 {
            return Err(Error::Config("stage1-passes must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.score_block_rows == 0 {
            return Err(Error::Config("score block must be at least 1 row".into()));
        }
        if contexts < 2 {
            return Err(Error::Config(
                "training needs at least 2 contexts; the rank of a single context is undefined"
                    .into(),
            ));
        }
        if self.workers > 1 && contexts < 2 * self.workers {
            return Err(Error::Config(format!(
                "{} workers need at least {} contexts so every context part can supply \
                 a contrast sample",
                self.workers,
                2 * self.workers
            )));
        }
        if self.rho.kind == RhoKind::LogT && self.rho.beta == 0.0 {
            return Err(Error::Config(
                "beta = 0 is not allowed with the log_t ranking loss: its gradient is \
                 unbounded at zero"
                    .into(),
            ));
        }
        Ok(())
    }

    fn pair_weight(&self, count: f64) -> f64 {
        if self.uniform_weights {
            1.0
        } else {
            self.weights.weight(count)
        }
    }
}

/// Mutable training state: the model, the auxiliary variables, and the
/// counters that seed each epoch's RNG streams.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub model: EmbeddingModel,
    pub aux: AuxVariables,
    pub outer_done: u64,
    pub epochs_done: u64,
    /// Mean stochastic estimate of the bound from the latest epoch.
    pub jbar_estimate: f64,
}

impl TrainState {
    pub fn new(model: EmbeddingModel, omega: &CooccurrenceMatrix) -> Result<TrainState> {
        if model.words() != omega.words() || model.contexts() != omega.contexts() {
            return Err(Error::Validation(format!(
                "model is {}x{} but co-occurrence matrix is {}x{}",
                model.words(),
                model.contexts(),
                omega.words(),
                omega.contexts()
            )));
        }
        let aux = AuxVariables::ones(omega.len());
        Ok(TrainState { model, aux, outer_done: 0, epochs_done: 0, jbar_estimate: f64::NAN })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    /// Global epoch counter (one epoch = one full pass over the pairs).
    pub epoch: u64,
    pub steps: u64,
    /// Mean surrogate loss over the epoch's sampled triples.
    pub mean_loss: f64,
    /// Mean stochastic estimate of the linearized bound. Under
    /// stratification the contrast samples are drawn within context parts,
    /// so this is unbiased only across partition resamples.
    pub jbar_estimate: f64,
    /// Steps whose rho argument hit the log_t saturation guard.
    pub rho_saturations: u64,
    pub wall: std::time::Duration,
}

/// Word partition (fixed contiguous ranges) and sampled context partition
/// for one outer iteration. Within stratum s, worker q owns word part q and
/// context part (q + s) mod p, so no row is shared by two workers.
#[derive(Debug, Clone)]
pub struct Stratification {
    word_parts: Vec<Range<usize>>,
    context_parts: Vec<Vec<u32>>,
    /// Context id -> (part index, index within the part's member list).
    part_of_context: Vec<(u32, u32)>,
}

impl Stratification {
    /// The p = 1 partition: all words, all contexts, one stratum.
    #[allow(clippy::single_range_in_vec_init)]
    pub fn degenerate(words: usize, contexts: usize) -> Stratification {
        Stratification {
            word_parts: vec![0..words],
            context_parts: vec![(0..contexts as u32).collect()],
            part_of_context: (0..contexts as u32).map(|c| (0, c)).collect(),
        }
    }

    /// Fixed balanced word parts plus a freshly sampled context partition.
    pub fn sample(words: usize, contexts: usize, p: usize, rng: &mut ChaCha8Rng) -> Stratification {
        if p <= 1 {
            return Stratification::degenerate(words, contexts);
        }
        let word_parts = balanced_ranges(words, p);
        let mut perm: Vec<u32> = (0..contexts as u32).collect();
        perm.shuffle(rng);
        let mut context_parts: Vec<Vec<u32>> = balanced_ranges(contexts, p)
            .into_iter()
            .map(|r| perm[r].to_vec())
            .collect();
        for part in &mut context_parts {
            part.sort_unstable();
        }
        let mut part_of_context = vec![(0u32, 0u32); contexts];
        for (pi, part) in context_parts.iter().enumerate() {
            for (li, &c) in part.iter().enumerate() {
                part_of_context[c as usize] = (pi as u32, li as u32);
            }
        }
        Stratification { word_parts, context_parts, part_of_context }
    }

    pub fn parts(&self) -> usize {
        self.word_parts.len()
    }

    pub fn word_parts(&self) -> &[Range<usize>] {
        &self.word_parts
    }

    pub fn context_part(&self, i: usize) -> &[u32] {
        &self.context_parts[i]
    }

    /// Context part handled by worker q during stratum s.
    pub fn schedule(&self, stratum: usize, worker: usize) -> usize {
        (worker + stratum) % self.parts()
    }
}

/// Contiguous ranges covering 0..n with sizes differing by at most one.
fn balanced_ranges(n: usize, p: usize) -> Vec<Range<usize>> {
    (0..p).map(|q| (q * n / p)..((q + 1) * n / p)).collect()
}

/// Group each word part's record indices by context part. buckets[q][r]
/// holds the records of (word part q) x (context part r), in record order.
fn bucket_records(omega: &CooccurrenceMatrix, strat: &Stratification) -> Vec<Vec<Vec<u32>>> {
    let p = strat.parts();
    let mut buckets: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); p]; p];
    for (q, part) in strat.word_parts.iter().enumerate() {
        if part.is_empty() {
            continue;
        }
        let lo = omega.row_range(part.start as u32).start;
        let hi = omega.row_range(part.end as u32 - 1).end;
        for ri in lo..hi {
            let c = omega.records()[ri].context_id;
            let (cp, _) = strat.part_of_context[c as usize];
            buckets[q][cp as usize].push(ri as u32);
        }
    }
    buckets
}

/// Split the flat row storage into per-part mutable row slices.
fn split_rows<'a>(mut rows: &'a mut [f64], parts: &[Range<usize>], k: usize) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(parts.len());
    for part in parts {
        let (head, tail) = rows.split_at_mut(part.len() * k);
        out.push(head);
        rows = tail;
    }
    debug_assert!(rows.is_empty());
    out
}

fn two_rows_mut(v: &mut [f64], k: usize, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert_ne!(i, j);
    if i < j {
        let (a, b) = v.split_at_mut(j * k);
        (&mut a[i * k..(i + 1) * k], &mut b[..k])
    } else {
        let (a, b) = v.split_at_mut(i * k);
        (&mut b[..k], &mut a[j * k..(j + 1) * k])
    }
}

/// The triple update of one SGD step, applied simultaneously: all three
/// gradients are evaluated at the pre-update values. Returns the surrogate
/// loss value and the rho evaluation for monitoring.
#[inline]
#[allow(clippy::too_many_arguments)]
fn step_kernel(
    u: &mut [f64],
    vc: &mut [f64],
    vcp: &mut [f64],
    xi: f64,
    r: f64,
    eta: f64,
    rho: &RhoSpec,
    loss: &LossSpec,
    dv: &mut [f64],
) -> Result<(f64, f64, f64)> {
    let k = u.len();
    let xi_inv = 1.0 / xi;
    let (rho_v, rho_g) = rho.value_grad(xi_inv);
    let mut x = 0.0;
    for t in 0..k {
        x += u[t] * (vc[t] - vcp[t]);
    }
    let (lv, lg) = loss.value_grad(x);
    let g = r * rho_g * lg;
    if !g.is_finite() || !x.is_finite() {
        return Err(Error::NonFinite(
            "sgd step produced a non-finite gradient; the step size is likely too large".into(),
        ));
    }
    let eg = eta * g;
    if eg != 0.0 {
        for t in 0..k {
            dv[t] = eg * u[t];
        }
        for t in 0..k {
            u[t] -= eg * (vc[t] - vcp[t]);
        }
        for t in 0..k {
            vc[t] -= dv[t];
        }
        for t in 0..k {
            vcp[t] += dv[t];
        }
    }
    Ok((lv, rho_v, rho_g))
}

/// One SGD step on the state for an observed pair (w, c) and a contrast
/// context c' != c.
pub fn sgd_step(
    state: &mut TrainState,
    omega: &CooccurrenceMatrix,
    w: u32,
    c: u32,
    c_prime: u32,
    cfg: &TrainConfig,
) -> Result<()> {
    let ri = omega
        .find(w, c)
        .ok_or_else(|| Error::Validation(format!("pair ({w}, {c}) is not observed")))?;
    if c_prime == c || c_prime as usize >= omega.contexts() {
        return Err(Error::Validation(format!(
            "contrast context {c_prime} must differ from {c} and be in range"
        )));
    }
    let r = cfg.pair_weight(omega.records()[ri].value);
    let xi = state.aux.xi[ri];
    let k = state.model.k();
    let mut dv = vec![0.0; k];
    let (u_rows, v_rows, _) = state.model.parts_mut();
    let u = &mut u_rows[w as usize * k..(w as usize + 1) * k];
    let (vc, vcp) = two_rows_mut(v_rows, k, c as usize, c_prime as usize);
    step_kernel(u, vc, vcp, xi, r, cfg.eta, &cfg.rho, &cfg.loss, &mut dv)?;
    Ok(())
}

struct WorkerOutcome {
    v_local: Vec<f64>,
    sum_loss: f64,
    sum_j: f64,
    steps: u64,
    saturations: u64,
    error: Option<Error>,
}

/// One full pass over the observations: p strata, each visiting the records
/// of its (word part x context part) block in a fresh shuffled order and
/// sampling contrast contexts inside the block's context part by rejection.
fn run_sweep(
    state: &mut TrainState,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
    strat: &Stratification,
    buckets: &[Vec<Vec<u32>>],
) -> Result<EpochStats> {
    let start = Instant::now();
    let p = strat.parts();
    let k = state.model.k();
    let epoch = state.epochs_done;
    let contexts = omega.contexts();
    let jbar_scale = omega.len() as f64 * (contexts as f64 - 1.0);
    let beta_over_alpha = cfg.rho.beta / cfg.rho.alpha;
    let inv_alpha = 1.0 / cfg.rho.alpha;
    let records = omega.records();
    let xi_all = state.aux.values();

    let mut totals = (0.0f64, 0.0f64, 0u64, 0u64); // loss, j, steps, saturations

    for s in 0..p {
        let (u_all, v_all, _) = state.model.parts_mut();
        // Gather each worker's context rows into a private buffer; the
        // scatter after the join is what makes the barrier a barrier.
        let mut gathered: Vec<Vec<f64>> = Vec::with_capacity(p);
        for q in 0..p {
            let members = &strat.context_parts[strat.schedule(s, q)];
            let mut local = vec![0.0; members.len() * k];
            for (li, &c) in members.iter().enumerate() {
                local[li * k..(li + 1) * k]
                    .copy_from_slice(&v_all[c as usize * k..(c as usize + 1) * k]);
            }
            gathered.push(local);
        }
        let u_slices = split_rows(u_all, &strat.word_parts, k);

        let mut outcomes: Vec<WorkerOutcome> = Vec::with_capacity(p);
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(p);
            for (q, ((u_part, mut v_local), bucket_row)) in u_slices
                .into_iter()
                .zip(gathered)
                .zip(buckets.iter())
                .enumerate()
            {
                let part_idx = strat.schedule(s, q);
                let members = &strat.context_parts[part_idx];
                let pristine = &bucket_row[part_idx];
                let word_base = strat.word_parts[q].start;
                let part_of_context = &strat.part_of_context;
                let rho = cfg.rho;
                let loss = cfg.loss;
                handles.push(scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        cfg.seed,
                        &[TAG_SGD, epoch, s as u64, q as u64],
                    ));
                    // Shuffle a copy so every pass permutes the canonical
                    // record order; in-place reshuffles would make the
                    // second pass depend on the first.
                    let mut indices = pristine.clone();
                    indices.shuffle(&mut rng);
                    let mut dv = vec![0.0; k];
                    let mut out = WorkerOutcome {
                        v_local: Vec::new(),
                        sum_loss: 0.0,
                        sum_j: 0.0,
                        steps: 0,
                        saturations: 0,
                        error: None,
                    };
                    for &ri in indices.iter() {
                        let rec = &records[ri as usize];
                        let c_local = part_of_context[rec.context_id as usize].1 as usize;
                        let cp_local = loop {
                            let cand = rng.random_range(0..members.len());
                            if members[cand] != rec.context_id {
                                break cand;
                            }
                        };
                        let xi = xi_all[ri as usize];
                        let xi_inv = 1.0 / xi;
                        if rho.saturates_at(xi_inv) {
                            out.saturations += 1;
                        }
                        let r = cfg.pair_weight(rec.value);
                        let w_off = (rec.word_id as usize - word_base) * k;
                        let u = &mut u_part[w_off..w_off + k];
                        let (vc, vcp) = two_rows_mut(&mut v_local, k, c_local, cp_local);
                        match step_kernel(u, vc, vcp, xi, r, cfg.eta, &rho, &loss, &mut dv) {
                            Ok((lv, rho_v, rho_g)) => {
                                out.sum_loss += lv;
                                out.sum_j += jbar_scale
                                    * r
                                    * ((rho_v + rho_g * (beta_over_alpha - xi_inv))
                                        / (contexts as f64 - 1.0)
                                        + inv_alpha * rho_g * lv);
                                out.steps += 1;
                            }
                            Err(e) => {
                                out.error = Some(e);
                                break;
                            }
                        }
                    }
                    out.v_local = v_local;
                    out
                }));
            }
            for h in handles {
                outcomes.push(h.join().expect("training worker panicked"));
            }
        });

        // Barrier: scatter the context rows back, then surface any abort.
        for (q, out) in outcomes.iter().enumerate() {
            let members = &strat.context_parts[strat.schedule(s, q)];
            for (li, &c) in members.iter().enumerate() {
                v_all[c as usize * k..(c as usize + 1) * k]
                    .copy_from_slice(&out.v_local[li * k..(li + 1) * k]);
            }
        }
        for out in outcomes {
            if let Some(e) = out.error {
                return Err(e);
            }
            totals.0 += out.sum_loss;
            totals.1 += out.sum_j;
            totals.2 += out.steps;
            totals.3 += out.saturations;
        }
    }

    state.epochs_done += 1;
    let steps = totals.2.max(1);
    let stats = EpochStats {
        epoch,
        steps: totals.2,
        mean_loss: totals.0 / steps as f64,
        jbar_estimate: totals.1 / steps as f64,
        rho_saturations: totals.3,
        wall: start.elapsed(),
    };
    state.jbar_estimate = stats.jbar_estimate;
    Ok(stats)
}

/// One sequential epoch: a fresh seeded permutation of all observed pairs,
/// one step each, contrast contexts drawn from the whole context set.
pub fn train_epoch_sequential(
    state: &mut TrainState,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
) -> Result<EpochStats> {
    let strat = Stratification::degenerate(omega.words(), omega.contexts());
    let buckets = bucket_records(omega, &strat);
    run_sweep(state, omega, cfg, &strat, &buckets)
}

/// Exact optimum of one auxiliary variable: alpha / (rank bound + beta).
pub fn xi_optimal(
    model: &EmbeddingModel,
    omega: &CooccurrenceMatrix,
    record_index: usize,
    cfg: &TrainConfig,
) -> Result<f64> {
    let rec = omega.records()[record_index];
    let u = model.word_vec(rec.word_id);
    let scores: Vec<f64> = (0..omega.contexts())
        .map(|c| dot(u, model.context_vec(c as u32)))
        .collect();
    let y = scores[rec.context_id as usize];
    let bound = cfg.loss.sum_over(&scores, y) - cfg.loss.zero_value();
    finish_xi(cfg.rho.alpha, bound, cfg.rho.beta)
}

fn finish_xi(alpha: f64, bound: f64, beta: f64) -> Result<f64> {
    let denom = bound + beta;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::NonFinite(format!(
            "auxiliary update needs a positive rank bound plus beta, got {denom}; \
             beta = 0 with a zero bound divides by zero"
        )));
    }
    Ok(alpha / denom)
}

/// Stage 2: replace every auxiliary variable with its exact optimum.
///
/// Word rows are split across workers in record-balanced contiguous ranges;
/// each worker scores blocks of its rows against all contexts with the
/// blocked product and reduces the surrogate sums row by row. U and V are
/// read-only here, so the parallel writes to disjoint xi ranges are safe.
pub fn update_xi_all(
    state: &mut TrainState,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
) -> Result<()> {
    let k = state.model.k();
    let contexts = omega.contexts();
    let p = cfg.workers.max(1);
    let row_parts = balance_rows_by_records(omega, p);
    let model = &state.model;
    let loss = cfg.loss;
    let (alpha, beta) = (cfg.rho.alpha, cfg.rho.beta);
    let block_rows = cfg.score_block_rows;

    // Split xi into the record ranges induced by the row partition.
    let mut xi_rest = state.aux.values_mut();
    let mut xi_parts: Vec<&mut [f64]> = Vec::with_capacity(row_parts.len());
    let mut consumed = 0;
    for rows in &row_parts {
        let hi = if rows.is_empty() {
            consumed
        } else {
            omega.row_range(rows.end as u32 - 1).end
        };
        let (head, tail) = xi_rest.split_at_mut(hi - consumed);
        xi_parts.push(head);
        consumed = hi;
        xi_rest = tail;
    }

    let mut failures: Vec<Option<Error>> = Vec::with_capacity(row_parts.len());
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (rows, xi_part) in row_parts.iter().zip(xi_parts) {
            handles.push(scope.spawn(move || -> Option<Error> {
                if rows.is_empty() {
                    return None;
                }
                let base = omega.row_range(rows.start as u32).start;
                let mut scores = vec![0.0; block_rows.min(rows.len()) * contexts];
                let mut w = rows.start;
                while w < rows.end {
                    let hi = (w + block_rows).min(rows.end);
                    let nrows = hi - w;
                    let u_block = &model.word_rows()[w * k..hi * k];
                    let buf = &mut scores[..nrows * contexts];
                    block_scores(u_block, model.context_rows(), k, buf);
                    for row in w..hi {
                        let srow = &buf[(row - w) * contexts..(row - w + 1) * contexts];
                        let range = omega.row_range(row as u32);
                        for ri in range {
                            let rec = omega.records()[ri];
                            let y = srow[rec.context_id as usize];
                            let bound = loss.sum_over(srow, y) - loss.zero_value();
                            match finish_xi(alpha, bound, beta) {
                                Ok(v) => xi_part[ri - base] = v,
                                Err(e) => return Some(e),
                            }
                        }
                    }
                    w = hi;
                }
                None
            }));
        }
        for h in handles {
            failures.push(h.join().expect("xi update worker panicked"));
        }
    });
    if let Some(e) = failures.into_iter().flatten().next() {
        return Err(e);
    }
    Ok(())
}

/// Contiguous word-row ranges with roughly equal record counts, so the
/// skewed rows of frequent words spread evenly across workers.
fn balance_rows_by_records(omega: &CooccurrenceMatrix, p: usize) -> Vec<Range<usize>> {
    let words = omega.words();
    let total = omega.len();
    let mut splits = Vec::with_capacity(p + 1);
    splits.push(0usize);
    let mut row = 0;
    for q in 1..p {
        let target = q * total / p;
        while row < words && omega.row_range(row as u32).end < target {
            row += 1;
        }
        splits.push(row.min(words));
    }
    splits.push(words);
    splits.windows(2).map(|w| w[0]..w[1]).collect()
}

/// Guard for the exact-objective verification tools.
fn check_enumeration_size(omega: &CooccurrenceMatrix) -> Result<()> {
    let work = omega.len() as f64 * omega.contexts() as f64;
    if work > 1e7 {
        return Err(Error::Validation(format!(
            "exact objective enumeration needs |pairs| * |contexts| <= 1e7, got {work:.3e}"
        )));
    }
    Ok(())
}

/// Exact weighted ranking objective J(U, V); verification tool for small
/// instances.
pub fn objective_exact(
    model: &EmbeddingModel,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
) -> Result<f64> {
    check_enumeration_size(omega)?;
    let contexts = omega.contexts();
    let mut total = 0.0;
    let mut scores = vec![0.0; contexts];
    for w in 0..omega.words() as u32 {
        let range = omega.row_range(w);
        if range.is_empty() {
            continue;
        }
        let u = model.word_vec(w);
        for (c, slot) in scores.iter_mut().enumerate() {
            *slot = dot(u, model.context_vec(c as u32));
        }
        for ri in range {
            let rec = omega.records()[ri];
            let y = scores[rec.context_id as usize];
            let bound = cfg.loss.sum_over(&scores, y) - cfg.loss.zero_value();
            let r = cfg.pair_weight(rec.value);
            total += r * cfg.rho.value((bound + cfg.rho.beta) / cfg.rho.alpha);
        }
    }
    Ok(total)
}

/// Linearized upper bound J-bar(U, V, Xi); equals the exact objective when
/// every xi is at its optimum, and never falls below it otherwise.
pub fn objective_bound(
    model: &EmbeddingModel,
    aux: &AuxVariables,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
) -> Result<f64> {
    check_enumeration_size(omega)?;
    if aux.len() != omega.len() {
        return Err(Error::Validation(format!(
            "{} auxiliary variables for {} records",
            aux.len(),
            omega.len()
        )));
    }
    let contexts = omega.contexts();
    let beta_over_alpha = cfg.rho.beta / cfg.rho.alpha;
    let inv_alpha = 1.0 / cfg.rho.alpha;
    let mut total = 0.0;
    let mut scores = vec![0.0; contexts];
    for w in 0..omega.words() as u32 {
        let range = omega.row_range(w);
        if range.is_empty() {
            continue;
        }
        let u = model.word_vec(w);
        for (c, slot) in scores.iter_mut().enumerate() {
            *slot = dot(u, model.context_vec(c as u32));
        }
        for ri in range {
            let rec = omega.records()[ri];
            let y = scores[rec.context_id as usize];
            let bound = cfg.loss.sum_over(&scores, y) - cfg.loss.zero_value();
            let r = cfg.pair_weight(rec.value);
            let xi_inv = 1.0 / aux.values()[ri];
            let (rho_v, rho_g) = cfg.rho.value_grad(xi_inv);
            total += r * (rho_v + rho_g * (beta_over_alpha + inv_alpha * bound - xi_inv));
        }
    }
    Ok(total)
}

/// Unbiased single-triple estimator of the linearized bound: averaging it
/// over all (pair, contrast) triples reproduces the bound exactly.
pub fn stochastic_estimate(
    model: &EmbeddingModel,
    aux: &AuxVariables,
    omega: &CooccurrenceMatrix,
    w: u32,
    c: u32,
    c_prime: u32,
    cfg: &TrainConfig,
) -> Result<f64> {
    let ri = omega
        .find(w, c)
        .ok_or_else(|| Error::Validation(format!("pair ({w}, {c}) is not observed")))?;
    if c_prime == c || c_prime as usize >= omega.contexts() {
        return Err(Error::Validation(format!(
            "contrast context {c_prime} must differ from {c} and be in range"
        )));
    }
    let contexts_m1 = omega.contexts() as f64 - 1.0;
    let r = cfg.pair_weight(omega.records()[ri].value);
    let xi_inv = 1.0 / aux.values()[ri];
    let (rho_v, rho_g) = cfg.rho.value_grad(xi_inv);
    let u = model.word_vec(w);
    let x = dot(u, model.context_vec(c)) - dot(u, model.context_vec(c_prime));
    let lv = cfg.loss.value(x);
    Ok(omega.len() as f64
        * contexts_m1
        * r
        * ((rho_v + rho_g * (cfg.rho.beta / cfg.rho.alpha - xi_inv)) / contexts_m1
            + rho_g * lv / cfg.rho.alpha))
}

/// Side channels for long runs: a checkpoint rewritten after every outer
/// iteration and a per-epoch log line.
#[derive(Default)]
pub struct TrainHooks<'a> {
    pub checkpoint_path: Option<&'a Path>,
    pub log: Option<&'a mut dyn Write>,
}

impl TrainHooks<'_> {
    fn log_epoch(&mut self, stats: &EpochStats) -> Result<()> {
        if let Some(log) = self.log.as_deref_mut() {
            writeln!(
                log,
                "epoch {} loss {:.6} jbar {:.6e} steps {} rho_saturations {} wall {:.3}s",
                stats.epoch,
                stats.mean_loss,
                stats.jbar_estimate,
                stats.steps,
                stats.rho_saturations,
                stats.wall.as_secs_f64()
            )
            .map_err(|e| Error::io("writing training log", e))?;
        }
        Ok(())
    }
}

/// Full two-stage training loop. Each outer iteration runs
/// `stage1_passes` passes over the observations (stratified across workers
/// when `workers > 1`), then recomputes every auxiliary variable exactly,
/// then checkpoints.
pub fn train(
    state: &mut TrainState,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
    hooks: &mut TrainHooks,
) -> Result<Vec<EpochStats>> {
    cfg.validate(omega.contexts())?;
    if omega.len() > u32::MAX as usize {
        return Err(Error::Validation(
            "more than 2^32 - 1 observed pairs; desk-scale corpora expected".into(),
        ));
    }
    if state.model.words() != omega.words()
        || state.model.contexts() != omega.contexts()
        || state.aux.len() != omega.len()
    {
        return Err(Error::Validation(
            "training state does not match the co-occurrence matrix".into(),
        ));
    }
    if state.model.k() != cfg.dim {
        return Err(Error::Validation(format!(
            "model dimension {} does not match configured dim {}",
            state.model.k(),
            cfg.dim
        )));
    }
    let mut all = Vec::with_capacity(cfg.outer_iters * cfg.stage1_passes);
    for _ in 0..cfg.outer_iters {
        let strat = if cfg.workers > 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                cfg.seed,
                &[TAG_PARTITION, state.outer_done],
            ));
            Stratification::sample(omega.words(), omega.contexts(), cfg.workers, &mut rng)
        } else {
            Stratification::degenerate(omega.words(), omega.contexts())
        };
        let buckets = bucket_records(omega, &strat);
        for _ in 0..cfg.stage1_passes {
            let stats = run_sweep(state, omega, cfg, &strat, &buckets)?;
            hooks.log_epoch(&stats)?;
            all.push(stats);
        }
        update_xi_all(state, omega, cfg)?;
        state.outer_done += 1;
        if let Some(path) = hooks.checkpoint_path {
            save_checkpoint(&state.model, &state.aux, path)?;
        }
    }
    Ok(all)
}

/// Stratified entry point; identical to [`train`], which already dispatches
/// on the worker count, and reduces to the sequential schedule at p = 1.
pub fn train_stratified(
    state: &mut TrainState,
    omega: &CooccurrenceMatrix,
    cfg: &TrainConfig,
    hooks: &mut TrainHooks,
) -> Result<Vec<EpochStats>> {
    train(state, omega, cfg, hooks)
}
