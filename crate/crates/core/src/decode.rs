//! Matched-filter branch metrics, Viterbi sequence detection and BCJR
//! symbol APPs on the joint trellis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::trellis::JointTrellis;

/// Correlation metric of every branch at every trellis step.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    branches: usize,
    values: Vec<f64>,
}

impl MetricTable {
    /// Wraps precomputed per-step branch metrics, laid out step-major.
    pub fn from_values(branches: usize, values: Vec<f64>) -> Result<Self> {
        if branches == 0 || !values.len().is_multiple_of(branches) {
            return Err(Error::LengthMismatch {
                expected: branches * (values.len() / branches.max(1)),
                got: values.len(),
            });
        }
        Ok(Self { branches, values })
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.branches
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * self.branches..(t + 1) * self.branches]
    }

    pub fn step_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t * self.branches..(t + 1) * self.branches]
    }

    /// Multiplies every metric by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Per-interval outputs `Re sum_k r_k conj(s_k) dt` of every filter in the bank.
pub fn filter_outputs(received: &[Complex64], trellis: &JointTrellis) -> Vec<Vec<f64>> {
    let bank = trellis.bank();
    let n = bank.samples_per_symbol();
    let dt = 1.0 / n as f64;
    received
        .chunks_exact(n)
        .map(|chunk| {
            (0..bank.len())
                .map(|w| {
                    chunk
                        .iter()
                        .zip(bank.waveform(w))
                        .map(|(r, s)| r.re * s.re + r.im * s.im)
                        .sum::<f64>()
                        * dt
                })
                .collect()
        })
        .collect()
}

/// Branch metrics for a received sample stream. The stream must cover a
/// whole number of trellis steps.
pub fn branch_metrics(received: &[Complex64], trellis: &JointTrellis) -> Result<MetricTable> {
    if received.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = trellis.bank().samples_per_symbol();
    if !received.len().is_multiple_of(n) {
        return Err(Error::LengthMismatch {
            expected: received.len() / n * n,
            got: received.len(),
        });
    }
    let intervals = received.len() / n;
    let steps = trellis
        .steps_for_intervals(intervals)
        .ok_or(Error::LengthMismatch {
            expected: trellis.intervals_for_steps(
                (0..)
                    .find(|&s| trellis.intervals_for_steps(s) >= intervals)
                    .unwrap_or(0),
            ) * n,
            got: received.len(),
        })?;
    let filters = filter_outputs(received, trellis);
    let branches = trellis.num_branches();
    let mut values = Vec::with_capacity(steps * branches);
    let mut interval = 0;
    for t in 0..steps {
        let section = trellis.section_schedule(t);
        let k = section.kept_per_branch();
        for b in 0..branches {
            let ids = section.waveform_ids(b);
            values.push(
                ids.iter()
                    .enumerate()
                    .map(|(i, &w)| filters[interval + i][w as usize])
                    .sum(),
            );
        }
        interval += k;
    }
    Ok(MetricTable { branches, values })
}

/// How a frame ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The last `m` inputs are zero, so the encoder component ends in 0.
    /// The CPE phase is left free.
    ZeroTail,
    /// No tail; decisions are released `depth` steps behind the best
    /// survivor and the last `depth` come from the best final state.
    Truncated { depth: usize },
}

impl Termination {
    /// Truncated decoding with depth `5 * (m + log_M P)`.
    pub fn truncated_default(trellis: &JointTrellis) -> Self {
        let m = trellis.alphabet() as f64;
        let phase_mem = (trellis.params().phase_states() as f64).ln() / m.ln();
        let per_pulse = (trellis.params().pulse_len() - 1) as f64;
        let depth = (5.0 * (trellis.memory() as f64 + phase_mem + per_pulse)).ceil() as usize;
        Termination::Truncated { depth }
    }
}

/// Decoded input sequence and the metric of the chosen path.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiOutput {
    pub symbols: Vec<u32>,
    pub metric: f64,
}

fn end_allowed(trellis: &JointTrellis, termination: Termination, state: usize) -> bool {
    match termination {
        Termination::ZeroTail => trellis.split(state).cc == 0,
        Termination::Truncated { .. } => true,
    }
}

fn best_state(
    trellis: &JointTrellis,
    metric: &[f64],
    termination: Termination,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (s, &v) in metric.iter().enumerate() {
        if v == f64::NEG_INFINITY || !end_allowed(trellis, termination, s) {
            continue;
        }
        if best.is_none_or(|b| v > metric[b]) {
            best = Some(s);
        }
    }
    best
}

/// Maximum-metric path through the trellis starting in state 0. Ties go
/// to the smallest predecessor branch and the smallest final state.
pub fn viterbi_mlsd(
    trellis: &JointTrellis,
    metrics: &MetricTable,
    termination: Termination,
) -> Result<ViterbiOutput> {
    let steps = metrics.steps();
    if steps == 0 {
        return Err(Error::EmptyInput);
    }
    if metrics.branches() != trellis.num_branches() {
        return Err(Error::ParameterMismatch(format!(
            "metric table has {} branches, trellis has {}",
            metrics.branches(),
            trellis.num_branches()
        )));
    }
    let m = trellis.alphabet();
    let ns = trellis.num_states();
    let mut metric = vec![f64::NEG_INFINITY; ns];
    metric[0] = 0.0;
    let mut next_metric = vec![f64::NEG_INFINITY; ns];
    // survivor branch index per (step, next state)
    let mut survivors = vec![u32::MAX; steps * ns];
    let mut early = Vec::new();

    let traceback = |survivors: &[u32], upto: usize, mut state: usize, out: &mut Vec<u32>| {
        out.clear();
        for t in (0..upto).rev() {
            let b = survivors[t * ns + state] as usize;
            out.push((b % m) as u32);
            state = b / m;
        }
        out.reverse();
    };

    let mut path = Vec::new();
    for t in 0..steps {
        let section = trellis.section_schedule(t);
        let bm = metrics.step(t);
        next_metric.fill(f64::NEG_INFINITY);
        let row = &mut survivors[t * ns..(t + 1) * ns];
        for s in 0..ns {
            let base = metric[s];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for u in 0..m {
                let b = s * m + u;
                let cand = base + bm[b];
                let nx = section.next(b);
                if cand > next_metric[nx] {
                    next_metric[nx] = cand;
                    row[nx] = b as u32;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next_metric);
        if let Termination::Truncated { depth } = termination {
            if depth > 0 && t + 1 > depth {
                let decide = t - depth;
                let mut state = best_state(trellis, &metric, termination).expect("live state");
                for tau in (decide..=t).rev() {
                    let b = survivors[tau * ns + state] as usize;
                    if tau == decide {
                        early.push((b % m) as u32);
                    }
                    state = b / m;
                }
            }
        }
    }
    let end = best_state(trellis, &metric, termination).ok_or_else(|| {
        Error::InvalidArgument("no surviving path satisfies the termination".into())
    })?;
    traceback(&survivors, steps, end, &mut path);
    let mut symbols = early;
    symbols.extend_from_slice(&path[symbols.len()..]);
    let metric_value = decoded_metric(trellis, metrics, &symbols);
    Ok(ViterbiOutput {
        symbols,
        metric: metric_value,
    })
}

/// Total metric of an input sequence starting in state 0.
pub fn decoded_metric(trellis: &JointTrellis, metrics: &MetricTable, symbols: &[u32]) -> f64 {
    let m = trellis.alphabet();
    let mut state = 0;
    let mut total = 0.0;
    for (t, &u) in symbols.iter().enumerate() {
        let b = state * m + u as usize;
        total += metrics.step(t)[b];
        state = trellis.section_schedule(t).next(b);
    }
    total
}

/// Per-step symbol posteriors `Pr(U_t = mu | r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppOutput {
    pub probs: Vec<Vec<f64>>,
}

/// Uniform priors for `info` steps followed by `tail` steps fixed to zero.
pub fn zero_tail_priors(info: usize, tail: usize, alphabet: usize) -> Vec<Vec<f64>> {
    let uniform = vec![1.0 / alphabet as f64; alphabet];
    let mut delta = vec![0.0; alphabet];
    delta[0] = 1.0;
    let mut priors = vec![uniform; info];
    priors.extend(std::iter::repeat_n(delta, tail));
    priors
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn normalize_log(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        v.iter_mut().for_each(|x| *x -= max);
    }
}

/// Log-domain forward/backward recursion. Branch weights are
/// `prior(u) * exp(2 * metric / N0)`.
pub fn bcjr_app(
    trellis: &JointTrellis,
    metrics: &MetricTable,
    priors: &[Vec<f64>],
    n0: f64,
    termination: Termination,
) -> Result<AppOutput> {
    let steps = metrics.steps();
    if steps == 0 {
        return Err(Error::EmptyInput);
    }
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise density {n0} must be positive")));
    }
    let m = trellis.alphabet();
    if priors.len() != steps || priors.iter().any(|p| p.len() != m) {
        return Err(Error::LengthMismatch {
            expected: steps,
            got: priors.len(),
        });
    }
    for (t, p) in priors.iter().enumerate() {
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 || p.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "priors at step {t} do not form a distribution"
            )));
        }
    }
    let ns = trellis.num_states();
    let scale = 2.0 / n0;
    let log_priors: Vec<Vec<f64>> = priors
        .iter()
        .map(|p| p.iter().map(|&x| x.ln()).collect())
        .collect();
    let gamma = |t: usize, b: usize| log_priors[t][b % m] + scale * metrics.step(t)[b];

    let mut alpha = vec![vec![f64::NEG_INFINITY; ns]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let section = trellis.section_schedule(t);
        let (cur, rest) = alpha.split_at_mut(t + 1);
        let (cur, nxt) = (&cur[t], &mut rest[0]);
        for s in 0..ns {
            if cur[s] == f64::NEG_INFINITY {
                continue;
            }
            for u in 0..m {
                let b = s * m + u;
                let g = gamma(t, b);
                if g == f64::NEG_INFINITY {
                    continue;
                }
                let nx = section.next(b);
                nxt[nx] = log_add(nxt[nx], cur[s] + g);
            }
        }
        normalize_log(nxt);
    }

    let mut beta = vec![f64::NEG_INFINITY; ns];
    for (s, b) in beta.iter_mut().enumerate() {
        if end_allowed(trellis, termination, s) {
            *b = 0.0;
        }
    }
    let mut probs = vec![Vec::new(); steps];
    let mut prev_beta = vec![f64::NEG_INFINITY; ns];
    for t in (0..steps).rev() {
        let section = trellis.section_schedule(t);
        let mut per_symbol = vec![f64::NEG_INFINITY; m];
        prev_beta.fill(f64::NEG_INFINITY);
        for s in 0..ns {
            for u in 0..m {
                let b = s * m + u;
                let g = gamma(t, b);
                let nx = section.next(b);
                if g == f64::NEG_INFINITY || beta[nx] == f64::NEG_INFINITY {
                    continue;
                }
                let tail = g + beta[nx];
                prev_beta[s] = log_add(prev_beta[s], tail);
                if alpha[t][s] != f64::NEG_INFINITY {
                    per_symbol[u] = log_add(per_symbol[u], alpha[t][s] + tail);
                }
            }
        }
        normalize_log(&mut per_symbol);
        let total: f64 = per_symbol.iter().map(|x| x.exp()).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "no path with nonzero weight passes step {t}"
            )));
        }
        probs[t] = per_symbol.iter().map(|x| x.exp() / total).collect();
        normalize_log(&mut prev_beta);
        std::mem::swap(&mut beta, &mut prev_beta);
    }
    Ok(AppOutput { probs })
}

/// Per-step argmax of the APPs, ties to the smallest symbol.
pub fn hard_decision(app: &AppOutput) -> Vec<u32> {
    app.probs
        .iter()
        .map(|p| {
            let mut best = 0;
            for (i, &x) in p.iter().enumerate() {
                if x > p[best] {
                    best = i;
                }
            }
            best as u32
        })
        .collect()
}
