//! Periodically time-varying trellis of the punctured ring encoder followed
//! by the CPE.
//!
//! A joint state is `cc * n_cpe + cpe`. Branches of a section are stored
//! flat and indexed `state * M + u`. Each kept channel symbol is tagged
//! with a waveform id `cpe_state * M + symbol` into the [`WaveformBank`].

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::cpm::{cpe_step, modulate, CpeState, CpmParams};
use crate::error::{Error, Result};
use crate::ring::{GeneratorMatrix, PunctureMatrix};

/// Joint encoder state, split into its two components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState {
    pub cc: usize,
    pub cpe: usize,
}

/// One trellis section: all branches for puncture period position `phase`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrellisSection {
    phase: usize,
    kept_per_branch: usize,
    next: Vec<u32>,
    kept: Vec<u32>,
    waves: Vec<u32>,
}

impl TrellisSection {
    pub fn phase(&self) -> usize {
        self.phase
    }

    /// Channel intervals spanned by every branch of this section.
    pub fn kept_per_branch(&self) -> usize {
        self.kept_per_branch
    }

    pub fn next(&self, branch: usize) -> usize {
        self.next[branch] as usize
    }

    pub fn kept_symbols(&self, branch: usize) -> &[u32] {
        let k = self.kept_per_branch;
        &self.kept[branch * k..(branch + 1) * k]
    }

    pub fn waveform_ids(&self, branch: usize) -> &[u32] {
        let k = self.kept_per_branch;
        &self.waves[branch * k..(branch + 1) * k]
    }
}

/// Sampled waveforms for every (CPE state, channel symbol) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformBank {
    samples_per_symbol: usize,
    samples: Vec<Complex64>,
}

impl WaveformBank {
    pub fn new(params: &CpmParams) -> Self {
        let m = params.alphabet();
        let mut samples = Vec::new();
        for cpe in 0..params.num_states() {
            let state = CpeState::from_index(cpe, params);
            for u in 0..m {
                samples.extend(modulate(&state, u, params).samples);
            }
        }
        Self {
            samples_per_symbol: params.samples_per_symbol(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.samples_per_symbol
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn waveform(&self, id: usize) -> &[Complex64] {
        let n = self.samples_per_symbol;
        &self.samples[id * n..(id + 1) * n]
    }
}

/// Joint trellis with one section per puncture period position.
#[derive(Debug, Clone)]
pub struct JointTrellis {
    generator: GeneratorMatrix,
    puncture: PunctureMatrix,
    params: CpmParams,
    sections: Vec<TrellisSection>,
    bank: WaveformBank,
}

/// Builds the joint trellis. Kept symbols of a branch enter the CPE in
/// encoder output order.
pub fn build_trellis(
    generator: &GeneratorMatrix,
    puncture: &PunctureMatrix,
    params: &CpmParams,
) -> Result<JointTrellis> {
    if generator.modulus() != params.alphabet() {
        return Err(Error::ParameterMismatch(format!(
            "code ring Z_{} differs from CPM alphabet size {}",
            generator.modulus(),
            params.alphabet()
        )));
    }
    if params.h_num() != 1 || params.phase_states() != params.alphabet() {
        return Err(Error::ParameterMismatch(format!(
            "joint trellis requires h = 1/M, got {}/{}",
            params.h_num(),
            params.phase_states()
        )));
    }
    if puncture.outputs() != generator.outputs() {
        return Err(Error::WidthMismatch {
            expected: puncture.outputs(),
            got: generator.outputs(),
        });
    }
    let m = generator.modulus();
    let n_cc = generator.num_states();
    let n_cpe = params.num_states();
    let cpe_states: Vec<CpeState> = (0..n_cpe).map(|i| CpeState::from_index(i, params)).collect();
    let mut out = vec![0u32; generator.outputs()];
    let mut sections = Vec::with_capacity(puncture.period());
    for phase in 0..puncture.period() {
        let rows = puncture.kept_rows(phase);
        let k = rows.len();
        let branches = n_cc * n_cpe * m as usize;
        let mut next = Vec::with_capacity(branches);
        let mut kept = Vec::with_capacity(branches * k);
        let mut waves = Vec::with_capacity(branches * k);
        for cc in 0..n_cc {
            for cpe in 0..n_cpe {
                for u in 0..m {
                    let cc_next = generator.step_into(cc, u, &mut out);
                    let mut state = cpe_states[cpe].clone();
                    for &row in &rows {
                        let symbol = out[row];
                        kept.push(symbol);
                        waves.push((state.index(params) * m as usize) as u32 + symbol);
                        state = cpe_step(&state, symbol, params);
                    }
                    next.push((cc_next * n_cpe + state.index(params)) as u32);
                }
            }
        }
        sections.push(TrellisSection {
            phase,
            kept_per_branch: k,
            next,
            kept,
            waves,
        });
    }
    Ok(JointTrellis {
        generator: generator.clone(),
        puncture: puncture.clone(),
        params: params.clone(),
        sections,
        bank: WaveformBank::new(params),
    })
}

impl JointTrellis {
    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn puncture(&self) -> &PunctureMatrix {
        &self.puncture
    }

    pub fn params(&self) -> &CpmParams {
        &self.params
    }

    pub fn bank(&self) -> &WaveformBank {
        &self.bank
    }

    pub fn alphabet(&self) -> usize {
        self.generator.modulus() as usize
    }

    pub fn memory(&self) -> usize {
        self.generator.memory()
    }

    pub fn period(&self) -> usize {
        self.sections.len()
    }

    pub fn cpe_states(&self) -> usize {
        self.params.num_states()
    }

    pub fn num_states(&self) -> usize {
        self.generator.num_states() * self.params.num_states()
    }

    pub fn num_branches(&self) -> usize {
        self.num_states() * self.alphabet()
    }

    /// Channel symbols per puncture period.
    pub fn symbols_per_period(&self) -> usize {
        self.puncture.kept()
    }

    pub fn rate(&self) -> f64 {
        self.puncture.rate()
    }

    pub fn split(&self, state: usize) -> JointState {
        JointState {
            cc: state / self.cpe_states(),
            cpe: state % self.cpe_states(),
        }
    }

    pub fn join(&self, state: JointState) -> usize {
        state.cc * self.cpe_states() + state.cpe
    }

    pub fn sections(&self) -> &[TrellisSection] {
        &self.sections
    }

    /// Section used at trellis step `t`.
    pub fn section_schedule(&self, t: usize) -> &TrellisSection {
        &self.sections[t % self.sections.len()]
    }

    /// Channel intervals consumed by the first `steps` trellis steps.
    pub fn intervals_for_steps(&self, steps: usize) -> usize {
        let per_period = self.symbols_per_period();
        let full = steps / self.period();
        full * per_period
            + self.sections[..steps % self.period()]
                .iter()
                .map(|s| s.kept_per_branch)
                .sum::<usize>()
    }

    /// Smallest step count whose intervals equal `intervals`, if one exists.
    pub fn steps_for_intervals(&self, intervals: usize) -> Option<usize> {
        let per_period = self.symbols_per_period();
        let full = intervals / per_period;
        let mut steps = full * self.period();
        let mut used = full * per_period;
        if used == intervals {
            return Some(steps);
        }
        for section in &self.sections {
            used += section.kept_per_branch;
            steps += 1;
            if used == intervals {
                return Some(steps);
            }
            if used > intervals {
                return None;
            }
        }
        None
    }

    /// Runs an input sequence from the zero state. Returns the kept channel
    /// symbols, the waveform ids of each interval and the final state.
    pub fn transmit(&self, input: &[u32]) -> Result<(Vec<u32>, Vec<u32>, usize)> {
        let m = self.alphabet() as u32;
        let mut state = 0usize;
        let mut symbols = Vec::new();
        let mut waves = Vec::new();
        for (t, &u) in input.iter().enumerate() {
            if u >= m {
                return Err(Error::SymbolOutOfRange {
                    symbol: u,
                    modulus: m,
                });
            }
            let section = self.section_schedule(t);
            let branch = state * m as usize + u as usize;
            symbols.extend_from_slice(section.kept_symbols(branch));
            waves.extend_from_slice(section.waveform_ids(branch));
            state = section.next(branch);
        }
        Ok((symbols, waves, state))
    }

    /// Baseband samples for a sequence of waveform ids.
    pub fn synthesize(&self, waves: &[u32]) -> Vec<Complex64> {
        waves
            .iter()
            .flat_map(|&id| self.bank.waveform(id as usize).iter().copied())
            .collect()
    }

    /// States reachable from state 0 at section boundaries that are a
    /// multiple of the period, as a membership mask.
    pub fn reachable_states(&self) -> Vec<bool> {
        let m = self.alphabet();
        let mut seen = vec![vec![false; self.num_states()]; self.period()];
        let mut stack = vec![(0usize, 0usize)];
        seen[0][0] = true;
        while let Some((j, s)) = stack.pop() {
            let section = &self.sections[j];
            let nj = (j + 1) % self.period();
            for u in 0..m {
                let next = section.next(s * m + u);
                if !seen[nj][next] {
                    seen[nj][next] = true;
                    stack.push((nj, next));
                }
            }
        }
        seen.swap_remove(0)
    }

    /// Structured text listing every branch of every section.
    pub fn dump(&self) -> String {
        let mut text = String::new();
        let m = self.alphabet();
        let _ = writeln!(
            text,
            "trellis M={} m={} P={} L={} period={} states={}",
            m,
            self.memory(),
            self.params.phase_states(),
            self.params.pulse_len(),
            self.period(),
            self.num_states()
        );
        for section in &self.sections {
            let _ = writeln!(text, "section {} kept={}", section.phase, section.kept_per_branch);
            for s in 0..self.num_states() {
                let js = self.split(s);
                for u in 0..m {
                    let b = s * m + u;
                    let nx = self.split(section.next(b));
                    let kept: Vec<String> =
                        section.kept_symbols(b).iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(
                        text,
                        "({},{}) {} -> ({},{}) [{}]",
                        js.cc,
                        js.cpe,
                        u,
                        nx.cc,
                        nx.cpe,
                        kept.join(" ")
                    );
                }
            }
        }
        text
    }
}
