//! Continuous phase encoder, memoryless modulator and distance increments.
//!
//! The modulator uses the tilted-phase description: within symbol interval
//! `n` the phase is
//!
//! ```text
//! psi(tau) = 2*pi*h*v_n + 4*pi*h * sum_{i=0}^{L-1} u_{n-i} * q(tau + i*T),   0 <= tau < T
//! ```
//!
//! so the phase state `v` lives in Z_P for `h = K/P` and the encoder state
//! is `(v, u_{n-1}, ..., u_{n-L+1})`. Data-independent phase terms are
//! dropped; they do not change any distance. `T` is normalised to 1 and
//! every interval carries unit energy.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency pulse family. Only the rectangular pulse is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pulse {
    Rec,
}

/// Parameters of an M-ary CPM scheme with rational modulation index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpmParams {
    alphabet: u32,
    h_num: u32,
    h_den: u32,
    pulse_len: usize,
    pulse: Pulse,
    samples_per_symbol: usize,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl CpmParams {
    pub fn new(
        alphabet: u32,
        h_num: u32,
        h_den: u32,
        pulse_len: usize,
        pulse: Pulse,
        samples_per_symbol: usize,
    ) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::InvalidCpm(format!("alphabet size {alphabet} < 2")));
        }
        if h_num == 0 || h_den == 0 {
            return Err(Error::InvalidCpm("modulation index must be positive".into()));
        }
        if gcd(h_num, h_den) != 1 {
            return Err(Error::InvalidCpm(format!(
                "modulation index {h_num}/{h_den} is not irreducible"
            )));
        }
        if pulse_len == 0 {
            return Err(Error::InvalidCpm("pulse length must be at least 1".into()));
        }
        if samples_per_symbol < 4 {
            return Err(Error::InvalidCpm(format!(
                "{samples_per_symbol} samples per symbol; need at least 4"
            )));
        }
        Ok(Self {
            alphabet,
            h_num,
            h_den,
            pulse_len,
            pulse,
            samples_per_symbol,
        })
    }

    /// Full-response REC scheme with `h = 1/M`.
    pub fn rec1(alphabet: u32, samples_per_symbol: usize) -> Result<Self> {
        Self::new(alphabet, 1, alphabet, 1, Pulse::Rec, samples_per_symbol)
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn h(&self) -> f64 {
        self.h_num as f64 / self.h_den as f64
    }

    pub fn h_num(&self) -> u32 {
        self.h_num
    }

    /// Number of phase states `P`.
    pub fn phase_states(&self) -> u32 {
        self.h_den
    }

    pub fn pulse_len(&self) -> usize {
        self.pulse_len
    }

    pub fn pulse(&self) -> Pulse {
        self.pulse
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    /// Copy with a different sampling density.
    pub fn with_samples_per_symbol(&self, samples_per_symbol: usize) -> Result<Self> {
        Self::new(
            self.alphabet,
            self.h_num,
            self.h_den,
            self.pulse_len,
            self.pulse,
            samples_per_symbol,
        )
    }

    /// Sample spacing `T / N_sps`.
    pub fn sample_spacing(&self) -> f64 {
        1.0 / self.samples_per_symbol as f64
    }

    /// Number of CPE states, `P * M^(L-1)`.
    pub fn num_states(&self) -> usize {
        self.h_den as usize * (self.alphabet as usize).pow(self.pulse_len as u32 - 1)
    }

    /// Phase response `q(t)`, rising from 0 to 1/2 over `L` intervals.
    pub fn phase_response(&self, t: f64) -> f64 {
        match self.pulse {
            Pulse::Rec => {
                let lt = self.pulse_len as f64;
                if t <= 0.0 {
                    0.0
                } else if t >= lt {
                    0.5
                } else {
                    t / (2.0 * lt)
                }
            }
        }
    }
}

/// CPE state: phase state `v` and the `L-1` most recent symbols (most recent first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CpeState {
    pub v: u32,
    pub corr: Vec<u32>,
}

impl CpeState {
    pub fn zero(params: &CpmParams) -> Self {
        Self {
            v: 0,
            corr: vec![0; params.pulse_len() - 1],
        }
    }

    /// Index `v + P * sum(corr[t] * M^t)` in `[0, P*M^(L-1))`.
    pub fn index(&self, params: &CpmParams) -> usize {
        let m = params.alphabet() as usize;
        let corr = self
            .corr
            .iter()
            .rev()
            .fold(0usize, |acc, &d| acc * m + d as usize);
        self.v as usize + params.phase_states() as usize * corr
    }

    pub fn from_index(index: usize, params: &CpmParams) -> Self {
        let p = params.phase_states() as usize;
        let m = params.alphabet() as usize;
        let v = (index % p) as u32;
        let mut rest = index / p;
        let corr = (0..params.pulse_len() - 1)
            .map(|_| {
                let d = (rest % m) as u32;
                rest /= m;
                d
            })
            .collect();
        Self { v, corr }
    }
}

/// Advances the CPE by one input symbol.
pub fn cpe_step(state: &CpeState, u: u32, params: &CpmParams) -> CpeState {
    let p = params.phase_states();
    match state.corr.last() {
        None => CpeState {
            v: (state.v + u) % p,
            corr: Vec::new(),
        },
        Some(&oldest) => {
            let mut corr = Vec::with_capacity(state.corr.len());
            corr.push(u);
            corr.extend_from_slice(&state.corr[..state.corr.len() - 1]);
            CpeState {
                v: (state.v + oldest) % p,
                corr,
            }
        }
    }
}

/// Tilted phase at offset `tau` in `[0, T]` of the interval that starts in
/// `state` and carries symbol `u`.
pub fn tilted_phase(state: &CpeState, u: u32, tau: f64, params: &CpmParams) -> f64 {
    let h = params.h();
    let mut acc = u as f64 * params.phase_response(tau);
    for (i, &past) in state.corr.iter().enumerate() {
        acc += past as f64 * params.phase_response(tau + (i + 1) as f64);
    }
    2.0 * PI * h * state.v as f64 + 4.0 * PI * h * acc
}

/// Baseband samples of one symbol interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchWaveform {
    pub start: CpeState,
    pub symbol: u32,
    pub samples: Vec<Complex64>,
}

impl BranchWaveform {
    /// `sum |s_k|^2 * dt`; equals 1 for every waveform.
    pub fn energy(&self) -> f64 {
        let dt = 1.0 / self.samples.len() as f64;
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * dt
    }
}

/// Samples `exp(j psi(t_k)) / sqrt(T)` at the midpoints `t_k = (k + 1/2) T / N_sps`.
pub fn modulate(state: &CpeState, u: u32, params: &CpmParams) -> BranchWaveform {
    let n = params.samples_per_symbol();
    let samples = (0..n)
        .map(|k| {
            let tau = (k as f64 + 0.5) / n as f64;
            Complex64::from_polar(1.0, tilted_phase(state, u, tau, params))
        })
        .collect();
    BranchWaveform {
        start: state.clone(),
        symbol: u,
        samples,
    }
}

/// Phase of the difference signal inside one interval as `a + b*tau`.
/// REC pulses keep every argument of `q` on its linear ramp.
fn difference_phase_line(gamma: i32, omega: u32, hist: &[i32], params: &CpmParams) -> (f64, f64) {
    let h = params.h();
    let l = params.pulse_len() as f64;
    let mut a = 2.0 * PI * h * omega as f64;
    let mut slope = gamma as f64;
    for (i, &g) in hist.iter().enumerate() {
        a += 4.0 * PI * h * g as f64 * (i + 1) as f64 / (2.0 * l);
        slope += g as f64;
    }
    (a, 4.0 * PI * h * slope / (2.0 * l))
}

/// `1 - (1/T) * integral_0^T cos(phi(t)) dt` for one interval of a
/// difference sequence: `gamma` is the current symbol difference, `omega`
/// the difference phase state and `hist` the `L-1` previous differences
/// (most recent first). Closed form for REC pulses.
pub fn interval_nsed_increment(gamma: i32, omega: u32, hist: &[i32], params: &CpmParams) -> f64 {
    debug_assert_eq!(hist.len(), params.pulse_len() - 1);
    let (a, b) = difference_phase_line(gamma, omega, hist, params);
    if b.abs() < 1e-9 {
        // sin(a+b) - sin(a) = b cos(a) - b^2 sin(a)/2 + O(b^3)
        1.0 - (a.cos() - 0.5 * b * a.sin())
    } else {
        1.0 - ((a + b).sin() - a.sin()) / b
    }
}

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Same quantity as [`interval_nsed_increment`] by composite 4-point
/// Gauss-Legendre quadrature over `N_sps` panels, evaluating the phase
/// response directly.
pub fn interval_nsed_increment_quadrature(
    gamma: i32,
    omega: u32,
    hist: &[i32],
    params: &CpmParams,
) -> f64 {
    let h = params.h();
    let panels = params.samples_per_symbol();
    let width = 1.0 / panels as f64;
    let phase = |t: f64| {
        let mut acc = gamma as f64 * params.phase_response(t);
        for (i, &g) in hist.iter().enumerate() {
            acc += g as f64 * params.phase_response(t + (i + 1) as f64);
        }
        2.0 * PI * h * omega as f64 + 4.0 * PI * h * acc
    };
    let mut integral = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
            integral += w * 0.5 * width * phase(mid + 0.5 * width * x).cos();
        }
    }
    1.0 - integral
}

/// Difference phase state together with the recent symbol differences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DifferenceState {
    pub omega: u32,
    /// Previous `L-1` differences, most recent first.
    pub hist: Vec<i32>,
}

impl DifferenceState {
    pub fn zero(params: &CpmParams) -> Self {
        Self {
            omega: 0,
            hist: vec![0; params.pulse_len() - 1],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.omega == 0 && self.hist.iter().all(|&g| g == 0)
    }

    /// Distance increment of the next interval and the state after it.
    pub fn advance(&self, gamma: i32, params: &CpmParams) -> (f64, Self) {
        let inc = interval_nsed_increment(gamma, self.omega, &self.hist, params);
        (inc, self.next(gamma, params))
    }

    pub fn next(&self, gamma: i32, params: &CpmParams) -> Self {
        let p = params.phase_states() as i64;
        let (leaving, hist) = match self.hist.last() {
            None => (gamma, Vec::new()),
            Some(&oldest) => {
                let mut hist = Vec::with_capacity(self.hist.len());
                hist.push(gamma);
                hist.extend_from_slice(&self.hist[..self.hist.len() - 1]);
                (oldest, hist)
            }
        };
        let omega = (self.omega as i64 + leaving as i64).rem_euclid(p) as u32;
        Self { omega, hist }
    }
}

/// Normalised squared Euclidean distance of a difference sequence that
/// starts in the zero difference state:
/// `d^2 = r * log2(M) * sum_i increment_i`.
pub fn event_nsed(gammas: &[i32], rate: f64, params: &CpmParams) -> f64 {
    let mut state = DifferenceState::zero(params);
    let mut total = 0.0;
    for &g in gammas {
        let (inc, next) = state.advance(g, params);
        total += inc;
        state = next;
    }
    rate * (params.alphabet() as f64).log2() * total
}
