//! AWGN channel, E_b/N_0 calibration and Monte Carlo SER estimation.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{
    build_product_graph, error_spectrum, min_distance, series_bound, transfer_bound, EnumerationCaps,
    LengthWeight,
};
use crate::cpm::CpmParams;
use crate::decode::{
    bcjr_app, branch_metrics, hard_decision, viterbi_mlsd, zero_tail_priors, Termination,
};
use crate::error::{Error, Result};
use crate::ring::{GeneratorMatrix, PunctureMatrix};
use crate::trellis::{build_trellis, JointTrellis};

/// Adds complex white Gaussian noise with per-component variance
/// `N0 / (2 dt)`. `n0 == 0` returns the input unchanged.
pub fn awgn<R: Rng + ?Sized>(samples: &[Complex64], n0: f64, dt: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(n0 >= 0.0 && n0.is_finite()) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise density {n0} and spacing {dt} must be nonnegative and positive"
        )));
    }
    if n0 == 0.0 {
        return Ok(samples.to_vec());
    }
    let normal = Normal::new(0.0, (n0 / (2.0 * dt)).sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(samples
        .iter()
        .map(|s| s + Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect())
}

/// `N0` for unit energy per channel symbol: `E_b = 1 / (r log2 M)`.
pub fn calibrate(ebn0_db: f64, rate: f64, alphabet: usize) -> f64 {
    let eb = 1.0 / (rate * (alphabet as f64).log2());
    eb / 10f64.powf(ebn0_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Mlsd,
    App,
}

/// Ceilings for the analytical bounds printed next to each grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSettings {
    /// Absolute distance ceiling; `None` means `d_min^2 + 10`.
    pub d_cap: Option<f64>,
    pub length_cap: usize,
    pub convention: LengthWeight,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            d_cap: None,
            length_cap: EnumerationCaps::DEFAULT_LENGTH_CAP,
            convention: LengthWeight::PerStep,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub generator: GeneratorMatrix,
    pub puncture: PunctureMatrix,
    pub params: CpmParams,
    pub ebn0_db: Vec<f64>,
    /// Information symbols per block, excluding any tail.
    pub block_len: usize,
    pub max_blocks: usize,
    /// A point stops early once this many symbol errors are counted.
    pub min_errors: u64,
    pub decoder: DecoderKind,
    /// `ZeroTail` appends `m` zero inputs; `Truncated` sends none.
    pub termination: Termination,
    pub seed: u64,
    /// Blocks simulated between stop-rule checks.
    pub batch: usize,
    pub bound: Option<BoundSettings>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_len == 0 {
            return Err(Error::InvalidArgument("block length must be at least 1".into()));
        }
        if self.ebn0_db.is_empty() || self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("Eb/N0 grid must be nonempty and finite".into()));
        }
        if self.max_blocks == 0 || self.batch == 0 {
            return Err(Error::InvalidArgument("block budget and batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPoint {
    pub ebn0_db: f64,
    pub symbols: u64,
    pub errors: u64,
    pub ser: f64,
    /// Normal-approximation 95% half-width.
    pub ci95: f64,
    pub blocks: usize,
    pub bound_series: Option<f64>,
    pub bound_transfer: Option<f64>,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub d2min: Option<f64>,
    pub points: Vec<SimPoint>,
}

#[derive(Serialize)]
struct CsvRow {
    ebn0_db: f64,
    symbols: u64,
    errors: u64,
    ser: f64,
    ci95: f64,
    bound_series: Option<f64>,
    bound_transfer: Option<f64>,
}

impl SimResult {
    /// CSV with columns `ebn0_db, symbols, errors, ser, ci95, bound_series,
    /// bound_transfer`. Missing bounds are empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            writer
                .serialize(CsvRow {
                    ebn0_db: p.ebn0_db,
                    symbols: p.symbols,
                    errors: p.errors,
                    ser: p.ser,
                    ci95: p.ci95,
                    bound_series: p.bound_series,
                    bound_transfer: p.bound_transfer,
                })
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf8"))
    }
}

/// Generator for block `block` of grid point `point`.
pub fn block_rng(seed: u64, point: usize, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | block as u64);
    rng
}

/// Symbol errors in one block: uniform message, transmission, noise and
/// decoding. Tail symbols are not counted.
pub fn simulate_block(
    trellis: &JointTrellis,
    config: &SimConfig,
    n0: f64,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    let m = trellis.alphabet() as u32;
    let tail = match config.termination {
        Termination::ZeroTail => trellis.memory(),
        Termination::Truncated { .. } => 0,
    };
    let mut input: Vec<u32> = (0..config.block_len).map(|_| rng.random_range(0..m)).collect();
    input.extend(std::iter::repeat_n(0, tail));
    let (_, waves, _) = trellis.transmit(&input)?;
    let clean = trellis.synthesize(&waves);
    let received = awgn(&clean, n0, trellis.params().sample_spacing(), rng)?;
    let metrics = branch_metrics(&received, trellis)?;
    let decoded = match config.decoder {
        DecoderKind::Mlsd => viterbi_mlsd(trellis, &metrics, config.termination)?.symbols,
        DecoderKind::App => {
            let priors = zero_tail_priors(config.block_len, tail, m as usize);
            hard_decision(&bcjr_app(trellis, &metrics, &priors, n0, config.termination)?)
        }
    };
    Ok(input[..config.block_len]
        .iter()
        .zip(&decoded)
        .filter(|(a, b)| a != b)
        .count() as u64)
}

/// Runs every grid point. Counts depend only on the configuration and
/// seed, not on the number of worker threads.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let trellis = build_trellis(&config.generator, &config.puncture, &config.params)?;
    let graph = config.bound.map(|_| build_product_graph(&trellis));
    let d2min = graph.as_ref().and_then(min_distance);
    let spectrum = match (config.bound, &graph, d2min) {
        (Some(b), Some(g), Some(d)) => {
            let caps = EnumerationCaps::around(d)
                .with_d_cap(b.d_cap.unwrap_or(d + 10.0))
                .with_length_cap(b.length_cap);
            Some(error_spectrum(g, caps, b.convention)?)
        }
        _ => None,
    };
    let rate = trellis.rate();
    let mut points = Vec::with_capacity(config.ebn0_db.len());
    for (pi, &db) in config.ebn0_db.iter().enumerate() {
        let start = Instant::now();
        let n0 = calibrate(db, rate, trellis.alphabet());
        let mut errors = 0u64;
        let mut blocks = 0usize;
        while blocks < config.max_blocks && errors < config.min_errors {
            let end = (blocks + config.batch).min(config.max_blocks);
            let counts = (blocks..end)
                .into_par_iter()
                .map(|b| simulate_block(&trellis, config, n0, &mut block_rng(config.seed, pi, b)))
                .collect::<Result<Vec<_>>>()?;
            errors += counts.iter().sum::<u64>();
            blocks = end;
        }
        let symbols = (blocks * config.block_len) as u64;
        let ser = errors as f64 / symbols as f64;
        let ebn0 = 10f64.powf(db / 10.0);
        let bound_series = spectrum.as_ref().map(|s| series_bound(s, ebn0));
        let bound_transfer = match (config.bound, &graph) {
            (Some(b), Some(g)) => transfer_bound(g, ebn0, b.convention).ok().map(|t| t.value),
            _ => None,
        };
        points.push(SimPoint {
            ebn0_db: db,
            symbols,
            errors,
            ser,
            ci95: 1.96 * (ser * (1.0 - ser) / symbols as f64).sqrt(),
            blocks,
            bound_series,
            bound_transfer,
            wall_ms: start.elapsed().as_millis(),
        });
    }
    Ok(SimResult { d2min, points })
}
