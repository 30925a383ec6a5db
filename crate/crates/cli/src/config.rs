//! Experiment description shared by every subcommand.

use prcc::bound::{EnumerationCaps, LengthWeight};
use prcc::cpm::{CpmParams, Pulse};
use prcc::decode::Termination;
use prcc::ring::{parse_generator, parse_puncture_octal, GeneratorMatrix, PunctureMatrix};
use prcc::search::PROFILE_DEPTH;
use prcc::sim::{BoundSettings, DecoderKind, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub code: CodeSection,
    pub puncture: Option<PunctureSection>,
    #[serde(default)]
    pub cpm: CpmSection,
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub bound: BoundSection,
    pub search: Option<SearchSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub generator: String,
    pub modulus: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PunctureSection {
    pub octal: String,
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseName {
    Rec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpmSection {
    /// Modulation index as `"K/P"`; defaults to `1/M`.
    pub h: Option<String>,
    #[serde(rename = "L", default = "one")]
    pub pulse_len: usize,
    #[serde(default = "rec")]
    pub pulse: PulseName,
    #[serde(rename = "N_sps", default = "eight")]
    pub samples_per_symbol: usize,
}

impl Default for CpmSection {
    fn default() -> Self {
        Self {
            h: None,
            pulse_len: 1,
            pulse: PulseName::Rec,
            samples_per_symbol: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationName {
    ZeroTail,
    Truncated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub grid: Vec<f64>,
    pub blocks: usize,
    pub block_len: usize,
    pub seed: u64,
    pub decoder: DecoderKind,
    #[serde(default = "min_errors")]
    pub min_errors: u64,
    #[serde(default = "zero_tail")]
    pub termination: TerminationName,
    /// Traceback depth for truncated decoding.
    pub depth: Option<usize>,
    #[serde(default = "eight")]
    pub batch: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    /// Absolute ceiling on `d^2`; defaults to `d_min^2 + 10`.
    pub d_cap: Option<f64>,
    #[serde(default = "iota_cap")]
    pub iota_cap: usize,
    #[serde(default = "per_step")]
    pub convention: LengthWeight,
    /// Eb/N0 points for `bound`; falls back to the sim grid.
    pub grid: Option<Vec<f64>>,
    #[serde(default = "profile_depth")]
    pub profile_depth: usize,
}

impl Default for BoundSection {
    fn default() -> Self {
        Self {
            d_cap: None,
            iota_cap: iota_cap(),
            convention: LengthWeight::PerStep,
            grid: None,
            profile_depth: PROFILE_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub period: usize,
    pub kept: usize,
}

fn one() -> usize {
    1
}
fn eight() -> usize {
    8
}
fn rec() -> PulseName {
    PulseName::Rec
}
fn min_errors() -> u64 {
    500
}
fn zero_tail() -> TerminationName {
    TerminationName::ZeroTail
}
fn iota_cap() -> usize {
    EnumerationCaps::DEFAULT_LENGTH_CAP
}
fn per_step() -> LengthWeight {
    LengthWeight::PerStep
}
fn profile_depth() -> usize {
    PROFILE_DEPTH
}

fn parse_fraction(text: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Config(format!("modulation index `{text}` must look like K/P"));
    let (k, p) = text.split_once('/').ok_or_else(bad)?;
    let k = k.trim().parse().map_err(|_| bad())?;
    let p = p.trim().parse().map_err(|_| bad())?;
    Ok((k, p))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn generator(&self) -> Result<GeneratorMatrix, CliError> {
        Ok(parse_generator(&self.code.generator, self.code.modulus)?)
    }

    pub fn puncture(&self) -> Result<PunctureMatrix, CliError> {
        let n = self.generator()?.outputs();
        Ok(match &self.puncture {
            Some(p) => parse_puncture_octal(&p.octal, n, p.period)?,
            None => PunctureMatrix::unpunctured(n),
        })
    }

    pub fn cpm(&self) -> Result<CpmParams, CliError> {
        let m = self.code.modulus;
        let (k, p) = match &self.cpm.h {
            Some(h) => parse_fraction(h)?,
            None => (1, m),
        };
        let pulse = match self.cpm.pulse {
            PulseName::Rec => Pulse::Rec,
        };
        Ok(CpmParams::new(m, k, p, self.cpm.pulse_len, pulse, self.cpm.samples_per_symbol)?)
    }

    pub fn bound_settings(&self) -> BoundSettings {
        BoundSettings {
            d_cap: self.bound.d_cap,
            length_cap: self.bound.iota_cap,
            convention: self.bound.convention,
        }
    }

    pub fn sim_section(&self) -> Result<&SimSection, CliError> {
        self.sim
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sim] section".into()))
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = self.sim_section()?;
        let termination = match (s.termination, s.depth) {
            (TerminationName::ZeroTail, _) => Termination::ZeroTail,
            (TerminationName::Truncated, Some(depth)) => Termination::Truncated { depth },
            (TerminationName::Truncated, None) => {
                let trellis = prcc::trellis::build_trellis(&self.generator()?, &self.puncture()?, &self.cpm()?)?;
                Termination::truncated_default(&trellis)
            }
        };
        Ok(SimConfig {
            generator: self.generator()?,
            puncture: self.puncture()?,
            params: self.cpm()?,
            ebn0_db: s.grid.clone(),
            block_len: s.block_len,
            max_blocks: s.blocks,
            min_errors: s.min_errors,
            decoder: s.decoder,
            termination,
            seed: s.seed,
            batch: s.batch,
            bound: Some(self.bound_settings()),
        })
    }

    /// Grid for the `bound` command.
    pub fn bound_grid(&self) -> Result<Vec<f64>, CliError> {
        self.bound
            .grid
            .clone()
            .or_else(|| self.sim.as_ref().map(|s| s.grid.clone()))
            .ok_or_else(|| CliError::Config("no Eb/N0 grid in [bound] or [sim]".into()))
    }
}
