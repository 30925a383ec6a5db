use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use super::events::{distance_to_merge, EnumerationCaps, ErrorEventTable};
use super::graph::{quantize, ProductGraph};
use crate::error::{Error, Result};

/// Slack added to the distance ceiling so that events exactly at the cap survive.
const CAP_SLACK: f64 = 1e-9;

/// Per-step weight `W` applied to an event of length `iota` as `W^iota`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthWeight {
    /// `W = M^{-1}`: probability of one uniform input symbol per step.
    PerStep,
    /// `W = M^{-nu}` with `nu = log2 M`.
    PaperTheorem,
}

impl LengthWeight {
    pub fn per_step_weight(self, alphabet: usize) -> f64 {
        let m = alphabet as f64;
        match self {
            LengthWeight::PerStep => 1.0 / m,
            LengthWeight::PaperTheorem => m.powf(-m.log2()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LengthWeight::PerStep => "per-step",
            LengthWeight::PaperTheorem => "paper-theorem",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumTerm {
    pub d2: f64,
    pub theta: f64,
}

/// Averaged multiplicities `Theta_d` by distance, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSpectrum {
    pub convention: LengthWeight,
    pub d2min: f64,
    pub theta_dmin: f64,
    pub terms: Vec<SpectrumTerm>,
}

/// `Theta_d = (M^{-m} / p) * sum over (j, kappa, iota, tau) of count * tau * W^iota`.
/// All events at the quantised minimum distance contribute to `theta_dmin`.
pub fn dmin_and_theta(table: &ErrorEventTable, convention: LengthWeight) -> Result<DistanceSpectrum> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let w = convention.per_step_weight(table.alphabet);
    let norm = (table.alphabet as f64).powi(-(table.memory as i32)) / table.period as f64;
    let mut by_d: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (key, class) in &table.entries {
        let weight = class.count as f64 * key.tau as f64 * w.powi(key.length as i32) * norm;
        let slot = by_d.entry(key.d2_q).or_insert((class.d2, 0.0));
        slot.1 += weight;
    }
    let terms: Vec<SpectrumTerm> = by_d
        .into_values()
        .map(|(d2, theta)| SpectrumTerm { d2, theta })
        .collect();
    let first = terms[0];
    Ok(DistanceSpectrum {
        convention,
        d2min: first.d2,
        theta_dmin: first.theta,
        terms,
    })
}

/// Same spectrum as [`dmin_and_theta`] applied to [`enumerate_error_events`](super::enumerate_error_events),
/// computed without materialising the table: all roots share one forward
/// pass keyed by (node, quantised distance), carrying the path count and
/// the symbol-error-weighted path count.
pub fn error_spectrum(
    graph: &ProductGraph,
    caps: EnumerationCaps,
    convention: LengthWeight,
) -> Result<DistanceSpectrum> {
    if !(caps.d_cap > 0.0) || caps.length_cap == 0 {
        return Err(Error::InvalidArgument(
            "enumeration needs d_cap > 0 and length_cap >= 1".into(),
        ));
    }
    type Layer = HashMap<(u32, i64), (f64, f64, f64), BuildHasherDefault<DefaultHasher>>;
    let to_go = distance_to_merge(graph);
    let w = convention.per_step_weight(graph.alphabet());
    let norm = graph.normalization();
    let mut by_d: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let mut layer = Layer::default();
    for &r in graph.roots() {
        layer.insert((r as u32, 0), (0.0, 1.0, 0.0));
    }
    let mut length_weight = 1.0;
    for _ in 1..=caps.length_cap {
        if layer.is_empty() {
            break;
        }
        length_weight *= w;
        let mut keys: Vec<_> = layer.keys().copied().collect();
        keys.sort_unstable();
        let mut next = Layer::default();
        for key in keys {
            let (d2, count, tau_count) = layer[&key];
            for e in graph.edges(key.0 as usize) {
                let nd = d2 + e.d2;
                let to = e.to as usize;
                if nd + to_go[to] > caps.d_cap + CAP_SLACK {
                    continue;
                }
                let mult = e.mult as f64;
                let nc = mult * count;
                let nt = mult * (tau_count + e.tau as f64 * count);
                let q = quantize(nd);
                if graph.is_merged(to) {
                    let slot = by_d.entry(q).or_insert((nd, 0.0));
                    slot.1 += norm * length_weight * nt;
                } else {
                    let slot = next.entry((to as u32, q)).or_insert((nd, 0.0, 0.0));
                    slot.1 += nc;
                    slot.2 += nt;
                }
            }
        }
        if next.len() > caps.entry_limit {
            return Err(Error::EnumerationLimit {
                limit: caps.entry_limit,
            });
        }
        layer = next;
    }
    let terms: Vec<SpectrumTerm> = by_d
        .into_values()
        .map(|(d2, theta)| SpectrumTerm { d2, theta })
        .collect();
    let first = *terms.first().ok_or(Error::EmptyTable)?;
    Ok(DistanceSpectrum {
        convention,
        d2min: first.d2,
        theta_dmin: first.theta,
        terms,
    })
}

/// Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `sum_d Theta_d * Q(sqrt(d2 * Eb/N0))` with `ebn0` linear.
pub fn series_bound(spectrum: &DistanceSpectrum, ebn0: f64) -> f64 {
    spectrum
        .terms
        .iter()
        .map(|t| t.theta * q_function((t.d2 * ebn0).sqrt()))
        .sum()
}
