//! Exhaustive search over puncture matrices of a given period and kept count.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{
    build_product_graph, distance_profile, error_spectrum, min_distance, quantize, EnumerationCaps,
    LengthWeight,
};
use crate::cpm::CpmParams;
use crate::error::{Error, Result};
use crate::ring::{GeneratorMatrix, PunctureMatrix};
use crate::trellis::build_trellis;

/// Depth limit for the distance profile of each candidate.
pub const PROFILE_DEPTH: usize = 400;

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub generator: GeneratorMatrix,
    pub params: CpmParams,
    pub period: usize,
    pub kept: usize,
    /// Convention used for the multiplicity tie-breaker.
    pub convention: LengthWeight,
}

/// One cyclic-shift class of puncture matrices with its metrics.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    /// Lexicographically smallest member of the class.
    pub representative: String,
    pub members: Vec<String>,
    pub d2min: f64,
    pub theta_dmin: f64,
    pub n_b: Option<usize>,
    #[serde(skip)]
    matrix: PunctureMatrix,
}

impl Candidate {
    pub fn matrix(&self) -> &PunctureMatrix {
        &self.matrix
    }

    pub fn contains(&self, pm: &PunctureMatrix) -> bool {
        (0..pm.period()).any(|k| pm.shifted(k) == self.matrix)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub generator: String,
    pub period: usize,
    pub kept: usize,
    pub convention: LengthWeight,
    pub candidates: Vec<Candidate>,
    pub elapsed_ms: u128,
}

/// Every `n x p` keep pattern with exactly `kept` ones and no empty column.
pub fn enumerate_matrices(outputs: usize, period: usize, kept: usize) -> Vec<PunctureMatrix> {
    let cells = outputs * period;
    let mut out = Vec::new();
    if kept > cells || cells > 63 {
        return out;
    }
    for mask in 0u64..(1u64 << cells) {
        if mask.count_ones() as usize != kept {
            continue;
        }
        let keep: Vec<Vec<bool>> = (0..outputs)
            .map(|r| (0..period).map(|c| mask >> (r * period + c) & 1 == 1).collect())
            .collect();
        if let Ok(pm) = PunctureMatrix::new(keep, false) {
            out.push(pm);
        }
    }
    out
}

/// Smallest member of each cyclic-shift class.
pub fn shift_classes(matrices: &[PunctureMatrix]) -> Vec<PunctureMatrix> {
    let mut reps = BTreeSet::new();
    for pm in matrices {
        let rep = (0..pm.period()).map(|k| pm.shifted(k)).min().expect("nonzero period");
        reps.insert(rep);
    }
    reps.into_iter().collect()
}

/// Distance, multiplicity and profile length of one puncture matrix.
pub fn evaluate(
    generator: &GeneratorMatrix,
    pm: &PunctureMatrix,
    params: &CpmParams,
    convention: LengthWeight,
) -> Result<(f64, f64, Option<usize>)> {
    let trellis = build_trellis(generator, pm, params)?;
    let graph = build_product_graph(&trellis);
    let d2min = min_distance(&graph).ok_or(Error::EmptyTable)?;
    let caps = EnumerationCaps::around(d2min).with_d_cap(d2min + 1e-6);
    let spectrum = error_spectrum(&graph, caps, convention)?;
    let profile = distance_profile(&graph, d2min, PROFILE_DEPTH)?;
    Ok((d2min, spectrum.theta_dmin, profile.n_b))
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    quantize(b.d2min)
        .cmp(&quantize(a.d2min))
        .then_with(|| a.theta_dmin.total_cmp(&b.theta_dmin))
        .then_with(|| a.n_b.unwrap_or(usize::MAX).cmp(&b.n_b.unwrap_or(usize::MAX)))
        .then_with(|| a.matrix.cmp(&b.matrix))
}

/// Evaluates every shift class and sorts by larger `d_min^2`, then smaller
/// `Theta_dmin`, smaller `N_B`, then matrix order.
pub fn search_puncture(spec: &SearchSpec) -> Result<SearchReport> {
    let start = Instant::now();
    let n = spec.generator.outputs();
    if spec.period == 0 || spec.kept < spec.period || spec.kept > n * spec.period {
        return Err(Error::NoCandidates);
    }
    let classes = shift_classes(&enumerate_matrices(n, spec.period, spec.kept));
    if classes.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut candidates = classes
        .par_iter()
        .map(|pm| {
            let (d2min, theta_dmin, n_b) = evaluate(&spec.generator, pm, &spec.params, spec.convention)?;
            let members: BTreeSet<PunctureMatrix> = (0..pm.period()).map(|k| pm.shifted(k)).collect();
            Ok(Candidate {
                representative: pm.format_octal(),
                members: members.iter().map(|m| m.format_octal()).collect(),
                d2min,
                theta_dmin,
                n_b,
                matrix: pm.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    candidates.sort_by(rank);
    Ok(SearchReport {
        generator: spec.generator.to_string(),
        period: spec.period,
        kept: spec.kept,
        convention: spec.convention,
        candidates,
        elapsed_ms: start.elapsed().as_millis(),
    })
}
