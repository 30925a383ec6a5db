use serde::Serialize;

use super::graph::ProductGraph;
use crate::error::{Error, Result};

/// Tolerance when comparing the running minimum against `d_min^2`.
const REACH_TOL: f64 = 1e-9;

/// Growth of the minimum accumulated distance with observation length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceProfile {
    /// `delta2[k]` is the minimum over pair paths diverging at step 0 after `k + 1` steps.
    pub delta2: Vec<f64>,
    pub d2min: f64,
    /// First step count at which `delta2` reaches `d2min`; `None` if the
    /// depth cap was hit first.
    pub n_b: Option<usize>,
    pub depth_cap: usize,
}

/// Forward minimisation over product states. Paths that merge keep their
/// full distance for every later length.
pub fn distance_profile(graph: &ProductGraph, d2min: f64, depth_cap: usize) -> Result<DistanceProfile> {
    if depth_cap == 0 {
        return Err(Error::InvalidArgument("depth cap must be at least 1".into()));
    }
    let n = graph.num_nodes();
    let mut cost = vec![f64::INFINITY; n];
    let mut merged_best = f64::INFINITY;
    for &r in graph.roots() {
        for e in graph.edges(r) {
            let to = e.to as usize;
            if graph.is_merged(to) {
                merged_best = merged_best.min(e.d2);
            } else {
                cost[to] = cost[to].min(e.d2);
            }
        }
    }
    let mut delta2 = Vec::with_capacity(depth_cap);
    let mut n_b = None;
    let mut next = vec![f64::INFINITY; n];
    for step in 1..=depth_cap {
        let open = cost.iter().copied().fold(f64::INFINITY, f64::min);
        let value = open.min(merged_best);
        delta2.push(value);
        if value >= d2min - REACH_TOL {
            n_b = Some(step);
            break;
        }
        next.fill(f64::INFINITY);
        for (x, &c) in cost.iter().enumerate() {
            if !c.is_finite() {
                continue;
            }
            for e in graph.edges(x) {
                let to = e.to as usize;
                let nd = c + e.d2;
                if graph.is_merged(to) {
                    merged_best = merged_best.min(nd);
                } else if nd < next[to] {
                    next[to] = nd;
                }
            }
        }
        std::mem::swap(&mut cost, &mut next);
    }
    Ok(DistanceProfile {
        delta2,
        d2min,
        n_b,
        depth_cap,
    })
}
