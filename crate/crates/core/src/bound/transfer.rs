use serde::Serialize;

use super::events::min_distance;
use super::graph::ProductGraph;
use super::spectrum::{q_function, LengthWeight};
use crate::error::{Error, Result};

const SOLVE_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 200_000;
const POWER_TOL: f64 = 1e-9;
const MAX_POWER_STEPS: usize = 5_000;

/// Transfer-function bound at one SNR together with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferBound {
    pub value: f64,
    /// `(M^{-m}/p) * sum dPsi/d eps` at the evaluation point.
    pub weighted_sum: f64,
    pub d2min: f64,
    pub spectral_radius: f64,
    pub sweeps: usize,
}

struct Weighted {
    /// Transfer nodes reachable from a root, in increasing node order.
    transfer: Vec<usize>,
    /// Position of each node in `transfer`, or `usize::MAX`.
    slot: Vec<usize>,
    weights: Vec<Vec<(usize, f64, f64)>>,
    exit: Vec<(f64, f64)>,
}

fn weigh(graph: &ProductGraph, w: f64, zeta_exp: f64) -> Weighted {
    let n = graph.num_nodes();
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    for &r in graph.roots() {
        for e in graph.edges(r) {
            let to = e.to as usize;
            if !graph.is_merged(to) && !seen[to] {
                seen[to] = true;
                stack.push(to);
            }
        }
    }
    while let Some(x) = stack.pop() {
        for e in graph.edges(x) {
            let to = e.to as usize;
            if !graph.is_merged(to) && !seen[to] {
                seen[to] = true;
                stack.push(to);
            }
        }
    }
    let transfer: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &x) in transfer.iter().enumerate() {
        slot[x] = k;
    }
    let mut weights = Vec::with_capacity(transfer.len());
    let mut exit = Vec::with_capacity(transfer.len());
    for &x in &transfer {
        let mut inner = Vec::new();
        let (mut a, mut b) = (0.0, 0.0);
        for e in graph.edges(x) {
            let wt = e.mult as f64 * w * (-e.d2 * zeta_exp).exp();
            let to = e.to as usize;
            if graph.is_merged(to) {
                a += wt;
                b += e.tau as f64 * wt;
            } else {
                inner.push((slot[to], wt, e.tau as f64));
            }
        }
        weights.push(inner);
        exit.push((a, b));
    }
    Weighted {
        transfer,
        slot,
        weights,
        exit,
    }
}

/// Perron root of the nonnegative transfer matrix by power iteration on
/// `(varpi + I)` with Collatz-Wielandt bracketing.
fn spectral_radius(wt: &Weighted) -> f64 {
    let n = wt.transfer.len();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..MAX_POWER_STEPS {
        lo = f64::INFINITY;
        hi = 0.0;
        for i in 0..n {
            let s: f64 = x[i] + wt.weights[i].iter().map(|&(j, w, _)| w * x[j]).sum::<f64>();
            y[i] = s;
            lo = lo.min(s / x[i]);
            hi = hi.max(s / x[i]);
        }
        if hi - lo < POWER_TOL * hi {
            return 0.5 * (lo + hi) - 1.0;
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        for i in 0..n {
            x[i] = y[i] / norm;
        }
    }
    // not converged: report the side of 1 that the bracket certifies
    if hi < 2.0 {
        hi - 1.0
    } else if lo >= 2.0 {
        lo - 1.0
    } else {
        0.5 * (lo + hi) - 1.0
    }
}

/// Upper bound `Q(sqrt(d2min x)) exp(d2min x / 2) (M^{-m}/p) sum dPsi/d eps`
/// at `x = Eb/N0` (linear), with `eta = W`, `eps = 1`, `zeta = exp(-x/2)`.
pub fn transfer_bound(graph: &ProductGraph, ebn0: f64, convention: LengthWeight) -> Result<TransferBound> {
    if !(ebn0 > 0.0) {
        return Err(Error::InvalidArgument(format!("Eb/N0 {ebn0} must be positive")));
    }
    let d2min = min_distance(graph).ok_or(Error::EmptyTable)?;
    let w = convention.per_step_weight(graph.alphabet());
    let zeta_exp = ebn0 / 2.0;
    let wt = weigh(graph, w, zeta_exp);
    let rho = spectral_radius(&wt);
    if !(rho < 1.0) {
        return Err(Error::Divergent { spectral_radius: rho });
    }
    let n = wt.transfer.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut change: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let (mut na, mut nb) = wt.exit[i];
            for &(j, w, tau) in &wt.weights[i] {
                na += w * a[j];
                nb += w * (tau * a[j] + b[j]);
            }
            change = change.max((na - a[i]).abs()).max((nb - b[i]).abs());
            scale = scale.max(na.abs()).max(nb.abs());
            a[i] = na;
            b[i] = nb;
        }
        if !change.is_finite() {
            return Err(Error::SingularSolve("iteration produced non-finite values".into()));
        }
        if change <= SOLVE_TOL * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::SingularSolve(format!(
                "no convergence after {MAX_SWEEPS} sweeps (residual {change:.3e})"
            )));
        }
    }
    let mut total = 0.0;
    for &r in graph.roots() {
        for e in graph.edges(r) {
            let wt_e = e.mult as f64 * w * (-e.d2 * zeta_exp).exp();
            let to = e.to as usize;
            let tau = e.tau as f64;
            total += if graph.is_merged(to) {
                wt_e * tau
            } else {
                let k = wt.slot[to];
                wt_e * (tau * a[k] + b[k])
            };
        }
    }
    let x = d2min * ebn0;
    let weighted_sum = graph.normalization() * total;
    let value = q_function(x.sqrt()) * (x / 2.0).exp() * weighted_sum;
    Ok(TransferBound {
        value,
        weighted_sum,
        d2min,
        spectral_radius: rho,
        sweeps,
    })
}
