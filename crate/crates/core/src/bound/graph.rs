use std::collections::BTreeMap;

use crate::cpm::{CpmParams, DifferenceState};
use crate::trellis::JointTrellis;

/// Scale of the integer grid used to key distances.
pub const D2_QUANTUM: f64 = 1e6;

pub fn quantize(d2: f64) -> i64 {
    (d2 * D2_QUANTUM).round() as i64
}

/// Reduced product state of the true and hypothesised encoder paths.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub phase: usize,
    pub cc: usize,
    pub cc_hat: usize,
    pub diff: DifferenceState,
}

impl ProductState {
    /// Initial/end classification: both encoder states agree and the
    /// difference phase and history are zero.
    pub fn is_merged(&self) -> bool {
        self.cc == self.cc_hat && self.diff.is_zero()
    }
}

/// Merged parallel transitions with equal target, symbol-error count and distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductEdge {
    pub to: u32,
    /// Symbol-error indicator `[u != u_hat]`.
    pub tau: u8,
    /// NSED increment over the kept intervals of the step.
    pub d2: f64,
    /// Multiplicity `b` of the merged parallel edges.
    pub mult: u32,
}

/// Period-expanded reduced product graph.
#[derive(Debug, Clone)]
pub struct ProductGraph {
    alphabet: usize,
    memory: usize,
    period: usize,
    nodes_per_phase: usize,
    merged: Vec<bool>,
    roots: Vec<usize>,
    offsets: Vec<usize>,
    edges: Vec<ProductEdge>,
    labels: Option<Vec<ProductState>>,
}

impl ProductGraph {
    /// Assembles a graph from explicit adjacency lists. `roots` must be
    /// merged nodes; the averaging weight is `M^{-m} / p`.
    pub fn from_parts(
        alphabet: usize,
        memory: usize,
        period: usize,
        merged: Vec<bool>,
        roots: Vec<usize>,
        adjacency: Vec<Vec<ProductEdge>>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for list in adjacency {
            edges.extend(list);
            offsets.push(edges.len());
        }
        let nodes_per_phase = merged.len() / period.max(1);
        Self {
            alphabet,
            memory,
            period,
            nodes_per_phase,
            merged,
            roots,
            offsets,
            edges,
            labels: None,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn num_nodes(&self) -> usize {
        self.merged.len()
    }

    pub fn nodes_per_phase(&self) -> usize {
        self.nodes_per_phase
    }

    pub fn is_merged(&self, node: usize) -> bool {
        self.merged[node]
    }

    /// Event start nodes, one per (phase, encoder state), phase-major.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn edges(&self, node: usize) -> &[ProductEdge] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, node: usize) -> Option<&ProductState> {
        self.labels.as_ref().map(|l| &l[node])
    }

    /// Averaging factor `M^{-m} / p`.
    pub fn normalization(&self) -> f64 {
        (self.alphabet as f64).powi(-(self.memory as i32)) / self.period as f64
    }

    /// Merged node of the given phase whose encoder states both equal `cc`.
    pub fn root(&self, phase: usize, cc: usize) -> usize {
        let per_phase = self.alphabet.pow(self.memory as u32);
        self.roots[phase * per_phase + cc]
    }
}

fn hist_index(hist: &[i32], radix: usize, offset: i32) -> usize {
    hist.iter()
        .rev()
        .fold(0usize, |acc, &g| acc * radix + (g + offset) as usize)
}

fn hist_from_index(mut index: usize, len: usize, radix: usize, offset: i32) -> Vec<i32> {
    (0..len)
        .map(|_| {
            let g = (index % radix) as i32 - offset;
            index /= radix;
            g
        })
        .collect()
}

/// Builds the reduced product graph of a joint trellis. Nodes are
/// `(phase, cc, cc_hat, omega, difference history)`; the history has
/// `L-1` entries in `-(M-1)..=M-1`. Every edge is one trellis step and
/// kept outputs enter the difference CPE in row order. Transitions out of
/// merged nodes with `u == u_hat` are omitted.
pub fn build_product_graph(trellis: &JointTrellis) -> ProductGraph {
    let params: &CpmParams = trellis.params();
    let g = trellis.generator();
    let m = trellis.alphabet();
    let n_cc = g.num_states();
    let p_phase = params.phase_states() as usize;
    let hist_len = params.pulse_len() - 1;
    let radix = 2 * m - 1;
    let offset = m as i32 - 1;
    let n_hist = radix.pow(hist_len as u32);
    let n_diff = p_phase * n_hist;
    let per_phase = n_cc * n_cc * n_diff;
    let period = trellis.period();
    let rate = trellis.rate();
    let bits = (m as f64).log2();

    let index = |phase: usize, cc: usize, cc_hat: usize, d: &DifferenceState| -> usize {
        let diff = d.omega as usize + p_phase * hist_index(&d.hist, radix, offset);
        phase * per_phase + (cc * n_cc + cc_hat) * n_diff + diff
    };

    let outputs: Vec<Vec<(Vec<u32>, usize)>> = (0..n_cc)
        .map(|cc| (0..m as u32).map(|u| g.step(cc, u)).collect())
        .collect();

    let total = per_phase * period;
    let mut labels = Vec::with_capacity(total);
    let mut merged = Vec::with_capacity(total);
    let mut adjacency = Vec::with_capacity(total);
    for phase in 0..period {
        let rows = trellis.puncture().kept_rows(phase);
        let next_phase = (phase + 1) % period;
        for cc in 0..n_cc {
            for cc_hat in 0..n_cc {
                for diff in 0..n_diff {
                    let d = DifferenceState {
                        omega: (diff % p_phase) as u32,
                        hist: hist_from_index(diff / p_phase, hist_len, radix, offset),
                    };
                    let node = ProductState {
                        phase,
                        cc,
                        cc_hat,
                        diff: d,
                    };
                    let is_merged = node.is_merged();
                    let mut grouped: BTreeMap<(usize, u8, i64), (f64, u32)> = BTreeMap::new();
                    for u in 0..m {
                        for u_hat in 0..m {
                            if is_merged && u == u_hat {
                                continue;
                            }
                            let (out, next) = &outputs[cc][u];
                            let (out_hat, next_hat) = &outputs[cc_hat][u_hat];
                            let mut state = node.diff.clone();
                            let mut inc = 0.0;
                            for &row in &rows {
                                let gamma = out[row] as i32 - out_hat[row] as i32;
                                let (step, after) = state.advance(gamma, params);
                                inc += step;
                                state = after;
                            }
                            let d2 = rate * bits * inc;
                            let to = index(next_phase, *next, *next_hat, &state);
                            let tau = u8::from(u != u_hat);
                            let entry = grouped.entry((to, tau, quantize(d2))).or_insert((d2, 0));
                            entry.1 += 1;
                        }
                    }
                    adjacency.push(
                        grouped
                            .into_iter()
                            .map(|((to, tau, _), (d2, mult))| ProductEdge {
                                to: to as u32,
                                tau,
                                d2,
                                mult,
                            })
                            .collect::<Vec<_>>(),
                    );
                    merged.push(is_merged);
                    labels.push(node);
                }
            }
        }
    }
    let roots = (0..period)
        .flat_map(|phase| {
            (0..n_cc).map(move |cc| (phase, cc))
        })
        .map(|(phase, cc)| index(phase, cc, cc, &DifferenceState::zero(params)))
        .collect();
    let mut graph = ProductGraph::from_parts(m, g.memory(), period, merged, roots, adjacency);
    graph.labels = Some(labels);
    graph
}
