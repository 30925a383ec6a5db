use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::hash::BuildHasherDefault;

use rayon::prelude::*;
use serde::Serialize;

use super::graph::{quantize, ProductGraph};
use crate::error::{Error, Result};

type StableMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// Slack added to the distance ceiling so that events exactly at the cap survive.
const CAP_SLACK: f64 = 1e-9;

/// Key of one event class: start phase, start encoder state `kappa`,
/// length in steps, symbol errors and quantised distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventKey {
    pub phase: usize,
    pub root: usize,
    pub length: usize,
    pub tau: usize,
    pub d2_q: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventClass {
    pub d2: f64,
    pub count: u128,
}

/// All error events within the distance and length ceilings, grouped by class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEventTable {
    pub alphabet: usize,
    pub memory: usize,
    pub period: usize,
    pub d_cap: f64,
    pub length_cap: usize,
    pub entries: BTreeMap<EventKey, EventClass>,
}

impl ErrorEventTable {
    /// Table from explicit `(key, d2, count)` triples, summing duplicates.
    pub fn from_events(
        alphabet: usize,
        memory: usize,
        period: usize,
        events: impl IntoIterator<Item = (EventKey, f64, u128)>,
    ) -> Self {
        let mut entries: BTreeMap<EventKey, EventClass> = BTreeMap::new();
        let mut d_cap: f64 = 0.0;
        let mut length_cap = 0;
        for (key, d2, count) in events {
            d_cap = d_cap.max(d2);
            length_cap = length_cap.max(key.length);
            entries
                .entry(key)
                .and_modify(|c| c.count += count)
                .or_insert(EventClass { d2, count });
        }
        Self {
            alphabet,
            memory,
            period,
            d_cap,
            length_cap,
            entries,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Total number of individual events.
    pub fn event_count(&self) -> u128 {
        self.entries.values().map(|c| c.count).sum()
    }

    /// Smallest distance in the table.
    pub fn min_d2(&self) -> Option<f64> {
        self.entries
            .values()
            .map(|c| c.d2)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Limits applied during enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationCaps {
    pub d_cap: f64,
    pub length_cap: usize,
    /// Largest number of live partial paths (after merging equal classes)
    /// held at once, summed over roots processed together.
    pub entry_limit: usize,
}

impl EnumerationCaps {
    pub const DEFAULT_LENGTH_CAP: usize = 60;
    pub const DEFAULT_ENTRY_LIMIT: usize = 10_000_000;

    /// Default ceilings: `d_min^2 + 10`, length 60, 10^7 entries.
    pub fn around(d2min: f64) -> Self {
        Self {
            d_cap: d2min + 10.0,
            length_cap: Self::DEFAULT_LENGTH_CAP,
            entry_limit: Self::DEFAULT_ENTRY_LIMIT,
        }
    }

    pub fn with_d_cap(self, d_cap: f64) -> Self {
        Self { d_cap, ..self }
    }

    pub fn with_length_cap(self, length_cap: usize) -> Self {
        Self { length_cap, ..self }
    }
}

type Partial = StableMap<(u32, u16, i64), (f64, u128)>;

fn enumerate_from_root(
    graph: &ProductGraph,
    to_go: &[f64],
    root: usize,
    caps: &EnumerationCaps,
) -> Result<Vec<(usize, usize, i64, f64, u128)>> {
    let limit = caps.entry_limit;
    let mut events: StableMap<(usize, usize, i64), (f64, u128)> = StableMap::default();
    let mut layer: Partial = StableMap::default();
    layer.insert((root as u32, 0, 0), (0.0, 1));
    let overflow = || Error::EnumerationLimit { limit };
    for length in 1..=caps.length_cap {
        if layer.is_empty() {
            break;
        }
        let mut next: Partial = StableMap::default();
        let mut keys: Vec<_> = layer.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let (node, tau, _) = key;
            let (d2, count) = layer[&key];
            for edge in graph.edges(node as usize) {
                let nd = d2 + edge.d2;
                if nd + to_go[edge.to as usize] > caps.d_cap + CAP_SLACK {
                    continue;
                }
                let ntau = tau + edge.tau as u16;
                let ncount = count.checked_mul(edge.mult as u128).ok_or_else(overflow)?;
                let q = quantize(nd);
                if graph.is_merged(edge.to as usize) {
                    let slot = events.entry((length, ntau as usize, q)).or_insert((nd, 0));
                    slot.1 = slot.1.checked_add(ncount).ok_or_else(overflow)?;
                } else {
                    let slot = next.entry((edge.to, ntau, q)).or_insert((nd, 0));
                    slot.1 = slot.1.checked_add(ncount).ok_or_else(overflow)?;
                }
            }
        }
        if next.len() > limit {
            return Err(overflow());
        }
        layer = next;
    }
    Ok(events
        .into_iter()
        .map(|((length, tau, q), (d2, count))| (length, tau, q, d2, count))
        .collect())
}

/// Enumerates every error event with `d2 <= d_cap` and length `<= length_cap`
/// from every (phase, encoder state) root. An event ends at the first
/// merged node it reaches.
pub fn enumerate_error_events(graph: &ProductGraph, caps: EnumerationCaps) -> Result<ErrorEventTable> {
    if !(caps.d_cap > 0.0) || caps.length_cap == 0 {
        return Err(Error::InvalidArgument(
            "enumeration needs d_cap > 0 and length_cap >= 1".into(),
        ));
    }
    let per_phase = graph.roots().len() / graph.period();
    let to_go = distance_to_merge(graph);
    let per_root: Vec<_> = graph
        .roots()
        .par_iter()
        .enumerate()
        .map(|(i, &root)| enumerate_from_root(graph, &to_go, root, &caps).map(|ev| (i, ev)))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = BTreeMap::new();
    for (i, events) in per_root {
        for (length, tau, q, d2, count) in events {
            let key = EventKey {
                phase: i / per_phase,
                root: i % per_phase,
                length,
                tau,
                d2_q: q,
            };
            entries.insert(key, EventClass { d2, count });
        }
    }
    Ok(ErrorEventTable {
        alphabet: graph.alphabet(),
        memory: graph.memory(),
        period: graph.period(),
        d_cap: caps.d_cap,
        length_cap: caps.length_cap,
        entries,
    })
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Minimum event distance by Dijkstra over the product graph from all
/// roots at once. Returns `None` when no event exists.
pub fn min_distance(graph: &ProductGraph) -> Option<f64> {
    let n = graph.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    let mut best = f64::INFINITY;
    for &root in graph.roots() {
        for e in graph.edges(root) {
            let to = e.to as usize;
            if graph.is_merged(to) {
                best = best.min(e.d2);
            } else if e.d2 < dist[to] {
                dist[to] = e.d2;
                heap.push(HeapItem(e.d2, to));
            }
        }
    }
    while let Some(HeapItem(d, node)) = heap.pop() {
        if d > dist[node] || d >= best {
            continue;
        }
        for e in graph.edges(node) {
            let to = e.to as usize;
            let nd = d + e.d2;
            if graph.is_merged(to) {
                best = best.min(nd);
            } else if nd < dist[to] {
                dist[to] = nd;
                heap.push(HeapItem(nd, to));
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Smallest distance still needed from each node to reach a merged node
/// (zero on merged nodes), by Dijkstra on the reversed graph.
pub fn distance_to_merge(graph: &ProductGraph) -> Vec<f64> {
    let n = graph.num_nodes();
    let mut reverse: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for x in 0..n {
        if graph.is_merged(x) {
            continue;
        }
        for e in graph.edges(x) {
            reverse[e.to as usize].push((x, e.d2));
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for (x, d) in dist.iter_mut().enumerate() {
        if graph.is_merged(x) {
            *d = 0.0;
            heap.push(HeapItem(0.0, x));
        }
    }
    while let Some(HeapItem(d, node)) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(from, w) in &reverse[node] {
            let nd = d + w;
            if nd < dist[from] {
                dist[from] = nd;
                heap.push(HeapItem(nd, from));
            }
        }
    }
    dist
}
