use std::collections::BTreeMap;

use super::*;
use crate::cpm::CpmParams;
use crate::error::Error;
use crate::ring::{parse_generator, parse_puncture_octal, PunctureMatrix};
use crate::trellis::{build_trellis, JointTrellis};

const CODE1: &str = "[1+D+D^2; 1+D^2]";

fn trellis_with(g: &str, pm: Option<(&str, usize)>, sps: usize) -> JointTrellis {
    let g = parse_generator(g, 4).unwrap();
    let pm = match pm {
        Some((t, p)) => parse_puncture_octal(t, g.outputs(), p).unwrap(),
        None => PunctureMatrix::unpunctured(g.outputs()),
    };
    build_trellis(&g, &pm, &CpmParams::rec1(4, sps).unwrap()).unwrap()
}

fn graph(g: &str, pm: Option<(&str, usize)>) -> ProductGraph {
    build_product_graph(&trellis_with(g, pm, 8))
}

/// Events of length <= `max_len` found by walking all input pairs on the
/// joint trellis, with distances from sampled waveforms. Keyed by
/// `(kappa, length, tau)`, values are expanded distance lists.
fn pair_path_events(
    t: &JointTrellis,
    start_phase: u32,
    max_len: usize,
) -> BTreeMap<(usize, usize, usize), Vec<f64>> {
    let m = t.alphabet();
    let dt = 1.0 / t.bank().samples_per_symbol() as f64;
    let scale = t.rate() * (m as f64).log2() / 2.0;
    let bank = t.bank();
    let wave_dist = |a: &[u32], b: &[u32]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                bank.waveform(x as usize)
                    .iter()
                    .zip(bank.waveform(y as usize))
                    .map(|(p, q)| (p - q).norm_sqr() * dt)
                    .sum::<f64>()
            })
            .sum()
    };
    let n_cc = t.generator().num_states();
    let mut out: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for kappa in 0..n_cc {
        let s0 = t.join(crate::trellis::JointState {
            cc: kappa,
            cpe: start_phase as usize,
        });
        // (state, state_hat, step, tau, d2)
        let mut stack = vec![(s0, s0, 0usize, 0usize, 0.0f64)];
        while let Some((s, sh, step, tau, d2)) = stack.pop() {
            if step == max_len {
                continue;
            }
            let section = t.section_schedule(step);
            for u in 0..m {
                for uh in 0..m {
                    if step == 0 && u == uh {
                        continue;
                    }
                    let b = s * m + u;
                    let bh = sh * m + uh;
                    let nd = d2 + scale * wave_dist(section.waveform_ids(b), section.waveform_ids(bh));
                    let ntau = tau + usize::from(u != uh);
                    let (ns, nsh) = (section.next(b), section.next(bh));
                    let (a, ah) = (t.split(ns), t.split(nsh));
                    if a.cc == ah.cc && a.cpe == ah.cpe {
                        out.entry((kappa, step + 1, ntau)).or_default().push(nd);
                    } else {
                        stack.push((ns, nsh, step + 1, ntau, nd));
                    }
                }
            }
        }
    }
    for v in out.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    out
}

fn table_events(table: &ErrorEventTable) -> BTreeMap<(usize, usize, usize), Vec<f64>> {
    let mut out: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for (k, c) in &table.entries {
        let list = out.entry((k.root, k.length, k.tau)).or_default();
        list.extend(std::iter::repeat_n(c.d2, c.count as usize));
    }
    for v in out.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    out
}

fn assert_same_events(
    a: &BTreeMap<(usize, usize, usize), Vec<f64>>,
    b: &BTreeMap<(usize, usize, usize), Vec<f64>>,
    tol: f64,
) {
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, da) in a {
        let db = &b[k];
        assert_eq!(da.len(), db.len(), "count mismatch at {k:?}");
        for (x, y) in da.iter().zip(db) {
            assert!((x - y).abs() < tol, "{k:?}: {x} vs {y}");
        }
    }
}

#[test]
fn table_matches_pair_path_oracle() {
    let gr = graph("[1; D]", None);
    let caps = EnumerationCaps {
        d_cap: 100.0,
        length_cap: 4,
        entry_limit: 1_000_000,
    };
    let table = enumerate_error_events(&gr, caps).unwrap();
    let oracle = pair_path_events(&trellis_with("[1; D]", None, 8192), 0, 4);
    assert_same_events(&table_events(&table), &oracle, 1e-6);
}

#[test]
fn reduction_matches_unreduced_pairs() {
    let t = trellis_with("[1; D]", None, 8192);
    let base = pair_path_events(&t, 0, 4);
    for v in 1..4 {
        assert_same_events(&pair_path_events(&t, v, 4), &base, 1e-9);
    }
}

#[test]
fn punctured_table_matches_pair_path_oracle() {
    let spec = Some(("6,5", 3));
    let gr = graph(CODE1, spec);
    let caps = EnumerationCaps {
        d_cap: 100.0,
        length_cap: 3,
        entry_limit: 1_000_000,
    };
    let table = enumerate_error_events(&gr, caps).unwrap();
    let phase0: ErrorEventTable = ErrorEventTable {
        entries: table
            .entries
            .iter()
            .filter(|(k, _)| k.phase == 0)
            .map(|(k, c)| (*k, *c))
            .collect(),
        ..table.clone()
    };
    let oracle = pair_path_events(&trellis_with(CODE1, spec, 8192), 0, 3);
    assert_same_events(&table_events(&phase0), &oracle, 1e-6);
}

#[test]
fn code1_minimum_distance() {
    let gr = graph(CODE1, None);
    let d = min_distance(&gr).unwrap();
    assert!((d - 5.39).abs() < 0.01, "d2min = {d}");
    let table = enumerate_error_events(&gr, EnumerationCaps::around(d).with_d_cap(d + 0.5)).unwrap();
    assert!((table.min_d2().unwrap() - d).abs() < 1e-9);
    let smallest = table.entries.values().map(|c| c.d2).fold(f64::INFINITY, f64::min);
    assert!(smallest > 0.0);
}

#[test]
fn period_expansion_is_transparent() {
    let one = graph(CODE1, None);
    let two = graph(CODE1, Some(("3,3", 2)));
    let caps = EnumerationCaps {
        d_cap: 7.0,
        length_cap: 20,
        entry_limit: 10_000_000,
    };
    for conv in [LengthWeight::PerStep, LengthWeight::PaperTheorem] {
        let a = dmin_and_theta(&enumerate_error_events(&one, caps).unwrap(), conv).unwrap();
        let b = dmin_and_theta(&enumerate_error_events(&two, caps).unwrap(), conv).unwrap();
        assert_eq!(a.terms.len(), b.terms.len());
        for (x, y) in a.terms.iter().zip(&b.terms) {
            assert!((x.d2 - y.d2).abs() < 1e-9);
            assert!((x.theta - y.theta).abs() < 1e-12 * x.theta.max(1.0));
        }
    }
}

#[test]
fn single_edge_transfer() {
    let a = 2.0;
    let edge = ProductEdge {
        to: 1,
        tau: 1,
        d2: a,
        mult: 1,
    };
    let gr = ProductGraph::from_parts(4, 1, 1, vec![true, true], vec![0], vec![vec![edge], vec![]]);
    for db in [2.0, 6.0, 10.0] {
        let x = 10f64.powf(db / 10.0);
        let tb = transfer_bound(&gr, x, LengthWeight::PerStep).unwrap();
        let expected = q_function((a * x).sqrt()) * 0.25 * 0.25;
        assert!((tb.value - expected).abs() < 1e-14 * expected.max(1e-300) + 1e-300);
    }
}

#[test]
fn transfer_monotone_and_divergent() {
    let gr = graph("[1; D]", None);
    let mut last = f64::INFINITY;
    for db in [4.0, 5.0, 6.0, 8.0, 10.0, 12.0] {
        let v = transfer_bound(&gr, 10f64.powf(db / 10.0), LengthWeight::PerStep)
            .unwrap()
            .value;
        assert!(v < last);
        last = v;
    }
    let low = transfer_bound(&gr, 10f64.powf(-10.0 / 10.0), LengthWeight::PerStep);
    assert!(matches!(low, Err(Error::Divergent { .. })));
}

#[test]
fn transfer_tracks_series_on_tiny_system() {
    let gr = graph("[1; D]", None);
    let d = min_distance(&gr).unwrap();
    let caps = EnumerationCaps {
        d_cap: d + 8.0,
        length_cap: 40,
        entry_limit: 10_000_000,
    };
    let spectrum = dmin_and_theta(&enumerate_error_events(&gr, caps).unwrap(), LengthWeight::PerStep).unwrap();
    for db in [6.0, 9.0, 12.0] {
        let x = 10f64.powf(db / 10.0);
        let s = series_bound(&spectrum, x);
        let t = transfer_bound(&gr, x, LengthWeight::PerStep).unwrap().value;
        assert!(t >= s * (1.0 - 1e-9), "{db} dB: transfer {t} < series {s}");
    }
}

#[test]
fn profile_nondecreasing() {
    for (g, pm) in [(CODE1, None), (CODE1, Some(("6,5", 3))), ("[1; D]", None)] {
        let gr = graph(g, pm);
        let d = min_distance(&gr).unwrap();
        let prof = distance_profile(&gr, d, 200).unwrap();
        assert!(prof.delta2.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let nb = prof.n_b.unwrap();
        assert_eq!(prof.delta2.len(), nb);
        assert!(prof.delta2[nb - 1] >= d - 1e-9);
    }
    assert!(distance_profile(&graph("[1; D]", None), 1.0, 0).is_err());
}

#[test]
fn spectrum_positive() {
    let gr = graph(CODE1, Some(("6,5", 3)));
    let d = min_distance(&gr).unwrap();
    let caps = EnumerationCaps::around(d).with_d_cap(d + 2.0);
    let spectrum = dmin_and_theta(&enumerate_error_events(&gr, caps).unwrap(), LengthWeight::PerStep).unwrap();
    let total: f64 = spectrum.terms.iter().map(|t| t.theta).sum();
    assert!(total.is_finite() && total > 0.0);
    assert!((spectrum.d2min - d).abs() < 1e-9);
}

#[test]
fn entry_limit_is_enforced() {
    let gr = graph(CODE1, None);
    let caps = EnumerationCaps {
        d_cap: 20.0,
        length_cap: 60,
        entry_limit: 100,
    };
    assert!(matches!(
        enumerate_error_events(&gr, caps),
        Err(Error::EnumerationLimit { limit: 100 })
    ));
}

#[test]
fn folded_spectrum_matches_table() {
    for (g, pm) in [(CODE1, None), (CODE1, Some(("6,5", 3))), ("[1; D]", None)] {
        let gr = graph(g, pm);
        let d = min_distance(&gr).unwrap();
        let caps = EnumerationCaps::around(d).with_d_cap(d + 2.0).with_length_cap(25);
        let table = enumerate_error_events(&gr, caps).unwrap();
        for conv in [LengthWeight::PerStep, LengthWeight::PaperTheorem] {
            let a = dmin_and_theta(&table, conv).unwrap();
            let b = error_spectrum(&gr, caps, conv).unwrap();
            assert_eq!(a.terms.len(), b.terms.len());
            for (x, y) in a.terms.iter().zip(&b.terms) {
                assert!((x.d2 - y.d2).abs() < 1e-9);
                assert!((x.theta - y.theta).abs() <= 1e-12 * x.theta.abs().max(1e-300));
            }
        }
    }
}

#[test]
fn transfer_sum_equals_spectrum_generating_function() {
    for (g, pm) in [(CODE1, None), (CODE1, Some(("15,13", 4)))] {
        let gr = graph(g, pm);
        let d = min_distance(&gr).unwrap();
        let caps = EnumerationCaps::around(d).with_d_cap(d + 12.0).with_length_cap(200);
        for conv in [LengthWeight::PerStep, LengthWeight::PaperTheorem] {
            let spectrum = error_spectrum(&gr, caps, conv).unwrap();
            let x = 10f64.powf(1.0);
            let series: f64 = spectrum.terms.iter().map(|t| t.theta * (-t.d2 * x / 2.0).exp()).sum();
            let tb = transfer_bound(&gr, x, conv).unwrap();
            assert!((tb.weighted_sum - series).abs() < 1e-6 * series, "{} vs {series}", tb.weighted_sum);
        }
    }
}
