use std::path::Path;

use prcc::bound::{
    build_product_graph, distance_profile, error_spectrum, min_distance, transfer_bound,
    DistanceProfile, DistanceSpectrum, EnumerationCaps, LengthWeight, SpectrumTerm,
};
use prcc::catalog::{default_cpm, SCHEMES};
use prcc::ring::{encode, puncture, RingState};
use prcc::search::{evaluate, search_puncture, SearchSpec};
use prcc::sim::run_simulation;
use prcc::trellis::build_trellis;
use prcc::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

/// One integer per line; blank lines are skipped.
pub fn read_symbols(path: &Path) -> Result<Vec<u32>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<u32>().map_err(|_| {
                CliError::Config(format!("{} line {}: `{}` is not a symbol", path.display(), i + 1, l.trim()))
            })
        })
        .collect()
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn csv_text<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf8"))
}

/// `sha256` over a git blob header followed by the content.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cmd_encode(config: &ExperimentConfig, message: &[u32]) -> Result<String, CliError> {
    let g = config.generator()?;
    let pm = config.puncture()?;
    let codewords = encode(&g, message, &RingState::zero(g.memory()))?;
    let kept = puncture(&codewords, &pm)?;
    Ok(kept.symbols.iter().map(|s| format!("{s}\n")).collect())
}

#[derive(Serialize)]
struct SampleRow {
    index: usize,
    re: f64,
    im: f64,
}

pub fn cmd_modulate(config: &ExperimentConfig, message: &[u32]) -> Result<String, CliError> {
    let trellis = build_trellis(&config.generator()?, &config.puncture()?, &config.cpm()?)?;
    let (_, waves, _) = trellis.transmit(message)?;
    let rows: Vec<SampleRow> = trellis
        .synthesize(&waves)
        .iter()
        .enumerate()
        .map(|(index, z)| SampleRow { index, re: z.re, im: z.im })
        .collect();
    csv_text(&rows, &["index", "re", "im"])
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    input_hash: String,
    results_hash: String,
    config: &'a ExperimentConfig,
    error_counting: &'static str,
    result: &'a prcc::sim::SimResult,
}

/// CSV results and a JSON manifest.
pub fn cmd_simulate(config: &ExperimentConfig) -> Result<(String, String), CliError> {
    let result = run_simulation(&config.sim_config()?)?;
    let csv = result.to_csv()?;
    let canonical = serde_json::to_vec(config).expect("config serializes");
    let manifest = Manifest {
        command: "simulate",
        input_hash: content_hash(&canonical),
        results_hash: content_hash(csv.as_bytes()),
        config,
        error_counting: "information symbols only; termination tail excluded",
        result: &result,
    };
    Ok((csv, to_json(&manifest)))
}

#[derive(Serialize)]
struct BoundRow {
    ebn0_db: f64,
    bound_series: f64,
    bound_transfer: Option<f64>,
    d2min: f64,
    theta_dmin: f64,
}

#[derive(Serialize)]
struct BoundReport<'a> {
    generator: String,
    puncture: String,
    rate: f64,
    convention: LengthWeight,
    d2min: f64,
    theta_dmin: f64,
    n_b: Option<usize>,
    d_cap: f64,
    iota_cap: usize,
    terms: &'a [SpectrumTerm],
    points: &'a [BoundRow],
}

pub struct BoundOutput {
    pub csv: String,
    pub json: String,
    /// Grid points where the transfer bound diverged.
    pub divergent: Vec<f64>,
}

pub fn cmd_bound(config: &ExperimentConfig) -> Result<BoundOutput, CliError> {
    let grid = config.bound_grid()?;
    let trellis = build_trellis(&config.generator()?, &config.puncture()?, &config.cpm()?)?;
    let graph = build_product_graph(&trellis);
    let d2min = min_distance(&graph).ok_or(Error::EmptyTable)?;
    let d_cap = config.bound.d_cap.unwrap_or(d2min + 10.0);
    let caps = EnumerationCaps::around(d2min)
        .with_d_cap(d_cap)
        .with_length_cap(config.bound.iota_cap);
    let conv = config.bound.convention;
    let spectrum: DistanceSpectrum = error_spectrum(&graph, caps, conv)?;
    let profile: DistanceProfile = distance_profile(&graph, d2min, config.bound.profile_depth)?;
    let mut divergent = Vec::new();
    let mut rows = Vec::with_capacity(grid.len());
    for &db in &grid {
        let ebn0 = 10f64.powf(db / 10.0);
        let transfer = match transfer_bound(&graph, ebn0, conv) {
            Ok(t) => Some(t.value),
            Err(Error::Divergent { .. }) => {
                divergent.push(db);
                None
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(BoundRow {
            ebn0_db: db,
            bound_series: prcc::bound::series_bound(&spectrum, ebn0),
            bound_transfer: transfer,
            d2min: spectrum.d2min,
            theta_dmin: spectrum.theta_dmin,
        });
    }
    let report = BoundReport {
        generator: trellis.generator().to_string(),
        puncture: trellis.puncture().format_octal(),
        rate: trellis.rate(),
        convention: conv,
        d2min: spectrum.d2min,
        theta_dmin: spectrum.theta_dmin,
        n_b: profile.n_b,
        d_cap,
        iota_cap: config.bound.iota_cap,
        terms: &spectrum.terms,
        points: &rows,
    };
    Ok(BoundOutput {
        csv: csv_text(&rows, &["ebn0_db", "bound_series", "bound_transfer", "d2min", "theta_dmin"])?,
        json: to_json(&report),
        divergent,
    })
}

pub fn cmd_search(config: &ExperimentConfig) -> Result<String, CliError> {
    let s = config
        .search
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [search] section".into()))?;
    let spec = SearchSpec {
        generator: config.generator()?,
        params: config.cpm()?,
        period: s.period,
        kept: s.kept,
        convention: config.bound.convention,
    };
    Ok(to_json(&search_puncture(&spec)?))
}

#[derive(Serialize)]
struct ProfileRow {
    steps: usize,
    delta2: f64,
}

/// CSV of the distance profile plus a one-line summary.
pub fn cmd_distance_profile(config: &ExperimentConfig, depth: usize) -> Result<(String, String), CliError> {
    let trellis = build_trellis(&config.generator()?, &config.puncture()?, &config.cpm()?)?;
    let graph = build_product_graph(&trellis);
    let d2min = min_distance(&graph).ok_or(Error::EmptyTable)?;
    let profile = distance_profile(&graph, d2min, depth)?;
    let rows: Vec<ProfileRow> = profile
        .delta2
        .iter()
        .enumerate()
        .map(|(k, &delta2)| ProfileRow { steps: k + 1, delta2 })
        .collect();
    let n_b = profile.n_b.map_or("none".to_string(), |n| n.to_string());
    let summary = format!("d2min={d2min:.4} N_B={n_b}\n");
    Ok((csv_text(&rows, &["steps", "delta2"])?, summary))
}

pub fn cmd_table1(samples_per_symbol: usize, conv: LengthWeight) -> Result<String, CliError> {
    let params = default_cpm(samples_per_symbol)?;
    let mut out = format!(
        "# quaternary 1REC, h=1/4; theta_dmin convention: {}\n{:<6} {:<5} {:<10} {:>8} {:>12} {:>5}\n",
        conv.name(),
        "code",
        "rate",
        "P_mat",
        "d2min",
        "theta_dmin",
        "N_B"
    );
    for scheme in SCHEMES {
        let (d2, theta, n_b) = evaluate(&scheme.generator()?, &scheme.puncture()?, &params, conv)?;
        out.push_str(&format!(
            "{:<6} {:<5} {:<10} {:>8.4} {:>12.6} {:>5}\n",
            scheme.code,
            scheme.rate_label()?,
            scheme.octal,
            d2,
            theta,
            n_b.map_or("-".to_string(), |n| n.to_string())
        ));
    }
    Ok(out)
}
