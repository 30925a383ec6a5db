//! Arithmetic over Z_M, feedforward ring convolutional encoding and puncturing.
//!
//! A rate-1/n encoder is described by n generator polynomials with
//! coefficients in Z_M. The encoder memory holds the `m` most recent input
//! symbols, most recent first; the state index is `sum(mem[t] * M^t)`.
//!
//! Puncturing works column-wise: at step `t` the column `t mod p` of the
//! puncture matrix picks which of the n outputs are transmitted, in row
//! order. Column 0 is aligned with `t = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator polynomials of a rate-1/n feedforward code over Z_M.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    modulus: u32,
    /// `rows[i][j]` is the coefficient of `D^j` in the i-th polynomial.
    rows: Vec<Vec<u32>>,
    memory: usize,
}

impl GeneratorMatrix {
    /// Builds a generator from coefficient rows, reducing every coefficient
    /// mod `modulus`. Rows are padded to the common memory.
    pub fn new(modulus: u32, rows: Vec<Vec<u32>>) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        if rows.is_empty() || rows.iter().all(|r| r.is_empty()) {
            return Err(Error::EmptyGenerator);
        }
        let reduced: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|c| c % modulus).collect())
            .collect();
        let degree = reduced
            .iter()
            .filter_map(|r| r.iter().rposition(|&c| c != 0))
            .max()
            .ok_or(Error::EmptyGenerator)?;
        let rows = reduced
            .into_iter()
            .map(|mut r| {
                r.resize(degree + 1, 0);
                r
            })
            .collect();
        Ok(Self {
            modulus,
            rows,
            memory: degree,
        })
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Number of encoder outputs per input symbol.
    pub fn outputs(&self) -> usize {
        self.rows.len()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Number of encoder states, `M^m`.
    pub fn num_states(&self) -> usize {
        (self.modulus as usize).pow(self.memory as u32)
    }

    /// One encoder step from the state with index `state`. Writes the n
    /// outputs into `out` and returns the next state index.
    pub fn step_into(&self, state: usize, input: u32, out: &mut [u32]) -> usize {
        let m = self.modulus as u64;
        for (row, o) in self.rows.iter().zip(out.iter_mut()) {
            let mut acc = row[0] as u64 * input as u64;
            let mut rest = state;
            for &g in &row[1..] {
                acc += g as u64 * (rest % self.modulus as usize) as u64;
                rest /= self.modulus as usize;
            }
            *o = (acc % m) as u32;
        }
        if self.memory == 0 {
            0
        } else {
            let keep = self.num_states() / self.modulus as usize;
            input as usize + self.modulus as usize * (state % keep)
        }
    }

    /// One encoder step returning a freshly allocated output vector.
    pub fn step(&self, state: usize, input: u32) -> (Vec<u32>, usize) {
        let mut out = vec![0; self.outputs()];
        let next = self.step_into(state, input, &mut out);
        (out, next)
    }
}

impl fmt::Display for GeneratorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let mut first = true;
            for (deg, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                if !first {
                    write!(f, "+")?;
                }
                first = false;
                match (deg, c) {
                    (0, c) => write!(f, "{c}")?,
                    (1, 1) => write!(f, "D")?,
                    (1, c) => write!(f, "{c}D")?,
                    (d, 1) => write!(f, "D^{d}")?,
                    (d, c) => write!(f, "{c}D^{d}")?,
                }
            }
            if first {
                write!(f, "0")?;
            }
        }
        write!(f, "]")
    }
}

/// Parses a polynomial list such as `"[1+D+D^2; 1+D^2]"` or `"(1, D)"`.
///
/// Polynomials are separated by `;` or `,`; the surrounding brackets are
/// optional. A term is an optional integer coefficient, optionally followed
/// by `D`, `D^k` (a `*` between coefficient and `D` is accepted).
pub fn parse_generator(text: &str, modulus: u32) -> Result<GeneratorMatrix> {
    if modulus < 2 {
        return Err(Error::InvalidModulus(modulus));
    }
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .or_else(|| compact.strip_prefix('(').and_then(|s| s.strip_suffix(')')))
        .unwrap_or(&compact);
    if inner.is_empty() {
        return Err(Error::EmptyGenerator);
    }
    let rows = inner
        .split([';', ','])
        .map(|poly| parse_polynomial(poly, modulus))
        .collect::<Result<Vec<_>>>()?;
    GeneratorMatrix::new(modulus, rows)
}

fn parse_polynomial(poly: &str, modulus: u32) -> Result<Vec<u32>> {
    let malformed = |reason: &str| Error::MalformedPolynomial {
        text: poly.to_string(),
        reason: reason.to_string(),
    };
    if poly.is_empty() {
        return Err(malformed("empty polynomial"));
    }
    let mut coeffs: Vec<u64> = Vec::new();
    for term in poly.split('+') {
        if term.is_empty() {
            return Err(malformed("empty term"));
        }
        let (coef_part, power) = match term.find(['D', 'd']) {
            None => (term, 0usize),
            Some(pos) => {
                let tail = &term[pos + 1..];
                let power = if tail.is_empty() {
                    1
                } else {
                    let exp = tail
                        .strip_prefix('^')
                        .ok_or_else(|| malformed("expected `^` after D"))?;
                    exp.parse::<usize>()
                        .map_err(|_| malformed("bad exponent"))?
                };
                let head = &term[..pos];
                (head.strip_suffix('*').unwrap_or(head), power)
            }
        };
        let coef: u64 = if coef_part.is_empty() {
            if power == 0 {
                return Err(malformed("missing coefficient"));
            }
            1
        } else {
            coef_part
                .parse::<u64>()
                .map_err(|_| malformed("bad coefficient"))?
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0);
        }
        coeffs[power] = (coeffs[power] + coef) % modulus as u64;
    }
    Ok(coeffs.into_iter().map(|c| c as u32).collect())
}

/// Encoder memory contents, most recent symbol first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingState {
    pub mem: Vec<u32>,
}

impl RingState {
    pub fn zero(memory: usize) -> Self {
        Self {
            mem: vec![0; memory],
        }
    }

    pub fn from_index(index: usize, modulus: u32, memory: usize) -> Self {
        let mut rest = index;
        let mem = (0..memory)
            .map(|_| {
                let d = (rest % modulus as usize) as u32;
                rest /= modulus as usize;
                d
            })
            .collect();
        Self { mem }
    }

    pub fn index(&self, modulus: u32) -> usize {
        self.mem
            .iter()
            .rev()
            .fold(0usize, |acc, &d| acc * modulus as usize + d as usize)
    }
}

fn check_symbol(symbol: u32, modulus: u32) -> Result<()> {
    if symbol >= modulus {
        Err(Error::SymbolOutOfRange { symbol, modulus })
    } else {
        Ok(())
    }
}

/// Encodes `input` from `start`, returning one n-symbol codeword per input.
pub fn encode(g: &GeneratorMatrix, input: &[u32], start: &RingState) -> Result<Vec<Vec<u32>>> {
    if start.mem.len() != g.memory() {
        return Err(Error::ParameterMismatch(format!(
            "start state has {} cells, encoder memory is {}",
            start.mem.len(),
            g.memory()
        )));
    }
    for &s in start.mem.iter().chain(input) {
        check_symbol(s, g.modulus())?;
    }
    let mut state = start.index(g.modulus());
    Ok(input
        .iter()
        .map(|&u| {
            let (out, next) = g.step(state, u);
            state = next;
            out
        })
        .collect())
}

/// Binary keep/kill pattern with `outputs` rows and `period` columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PunctureMatrix {
    keep: Vec<Vec<bool>>,
}

impl PunctureMatrix {
    /// Validates and wraps a keep pattern. Columns without any kept symbol
    /// are rejected unless `allow_empty_columns` is set.
    pub fn new(keep: Vec<Vec<bool>>, allow_empty_columns: bool) -> Result<Self> {
        let rows = keep.len();
        if rows == 0 {
            return Err(Error::InvalidPuncture("no rows".into()));
        }
        let period = keep[0].len();
        if period == 0 || keep.iter().any(|r| r.len() != period) {
            return Err(Error::InvalidPuncture(
                "rows must share a nonzero period".into(),
            ));
        }
        let m = Self { keep };
        if !allow_empty_columns {
            if let Some(c) = (0..period).find(|&c| m.column_weight(c) == 0) {
                return Err(Error::InvalidPuncture(format!(
                    "column {c} keeps no symbol"
                )));
            }
        }
        if m.kept() < period {
            return Err(Error::InvalidPuncture(format!(
                "{} kept symbols over period {period} gives rate above 1",
                m.kept()
            )));
        }
        Ok(m)
    }

    /// The trivial pattern that keeps every output.
    pub fn unpunctured(outputs: usize) -> Self {
        Self {
            keep: vec![vec![true]; outputs],
        }
    }

    pub fn outputs(&self) -> usize {
        self.keep.len()
    }

    pub fn period(&self) -> usize {
        self.keep[0].len()
    }

    /// Total kept symbols per period (`s`).
    pub fn kept(&self) -> usize {
        self.keep.iter().flatten().filter(|&&b| b).count()
    }

    pub fn keeps(&self, row: usize, col: usize) -> bool {
        self.keep[row][col]
    }

    pub fn column_weight(&self, col: usize) -> usize {
        self.keep.iter().filter(|r| r[col]).count()
    }

    /// Row indices kept in column `col`, in row order.
    pub fn kept_rows(&self, col: usize) -> Vec<usize> {
        (0..self.outputs()).filter(|&r| self.keep[r][col]).collect()
    }

    /// Code rate `p / s`.
    pub fn rate(&self) -> f64 {
        self.period() as f64 / self.kept() as f64
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.keep
    }

    /// Cyclic left shift of all columns by `k`.
    pub fn shifted(&self, k: usize) -> Self {
        let p = self.period();
        Self {
            keep: self
                .keep
                .iter()
                .map(|r| (0..p).map(|c| r[(c + k) % p]).collect())
                .collect(),
        }
    }

    /// Octal rendering, e.g. `(15,13)_o`. The leftmost bit of each row is
    /// the first position of the period.
    pub fn format_octal(&self) -> String {
        let rows: Vec<String> = self
            .keep
            .iter()
            .map(|r| {
                let v = r.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
                format!("{v:o}")
            })
            .collect();
        format!("({})_o", rows.join(","))
    }
}

impl fmt::Display for PunctureMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_octal())
    }
}

/// Parses the octal notation `(r1,...,rn)_o` for a matrix of `outputs`
/// rows and period `period`. Each value is expanded MSB-first and
/// left-padded to `period` bits; a zero bit means punctured.
pub fn parse_puncture_octal(text: &str, outputs: usize, period: usize) -> Result<PunctureMatrix> {
    parse_puncture_octal_with(text, outputs, period, false)
}

/// As [`parse_puncture_octal`], optionally admitting columns that keep nothing.
pub fn parse_puncture_octal_with(
    text: &str,
    outputs: usize,
    period: usize,
    allow_empty_columns: bool,
) -> Result<PunctureMatrix> {
    let malformed = |reason: String| Error::MalformedPuncture {
        text: text.to_string(),
        reason,
    };
    if period == 0 || period > 63 {
        return Err(malformed(format!("unsupported period {period}")));
    }
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let body = compact
        .strip_suffix("_o")
        .or_else(|| compact.strip_suffix("_O"))
        .unwrap_or(&compact);
    let body = match body.strip_prefix('(') {
        Some(inner) => inner
            .strip_suffix(')')
            .ok_or_else(|| malformed("unbalanced parentheses".into()))?,
        None => body,
    };
    let values = body
        .split(',')
        .map(|v| u64::from_str_radix(v, 8).map_err(|_| malformed(format!("`{v}` is not octal"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != outputs {
        return Err(malformed(format!(
            "expected {outputs} rows, found {}",
            values.len()
        )));
    }
    let keep = values
        .iter()
        .map(|&v| {
            if v >> period != 0 {
                return Err(malformed(format!("{v:o} does not fit period {period}")));
            }
            Ok((0..period).map(|c| (v >> (period - 1 - c)) & 1 == 1).collect())
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;
    PunctureMatrix::new(keep, allow_empty_columns)
}

/// Kept symbols from a codeword stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Punctured {
    pub symbols: Vec<u32>,
    /// Number of symbols kept at each step.
    pub kept_counts: Vec<usize>,
}

pub fn puncture(codewords: &[Vec<u32>], pm: &PunctureMatrix) -> Result<Punctured> {
    let p = pm.period();
    let mut symbols = Vec::with_capacity(codewords.len() * pm.outputs());
    let mut kept_counts = Vec::with_capacity(codewords.len());
    for (t, cw) in codewords.iter().enumerate() {
        if cw.len() != pm.outputs() {
            return Err(Error::WidthMismatch {
                expected: pm.outputs(),
                got: cw.len(),
            });
        }
        let col = t % p;
        let before = symbols.len();
        symbols.extend(
            cw.iter()
                .enumerate()
                .filter(|(row, _)| pm.keeps(*row, col))
                .map(|(_, &s)| s),
        );
        kept_counts.push(symbols.len() - before);
    }
    Ok(Punctured {
        symbols,
        kept_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(text: &str) -> GeneratorMatrix {
        parse_generator(text, 4).unwrap()
    }

    #[test]
    fn parses_generators() {
        let a = g("[1+D+D^2; 1+D^2]");
        assert_eq!(a.rows(), &[vec![1, 1, 1], vec![1, 0, 1]]);
        assert_eq!(a.memory(), 2);
        let b = g("[2+2D+D^2; 3+D^2]");
        assert_eq!(b.rows(), &[vec![2, 2, 1], vec![3, 0, 1]]);
        let c = g("[1; D]");
        assert_eq!(c.rows(), &[vec![1, 0], vec![0, 1]]);
        assert_eq!(c.memory(), 1);
        assert_eq!(g("(1, D)"), c);
        assert_eq!(g("[1 + 2*D^2 ; 5]").rows(), &[vec![1, 0, 2], vec![1, 0, 0]]);
    }

    #[test]
    fn parse_reduces_and_rejects() {
        // 4D^2 vanishes mod 4, so the memory shrinks.
        assert_eq!(g("[1+4D^2; 1+D]").memory(), 1);
        assert!(matches!(parse_generator("[]", 4), Err(Error::EmptyGenerator)));
        assert!(matches!(
            parse_generator("[1+; D]", 4),
            Err(Error::MalformedPolynomial { .. })
        ));
        assert!(parse_generator("[1+X]", 4).is_err());
        assert!(parse_generator("[D^]", 4).is_err());
        assert!(parse_generator("[0; 0]", 4).is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["[1+D+D^2; 1+D^2]", "[2+2D+D^2; 3+D^2]", "[1; D]"] {
            let a = g(text);
            assert_eq!(g(&a.to_string()), a);
        }
    }

    #[test]
    fn encode_examples() {
        let a = g("[1+D+D^2; 1+D^2]");
        let out = encode(&a, &[1, 0, 0], &RingState::zero(2)).unwrap();
        assert_eq!(out, vec![vec![1, 1], vec![1, 0], vec![1, 1]]);
        let b = g("[1; D]");
        let out = encode(&b, &[3, 2], &RingState::zero(1)).unwrap();
        assert_eq!(out, vec![vec![3, 0], vec![2, 3]]);
        let zeros = encode(&a, &[0; 7], &RingState::zero(2)).unwrap();
        assert!(zeros.iter().flatten().all(|&s| s == 0));
    }

    #[test]
    fn encode_uses_start_state() {
        let a = g("[1+D+D^2; 1+D^2]");
        let start = RingState { mem: vec![2, 3] };
        let out = encode(&a, &[1], &start).unwrap();
        assert_eq!(out, vec![vec![(1 + 2 + 3) % 4, (1 + 3) % 4]]);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let a = g("[1; D]");
        assert!(matches!(
            encode(&a, &[4], &RingState::zero(1)),
            Err(Error::SymbolOutOfRange { symbol: 4, modulus: 4 })
        ));
    }

    #[test]
    fn state_index_is_little_endian() {
        let s = RingState { mem: vec![3, 1] };
        assert_eq!(s.index(4), 3 + 4);
        assert_eq!(RingState::from_index(7, 4, 2), s);
        let a = g("[1+D+D^2; 1+D^2]");
        let (_, next) = a.step(s.index(4), 2);
        assert_eq!(RingState::from_index(next, 4, 2).mem, vec![2, 3]);
    }

    #[test]
    fn octal_examples() {
        let p = parse_puncture_octal("(3,5)_o", 2, 3).unwrap();
        assert_eq!(
            p.rows(),
            &[vec![false, true, true], vec![true, false, true]]
        );
        let q = parse_puncture_octal("(15,13)_o", 2, 4).unwrap();
        assert_eq!(
            q.rows(),
            &[vec![true, true, false, true], vec![true, false, true, true]]
        );
        assert_eq!(q.kept(), 6);
        assert!((q.rate() - 2.0 / 3.0).abs() < 1e-15);
        let r = parse_puncture_octal("(1,1)_o", 2, 1).unwrap();
        assert_eq!(r, PunctureMatrix::unpunctured(2));
        assert!((r.rate() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn octal_errors() {
        assert!(parse_puncture_octal("(17,13)_o", 2, 3).is_err());
        assert!(parse_puncture_octal("(7)_o", 2, 3).is_err());
        assert!(parse_puncture_octal("3,5", 2, 3).is_ok());
        assert!(parse_puncture_octal("(3,5", 2, 3).is_err());
        assert!(parse_puncture_octal("(8,1)_o", 2, 3).is_err());
        // column 0 keeps nothing
        assert!(parse_puncture_octal("(3,3)_o", 2, 3).is_err());
        assert!(parse_puncture_octal_with("(3,3)_o", 2, 3, true).is_ok());
        // rate above one
        assert!(parse_puncture_octal_with("(1,0)_o", 2, 3, true).is_err());
    }

    #[test]
    fn puncture_examples() {
        let cws = vec![vec![11, 21], vec![12, 22], vec![13, 23]];
        let p = parse_puncture_octal("(6,5)_o", 2, 3).unwrap();
        let out = puncture(&cws, &p).unwrap();
        assert_eq!(out.symbols, vec![11, 21, 12, 23]);
        assert_eq!(out.kept_counts, vec![2, 1, 1]);

        let q = parse_puncture_octal("(3,5)_o", 2, 3).unwrap();
        assert_eq!(puncture(&cws, &q).unwrap().symbols, vec![21, 12, 13, 23]);

        let id = PunctureMatrix::unpunctured(2);
        let out = puncture(&cws, &id).unwrap();
        assert_eq!(out.symbols, vec![11, 21, 12, 22, 13, 23]);
        assert_eq!(out.kept_counts, vec![2, 2, 2]);

        assert!(matches!(
            puncture(&[vec![1, 2, 3]], &id),
            Err(Error::WidthMismatch { expected: 2, got: 3 })
        ));
    }

    fn arb_generator() -> impl Strategy<Value = GeneratorMatrix> {
        (1usize..=3, 0usize..=3).prop_flat_map(|(n, m)| {
            prop::collection::vec(prop::collection::vec(0u32..4, m + 1), n).prop_filter_map(
                "nonzero",
                |rows| GeneratorMatrix::new(4, rows).ok(),
            )
        })
    }

    fn arb_puncture() -> impl Strategy<Value = PunctureMatrix> {
        (1usize..=3, 1usize..=8).prop_flat_map(|(n, p)| {
            prop::collection::vec(prop::collection::vec(any::<bool>(), p), n)
                .prop_filter_map("valid", |keep| PunctureMatrix::new(keep, false).ok())
        })
    }

    proptest! {
        #[test]
        fn encoding_is_linear(
            gm in arb_generator(),
            pairs in prop::collection::vec((0u32..4, 0u32..4), 1..20),
        ) {
            let a: Vec<u32> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<u32> = pairs.iter().map(|p| p.1).collect();
            let sum: Vec<u32> = pairs.iter().map(|p| (p.0 + p.1) % 4).collect();
            let z = RingState::zero(gm.memory());
            let ea = encode(&gm, &a, &z).unwrap();
            let eb = encode(&gm, &b, &z).unwrap();
            let es = encode(&gm, &sum, &z).unwrap();
            for t in 0..a.len() {
                for i in 0..gm.outputs() {
                    prop_assert_eq!(es[t][i], (ea[t][i] + eb[t][i]) % 4);
                }
            }
        }

        #[test]
        fn encoding_shifts_with_input(
            gm in arb_generator(),
            input in prop::collection::vec(0u32..4, 1..20),
            delay in 0usize..5,
        ) {
            let z = RingState::zero(gm.memory());
            let plain = encode(&gm, &input, &z).unwrap();
            let mut delayed_in = vec![0; delay];
            delayed_in.extend(&input);
            let delayed = encode(&gm, &delayed_in, &z).unwrap();
            prop_assert!(delayed[..delay].iter().flatten().all(|&s| s == 0));
            prop_assert_eq!(&delayed[delay..], &plain[..]);
        }

        #[test]
        fn octal_round_trip(pm in arb_puncture()) {
            let text = pm.format_octal();
            let back = parse_puncture_octal(&text, pm.outputs(), pm.period()).unwrap();
            prop_assert_eq!(back, pm);
        }

        #[test]
        fn puncture_rate_identity(pm in arb_puncture(), periods in 1usize..6) {
            let steps = periods * pm.period();
            let cws = vec![vec![1u32; pm.outputs()]; steps];
            let out = puncture(&cws, &pm).unwrap();
            prop_assert_eq!(out.symbols.len(), steps * pm.kept() / pm.period());
            prop_assert_eq!(out.kept_counts[..pm.period()].iter().sum::<usize>(), pm.kept());
        }
    }
}
