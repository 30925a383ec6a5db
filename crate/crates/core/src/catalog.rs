//! The two quaternary parent codes and their six punctured schemes.

use crate::cpm::CpmParams;
use crate::error::Result;
use crate::ring::{parse_generator, parse_puncture_octal, GeneratorMatrix, PunctureMatrix};

pub const MODULUS: u32 = 4;

pub const CODE_1: &str = "[1+D+D^2; 1+D^2]";
pub const CODE_2: &str = "[1+D^2; 1+2D+2D^2]";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    /// 1 or 2.
    pub code: usize,
    pub generator: &'static str,
    pub octal: &'static str,
    pub period: usize,
}

impl Scheme {
    pub fn generator(&self) -> Result<GeneratorMatrix> {
        parse_generator(self.generator, MODULUS)
    }

    pub fn puncture(&self) -> Result<PunctureMatrix> {
        parse_puncture_octal(self.octal, 2, self.period)
    }

    /// Rate `p/s` in lowest terms.
    pub fn rate_label(&self) -> Result<String> {
        let pm = self.puncture()?;
        let (mut a, mut b) = (pm.period(), pm.kept());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        Ok(format!("{}/{}", pm.period() / a, pm.kept() / a))
    }
}

/// Rates 1/2, 2/3 and 3/4 for code 1, then the same for code 2.
pub const SCHEMES: [Scheme; 6] = [
    Scheme { code: 1, generator: CODE_1, octal: "(1,1)_o", period: 1 },
    Scheme { code: 1, generator: CODE_1, octal: "(15,13)_o", period: 4 },
    Scheme { code: 1, generator: CODE_1, octal: "(6,5)_o", period: 3 },
    Scheme { code: 2, generator: CODE_2, octal: "(1,1)_o", period: 1 },
    Scheme { code: 2, generator: CODE_2, octal: "(16,15)_o", period: 4 },
    Scheme { code: 2, generator: CODE_2, octal: "(6,5)_o", period: 3 },
];

/// Quaternary 1REC with `h = 1/4`.
pub fn default_cpm(samples_per_symbol: usize) -> Result<CpmParams> {
    CpmParams::rec1(MODULUS, samples_per_symbol)
}
