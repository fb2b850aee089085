//! Unbiased compression operators and their bit costs.
//!
//! Every operator here satisfies `E[C(x)] = x` and
//! `E‖C(x) - x‖² <= C₂ ‖x‖²` for the constant returned by [`c2_of`].

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FLOAT_BITS: u64 = 64;
const MAX_QUANT_BITS: u32 = 52;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CompressorSpec {
    Identity,
    /// Dithered `b`-bit quantization of `|x| / ‖x‖`, signs kept exactly.
    Quantize {
        bits: u32,
    },
    /// Keep `k` uniformly chosen coordinates, scaled by `p / k`.
    RandK {
        k: usize,
    },
}

impl CompressorSpec {
    pub fn quantize(bits: u32) -> Result<Self> {
        if !(1..=MAX_QUANT_BITS).contains(&bits) {
            return Err(Error::param(format!(
                "quantization bits must be in 1..={MAX_QUANT_BITS}, got {bits}"
            )));
        }
        Ok(Self::Quantize { bits })
    }

    pub fn rand_k(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("rand-k needs k >= 1"));
        }
        Ok(Self::RandK { k })
    }

    /// Checks the parameters against the vector dimension `p`.
    pub fn validate_for(&self, p: usize) -> Result<()> {
        match *self {
            Self::RandK { k } if k > p => Err(Error::param(format!(
                "rand-k keeps k = {k} entries but the dimension is p = {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Whether [`c2_of`] is a certified upper bound rather than the exact
    /// worst-case variance ratio.
    pub fn c2_is_upper_bound(&self) -> bool {
        matches!(self, Self::Quantize { .. })
    }
}

impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Quantize { bits } => write!(f, "quantize:b={bits}"),
            Self::RandK { k } => write!(f, "randk:k={k}"),
        }
    }
}

impl FromStr for CompressorSpec {
    type Err = Error;

    /// Grammar: `identity` | `quantize:b=<u32>` | `randk:k=<usize>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param(format!("unrecognized compressor `{s}`"));
        if s == "identity" {
            return Ok(Self::Identity);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let (key, value) = arg.split_once('=').ok_or_else(bad)?;
        match (kind, key) {
            ("quantize", "b") => Self::quantize(value.parse().map_err(|_| bad())?),
            ("randk", "k") => Self::rand_k(value.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for CompressorSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CompressorSpec> for String {
    fn from(spec: CompressorSpec) -> Self {
        spec.to_string()
    }
}

/// One compressed message: the value the receivers decode, and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedVector {
    pub payload: Vec<f64>,
    pub bits: u64,
}

pub fn compress<R: Rng + ?Sized>(spec: &CompressorSpec, x: &[f64], rng: &mut R) -> Result<CompressedVector> {
    let p = x.len();
    spec.validate_for(p)?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite entry {} at index {i}", x[i])));
    }
    let payload = match *spec {
        CompressorSpec::Identity => x.to_vec(),
        CompressorSpec::Quantize { bits } => quantize(x, bits, rng),
        CompressorSpec::RandK { k } => rand_k(x, k, rng),
    };
    Ok(CompressedVector {
        payload,
        bits: bit_cost(spec, p),
    })
}

fn quantize<R: Rng + ?Sized>(x: &[f64], bits: u32, rng: &mut R) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; x.len()];
    }
    let levels = 2f64.powi(bits as i32 - 1);
    let step = norm / levels;
    x.iter()
        .map(|&xi| {
            let dither: f64 = rng.gen();
            let level = (levels * xi.abs() / norm + dither).floor();
            if xi == 0.0 {
                0.0
            } else {
                xi.signum() * step * level
            }
        })
        .collect()
}

fn rand_k<R: Rng + ?Sized>(x: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let p = x.len();
    let mut out = vec![0.0; p];
    if k == p {
        out.copy_from_slice(x);
        return out;
    }
    let scale = p as f64 / k as f64;
    for i in index::sample(rng, p, k) {
        out[i] = scale * x[i];
    }
    out
}

/// Variance constant `C₂` for dimension `p`.
///
/// Exact for identity and rand-k. For quantization this is the bound
/// `p · 4^(1-b)`: each coordinate's dithered rounding error has variance at
/// most `(‖x‖ 2^(1-b))² / 4`, and the bound keeps a factor of four of slack.
pub fn c2_of(spec: &CompressorSpec, p: usize) -> f64 {
    match *spec {
        CompressorSpec::Identity => 0.0,
        CompressorSpec::RandK { k } => p as f64 / k as f64 - 1.0,
        CompressorSpec::Quantize { bits } => p as f64 * 4f64.powi(1 - bits as i32),
    }
}

fn index_bits(p: usize) -> u64 {
    if p <= 1 {
        0
    } else {
        u64::from(usize::BITS - (p - 1).leading_zeros())
    }
}

/// Bits on the wire for one message of dimension `p`.
///
/// identity: `64p`; quantize: a 64-bit norm plus sign and `b` level bits per
/// entry; rand-k: a 64-bit value and a `⌈log₂ p⌉`-bit index per kept entry.
pub fn bit_cost(spec: &CompressorSpec, p: usize) -> u64 {
    let p64 = p as u64;
    match *spec {
        CompressorSpec::Identity => FLOAT_BITS * p64,
        CompressorSpec::Quantize { bits } => FLOAT_BITS + p64 * (1 + u64::from(bits)),
        CompressorSpec::RandK { k } => k as u64 * (FLOAT_BITS + index_bits(p)),
    }
}
