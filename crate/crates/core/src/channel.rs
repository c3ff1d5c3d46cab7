//! Photon-count generation: Born-rule expected counts, fiber loss as a
//! binomial thinning of the produced photons, and Poissonian shot noise.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::PovmSet;
use crate::qlinalg::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    /// dB/km
    pub alpha: f64,
    /// km
    pub length: f64,
}

impl FiberSpec {
    pub fn new(alpha: f64, length: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0 && length.is_finite() && length >= 0.0) {
            return Err(Error::invalid(format!(
                "fiber needs finite non-negative alpha and length, got alpha={alpha} L={length}"
            )));
        }
        Ok(FiberSpec { alpha, length })
    }
}

/// Base of the exponential loss law.
///
/// `E` evaluates `exp(-alpha L / 10)` literally; `Ten` is the conventional
/// decibel law `10^(-alpha L / 10)`.
/// In files written as `"e"` or `"10"`; a bare integer `10` is also accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AttenuationBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "10")]
    Ten,
}

impl<'de> Deserialize<'de> for AttenuationBase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(10) => Ok(AttenuationBase::Ten),
            Repr::Text(t) if t == "10" => Ok(AttenuationBase::Ten),
            Repr::Text(t) if t == "e" => Ok(AttenuationBase::E),
            _ => Err(serde::de::Error::custom(
                "attenuation_base must be \"e\" or \"10\"",
            )),
        }
    }
}

impl fmt::Display for AttenuationBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttenuationBase::E => "e",
            AttenuationBase::Ten => "10",
        })
    }
}

/// Whether the number of surviving photons is drawn separately for each
/// measurement setting or once per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmissionMode {
    #[default]
    PerSetting,
    PerState,
}

/// `Poisson` draws shot noise; `Mean` replaces each count by its rounded mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotNoise {
    #[default]
    Poisson,
    Mean,
}

/// What one measurement setting `k` records.
///
/// `Projector`: each setting is a separate run with the rank-one projector
/// `M_k / Tr(M_k)`, so a surviving photon is counted with probability
/// `(eta / D) Tr(M_k rho)`. `PovmElement`: all settings share one run and
/// the probability is `Tr(M_k rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingOperator {
    #[default]
    Projector,
    PovmElement,
}

impl SettingOperator {
    /// Factor between the per-setting count probability and `Tr(M_k rho)`.
    pub fn count_scale(self, povm: &PovmSet) -> u64 {
        match self {
            SettingOperator::Projector => (povm.eta() / povm.dim()) as u64,
            SettingOperator::PovmElement => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelOptions {
    pub attenuation_base: AttenuationBase,
    pub transmission_mode: TransmissionMode,
    pub shot_noise: ShotNoise,
    pub setting_operator: SettingOperator,
}

/// Probability that a photon (or both photons of a pair) survives the fiber(s).
pub fn survival_probability(fibers: &[FiberSpec]) -> Result<f64> {
    survival_probability_with(fibers, AttenuationBase::E)
}

pub fn survival_probability_with(fibers: &[FiberSpec], base: AttenuationBase) -> Result<f64> {
    if fibers.is_empty() || fibers.len() > 2 {
        return Err(Error::invalid(format!(
            "expected 1 or 2 fibers, got {}",
            fibers.len()
        )));
    }
    let exponent: f64 = fibers.iter().map(|f| f.alpha * f.length).sum::<f64>() / 10.0;
    Ok(match base {
        AttenuationBase::E => (-exponent).exp(),
        AttenuationBase::Ten => 10f64.powf(-exponent),
    })
}

/// `floor(x + 0.5)` for `x >= 0`; negative inputs map to 0.
pub fn round_half_up(x: f64) -> u64 {
    if x <= 0.0 || !x.is_finite() {
        0
    } else {
        (x + 0.5).floor() as u64
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic random stream: ChaCha8 keyed by `seed`, on stream `stream`.
///
/// Streams for independent work units are derived with [`RngStream::derive`],
/// which hashes a label path into the 64-bit stream id, so the draws of one
/// unit never depend on which other units ran or in what order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn derive(seed: u64, labels: &[u64]) -> Self {
        let stream = labels
            .iter()
            .fold(0x5153_5441_5454_454e_u64, |acc, &l| mix64(acc ^ mix64(l)));
        Self::new(seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionDraw {
    pub produced: u64,
    pub survived: u64,
    pub survival_prob: f64,
}

pub fn draw_transmitted(produced: u64, p: f64, rng: &mut RngStream) -> Result<TransmissionDraw> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "survival probability {p} outside [0, 1]"
        )));
    }
    let survived = Binomial::new(produced, p)
        .map_err(|e| Error::invalid(format!("binomial: {e}")))?
        .sample(rng);
    Ok(TransmissionDraw {
        produced,
        survived,
        survival_prob: p,
    })
}

fn draw_poisson(mean: u64, rng: &mut RngStream) -> u64 {
    if mean == 0 {
        return 0;
    }
    Poisson::new(mean as f64)
        .expect("positive finite mean")
        .sample(rng) as u64
}

/// Photon counts per POVM outcome, index-aligned with the operator order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector(pub Vec<u64>);

impl CountVector {
    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl fmt::Display for CountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for CountVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::invalid(format!("bad count {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(CountVector)
    }
}

/// `e_k = round_half_up(N Tr(M_k rho))`.
pub fn expected_counts(rho: &DensityMatrix, povm: &PovmSet, produced: u64) -> Result<CountVector> {
    let probs = povm.probabilities(rho)?;
    Ok(CountVector(
        probs
            .iter()
            .map(|&q| round_half_up(produced as f64 * q))
            .collect(),
    ))
}

fn parties_for_dim(d: usize) -> Result<usize> {
    match d {
        2 | 3 => Ok(1),
        4 | 9 => Ok(2),
        _ => Err(Error::invalid(format!(
            "no party structure for dimension {d}"
        ))),
    }
}

/// Simulated measured counts for one input state.
///
/// For each setting `k` (or once per state, depending on the transmission
/// mode) the number of surviving photons is drawn from
/// `Binomial(produced, p)`, the mean count is
/// `round_half_up(survived * c * Tr(M_k rho))` with `c` from
/// [`SettingOperator::count_scale`], and the measured count is a Poisson draw
/// with that mean.
pub fn draw_measured_counts(
    rho_in: &DensityMatrix,
    povm: &PovmSet,
    produced: u64,
    fibers: &[FiberSpec],
    options: &ChannelOptions,
    rng: &mut RngStream,
) -> Result<CountVector> {
    let parties = parties_for_dim(povm.dim())?;
    if fibers.len() != parties {
        return Err(Error::invalid(format!(
            "dimension {} needs {parties} fiber(s), got {}",
            povm.dim(),
            fibers.len()
        )));
    }
    let p = survival_probability_with(fibers, options.attenuation_base)?;
    let probs = povm.probabilities(rho_in)?;
    let scale = options.setting_operator.count_scale(povm);

    let shared = match options.transmission_mode {
        TransmissionMode::PerState => Some(draw_transmitted(produced, p, rng)?.survived),
        TransmissionMode::PerSetting => None,
    };
    let mut counts = Vec::with_capacity(probs.len());
    for q in probs {
        let survived = match shared {
            Some(n) => n,
            None => draw_transmitted(produced, p, rng)?.survived,
        };
        let mean = round_half_up((survived * scale) as f64 * q);
        counts.push(match options.shot_noise {
            ShotNoise::Poisson => draw_poisson(mean, rng),
            ShotNoise::Mean => mean,
        });
    }
    Ok(CountVector(counts))
}
