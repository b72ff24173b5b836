//! Monte Carlo BER and sum-rate experiments.
//!
//! Trial `t` of a run owns the random stream `(seed, t)`. It draws, in this
//! order, the `M × N` channel, one 4-bit symbol per user and one CN(0, 1)
//! noise sample per user. The noise is scaled by `σ = 10^(-snr/20)` for every
//! SNR point, so all points and all (scheme, selector) arms of a run see the
//! same channels, symbols and noise directions. Per-trial results are reduced
//! in trial order, which makes every output a pure function of the
//! configuration regardless of how many workers execute the trials.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::channel::{cn01, sample_matrix, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{gamma, ComplexMatrix, C64};
use crate::precode::{receive_detect, thp_factorize, LzfPrecoder, PrecodedFrame, ThpFactors};
use crate::qam::{qam16_demap, qam16_map, QAM16_BITS};
use crate::select::{select, AntennaSubset, Selector};

pub const DEFAULT_TARGET_BIT_ERRORS: u64 = 100;

const MIN_BATCH: u64 = 256;
const MAX_BATCH: u64 = 1 << 16;

/// Precoding scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Lzf,
    ZfThp,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lzf => "lzf",
            Scheme::ZfThp => "zfthp",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lzf" | "zf" => Ok(Scheme::Lzf),
            "zfthp" | "thp" | "zf-thp" | "thp-zf" => Ok(Scheme::ZfThp),
            _ => Err(Error::UnsupportedScheme(s.to_string())),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Name used in CSV output for an optional selector.
pub fn selector_label(selector: Option<Selector>) -> &'static str {
    selector.map_or("none", Selector::name)
}

pub fn parse_selector_choice(s: &str) -> Result<Option<Selector>> {
    if s.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub scheme: Scheme,
    /// `None` transmits from the first `M` antennas.
    pub selector: Option<Selector>,
    pub snr_grid_db: Vec<f64>,
    pub max_trials: u64,
    pub target_bit_errors: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_antennas < self.n_users {
            return Err(Error::Config(format!(
                "need n >= m >= 1, got n={}, m={}",
                self.n_antennas, self.n_users
            )));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR grid has non-finite values".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("SNR grid must be strictly ascending".into()));
        }
        if self.max_trials == 0 {
            return Err(Error::Config("max_trials must be at least 1".into()));
        }
        if self.target_bit_errors == 0 {
            return Err(Error::Config("target_bit_errors must be at least 1".into()));
        }
        Ok(())
    }

    fn sigmas(&self) -> Vec<f64> {
        self.snr_grid_db.iter().map(|&s| noise_sigma(s)).collect()
    }
}

/// Noise standard deviation for `snr_db` at unit transmit power.
pub fn noise_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// `σ² = 10^(-snr/10)`.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Adds CN(0, σ²) noise drawn from `stream`.
pub fn awgn(y: &[C64], sigma2: f64, stream: RngStream) -> Vec<C64> {
    assert!(sigma2 >= 0.0, "noise variance must be non-negative");
    let mut rng = stream.rng();
    let sigma = sigma2.sqrt();
    y.iter().map(|&z| z + cn01(&mut rng) * sigma).collect()
}

/// One (scheme, selector) combination evaluated on shared trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arm {
    pub scheme: Scheme,
    pub selector: Option<Selector>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub arm: Arm,
    pub points: Vec<CurvePoint>,
    /// Trials dropped because the channel or the selected subset was singular.
    pub discarded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub snr_db: f64,
    pub realizations: u64,
    /// Mean sum rate in bits/s/Hz over all users.
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub arm: Arm,
    pub points: Vec<RatePoint>,
    pub discarded: u64,
}

struct TrialDraw {
    h: ComplexMatrix,
    bits: Vec<u8>,
    symbols: Vec<C64>,
    noise: Vec<C64>,
}

fn draw_trial(seed: u64, trial: u64, m: usize, n: usize) -> TrialDraw {
    let mut rng = RngStream::new(seed, trial).rng();
    let h = sample_matrix(m, n, &mut rng);
    let bits: Vec<u8> = (0..m).map(|_| rng.gen::<u8>() & 0x0f).collect();
    let noise = (0..m).map(|_| cn01(&mut rng)).collect();
    let symbols = bits.iter().map(|&b| qam16_map(b)).collect();
    TrialDraw {
        h,
        bits,
        symbols,
        noise,
    }
}

fn selected_channel(h: &ComplexMatrix, selector: Option<Selector>) -> Result<ComplexMatrix> {
    let subset = match selector {
        Some(sel) => select(h, sel)?.subset,
        None => AntennaSubset::first(h.rows()),
    };
    Ok(h.select_columns(subset.indices()))
}

enum Prepared {
    Lzf(LzfPrecoder),
    Thp(ThpFactors),
}

impl Prepared {
    fn new(scheme: Scheme, hp: &ComplexMatrix) -> Result<Self> {
        Ok(match scheme {
            Scheme::Lzf => Prepared::Lzf(LzfPrecoder::new(hp)?),
            Scheme::ZfThp => Prepared::Thp(thp_factorize(hp)?),
        })
    }

    fn precode(&self, s: &[C64]) -> PrecodedFrame {
        match self {
            Prepared::Lzf(p) => p.precode(s),
            Prepared::Thp(f) => crate::precode::thp_transmit(f, s),
        }
    }
}

/// Bit errors for one arm across the SNR points flagged in `active`.
fn arm_errors(
    hp: &ComplexMatrix,
    scheme: Scheme,
    draw: &TrialDraw,
    sigmas: &[f64],
    active: &[bool],
) -> Result<Vec<u32>> {
    let frame = Prepared::new(scheme, hp)?.precode(&draw.symbols);
    let clean = hp.mul_vec(&frame.x);
    let mut errors = vec![0u32; sigmas.len()];
    let mut y = vec![C64::new(0.0, 0.0); clean.len()];
    for (p, &sigma) in sigmas.iter().enumerate() {
        if !active[p] {
            continue;
        }
        for ((yk, c), w) in y.iter_mut().zip(&clean).zip(&draw.noise) {
            *yk = c + w * sigma;
        }
        let soft = receive_detect(&y, &frame.scaling);
        errors[p] = soft
            .iter()
            .zip(&draw.bits)
            .map(|(z, &b)| (qam16_demap(*z) ^ b).count_ones())
            .sum();
    }
    Ok(errors)
}

enum ArmTrial {
    Inactive,
    Discarded,
    Errors(Vec<u32>),
}

/// Runs several arms over the same trial sequence.
///
/// Each (arm, SNR) cell stops at the first trial where its accumulated bit
/// errors reach `target_bit_errors`, or at `max_trials`. `base.scheme` and
/// `base.selector` are ignored in favour of `arms`.
pub fn run_ber_arms(base: &SimConfig, arms: &[Arm]) -> Result<Vec<BerCurve>> {
    base.validate()?;
    let (m, n) = (base.n_users, base.n_antennas);
    let sigmas = base.sigmas();
    let n_snr = sigmas.len();
    let bits_per_trial = (m * QAM16_BITS) as u64;

    let mut trials = vec![vec![0u64; n_snr]; arms.len()];
    let mut errors = vec![vec![0u64; n_snr]; arms.len()];
    let mut done = vec![vec![false; n_snr]; arms.len()];
    let mut discarded = vec![0u64; arms.len()];

    let mut next = 0u64;
    let mut batch = MIN_BATCH;
    while next < base.max_trials && done.iter().flatten().any(|d| !d) {
        let end = (next + batch).min(base.max_trials);
        let active: Vec<Vec<bool>> = done
            .iter()
            .map(|row| row.iter().map(|d| !d).collect())
            .collect();
        let arm_active: Vec<bool> = active.iter().map(|a| a.iter().any(|&x| x)).collect();

        let outcomes: Vec<Vec<ArmTrial>> = (next..end)
            .into_par_iter()
            .map(|t| {
                let draw = draw_trial(base.seed, t, m, n);
                let mut cache: Vec<(Option<Selector>, Option<ComplexMatrix>)> = Vec::new();
                arms.iter()
                    .enumerate()
                    .map(|(a, arm)| {
                        if !arm_active[a] {
                            return ArmTrial::Inactive;
                        }
                        let hp = match cache.iter().find(|(s, _)| *s == arm.selector) {
                            Some((_, hp)) => hp.clone(),
                            None => {
                                let hp = selected_channel(&draw.h, arm.selector).ok();
                                cache.push((arm.selector, hp.clone()));
                                hp
                            }
                        };
                        match hp.map(|hp| arm_errors(&hp, arm.scheme, &draw, &sigmas, &active[a])) {
                            Some(Ok(e)) => ArmTrial::Errors(e),
                            _ => ArmTrial::Discarded,
                        }
                    })
                    .collect()
            })
            .collect();

        for outcome in outcomes {
            for (a, arm_trial) in outcome.into_iter().enumerate() {
                match arm_trial {
                    ArmTrial::Inactive => {}
                    ArmTrial::Discarded => {
                        if done[a].iter().any(|d| !d) {
                            discarded[a] += 1;
                        }
                    }
                    ArmTrial::Errors(e) => {
                        for p in 0..n_snr {
                            if done[a][p] {
                                continue;
                            }
                            trials[a][p] += 1;
                            errors[a][p] += u64::from(e[p]);
                            if errors[a][p] >= base.target_bit_errors {
                                done[a][p] = true;
                            }
                        }
                    }
                }
            }
        }
        next = end;
        batch = (batch * 2).min(MAX_BATCH);
    }

    Ok(arms
        .iter()
        .enumerate()
        .map(|(a, &arm)| BerCurve {
            arm,
            points: (0..n_snr)
                .map(|p| {
                    let bits = trials[a][p] * bits_per_trial;
                    CurvePoint {
                        snr_db: base.snr_grid_db[p],
                        trials: trials[a][p],
                        bit_errors: errors[a][p],
                        ber: if bits == 0 {
                            0.0
                        } else {
                            errors[a][p] as f64 / bits as f64
                        },
                    }
                })
                .collect(),
            discarded: discarded[a],
        })
        .collect())
}

/// BER curve for the scheme and selector named in `config`.
pub fn run_ber(config: &SimConfig) -> Result<Vec<CurvePoint>> {
    let arm = Arm {
        scheme: config.scheme,
        selector: config.selector,
    };
    Ok(run_ber_arms(config, &[arm])?.remove(0).points)
}

/// Per-realization LZF sum rate `K log₂(1 + ρ/γ)`.
pub fn sumrate_lzf(hp: &ComplexMatrix, rho: f64) -> Result<f64> {
    let g = gamma(hp)?;
    Ok(hp.rows() as f64 * (1.0 + rho / g).log2())
}

/// Per-realization ZF-THP sum rate `Σ log₂(1 + ρ R_ii²)`.
pub fn sumrate_thp(hp: &ComplexMatrix, rho: f64) -> Result<f64> {
    Ok(thp_rate(&thp_factorize(hp)?, rho))
}

fn thp_rate(f: &ThpFactors, rho: f64) -> f64 {
    f.r_diag().iter().map(|r| (1.0 + rho * r * r).log2()).sum()
}

fn arm_rates(hp: &ComplexMatrix, scheme: Scheme, rhos: &[f64]) -> Result<Vec<f64>> {
    Ok(match scheme {
        Scheme::Lzf => {
            let g = gamma(hp)?;
            let k = hp.rows() as f64;
            rhos.iter().map(|rho| k * (1.0 + rho / g).log2()).collect()
        }
        Scheme::ZfThp => {
            let f = thp_factorize(hp)?;
            rhos.iter().map(|&rho| thp_rate(&f, rho)).collect()
        }
    })
}

/// Mean sum rate over `max_trials` channel draws for several arms sharing the
/// same draws. `ρ = 1/σ²` for each SNR point.
pub fn run_sumrate_arms(base: &SimConfig, arms: &[Arm]) -> Result<Vec<RateCurve>> {
    base.validate()?;
    let (m, n) = (base.n_users, base.n_antennas);
    let rhos: Vec<f64> = base.snr_grid_db.iter().map(|&s| 1.0 / noise_variance(s)).collect();
    let n_snr = rhos.len();

    let mut sum = vec![vec![0.0f64; n_snr]; arms.len()];
    let mut sum_sq = vec![vec![0.0f64; n_snr]; arms.len()];
    let mut count = vec![0u64; arms.len()];
    let mut discarded = vec![0u64; arms.len()];

    let mut next = 0u64;
    while next < base.max_trials {
        let end = (next + MAX_BATCH).min(base.max_trials);
        let outcomes: Vec<Vec<Option<Vec<f64>>>> = (next..end)
            .into_par_iter()
            .map(|t| {
                let mut rng = RngStream::new(base.seed, t).rng();
                let h = sample_matrix(m, n, &mut rng);
                let mut cache: Vec<(Option<Selector>, Option<ComplexMatrix>)> = Vec::new();
                arms.iter()
                    .map(|arm| {
                        let hp = match cache.iter().find(|(s, _)| *s == arm.selector) {
                            Some((_, hp)) => hp.clone(),
                            None => {
                                let hp = selected_channel(&h, arm.selector).ok();
                                cache.push((arm.selector, hp.clone()));
                                hp
                            }
                        };
                        hp.and_then(|hp| arm_rates(&hp, arm.scheme, &rhos).ok())
                    })
                    .collect()
            })
            .collect();
        for outcome in outcomes {
            for (a, rates) in outcome.into_iter().enumerate() {
                match rates {
                    Some(r) => {
                        count[a] += 1;
                        for p in 0..n_snr {
                            sum[a][p] += r[p];
                            sum_sq[a][p] += r[p] * r[p];
                        }
                    }
                    None => discarded[a] += 1,
                }
            }
        }
        next = end;
    }

    Ok(arms
        .iter()
        .enumerate()
        .map(|(a, &arm)| {
            let k = count[a] as f64;
            RateCurve {
                arm,
                points: (0..n_snr)
                    .map(|p| {
                        let mean = if count[a] == 0 { 0.0 } else { sum[a][p] / k };
                        let var = if count[a] > 1 {
                            ((sum_sq[a][p] - k * mean * mean) / (k - 1.0)).max(0.0)
                        } else {
                            0.0
                        };
                        RatePoint {
                            snr_db: base.snr_grid_db[p],
                            realizations: count[a],
                            mean,
                            stderr: (var / k.max(1.0)).sqrt(),
                        }
                    })
                    .collect(),
                discarded: discarded[a],
            }
        })
        .collect())
}

pub fn run_sumrate(config: &SimConfig) -> Result<Vec<RatePoint>> {
    let arm = Arm {
        scheme: config.scheme,
        selector: config.selector,
    };
    Ok(run_sumrate_arms(config, &[arm])?.remove(0).points)
}

#[derive(Serialize)]
struct BerRow<'a> {
    scheme: Scheme,
    selector: &'a str,
    n: usize,
    m: usize,
    snr_db: f64,
    trials: u64,
    bit_errors: u64,
    ber: f64,
}

#[derive(Serialize)]
struct RateRow<'a> {
    scheme: Scheme,
    selector: &'a str,
    n: usize,
    m: usize,
    snr_db: f64,
    realizations: u64,
    sumrate_mean: f64,
    sumrate_stderr: f64,
}

/// Writes BER curves as CSV, one row per (arm, SNR point) with SNR as the inner loop.
pub fn write_ber_csv<W: Write>(out: W, n: usize, m: usize, curves: &[BerCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in curves {
        for p in &c.points {
            w.serialize(BerRow {
                scheme: c.arm.scheme,
                selector: selector_label(c.arm.selector),
                n,
                m,
                snr_db: p.snr_db,
                trials: p.trials,
                bit_errors: p.bit_errors,
                ber: p.ber,
            })
            .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sumrate_csv<W: Write>(out: W, n: usize, m: usize, curves: &[RateCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in curves {
        for p in &c.points {
            w.serialize(RateRow {
                scheme: c.arm.scheme,
                selector: selector_label(c.arm.selector),
                n,
                m,
                snr_db: p.snr_db,
                realizations: p.realizations,
                sumrate_mean: p.mean,
                sumrate_stderr: p.stderr,
            })
            .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SimConfig {
        SimConfig {
            n_antennas: 4,
            n_users: 4,
            scheme: Scheme::Lzf,
            selector: None,
            snr_grid_db: vec![0.0, 10.0],
            max_trials: 50,
            target_bit_errors: 100,
            seed: 1,
        }
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        let mut c = config();
        c.n_antennas = 3;
        assert!(matches!(run_ber(&c), Err(Error::Config(_))));
        let mut c = config();
        c.snr_grid_db = vec![10.0, 0.0];
        assert!(c.validate().is_err());
        let mut c = config();
        c.snr_grid_db.clear();
        assert!(c.validate().is_err());
        let mut c = config();
        c.max_trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn awgn_zero_variance_is_identity() {
        let y = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        assert_eq!(awgn(&y, 0.0, RngStream::new(3, 9)), y);
        assert_eq!(
            awgn(&y, 0.5, RngStream::new(3, 9)),
            awgn(&y, 0.5, RngStream::new(3, 9))
        );
    }

    #[test]
    fn ber_bookkeeping() {
        let pts = run_ber(&config()).unwrap();
        for p in &pts {
            assert!(p.trials <= 50);
            let expected = p.bit_errors as f64 / (p.trials * 16) as f64;
            assert_eq!(p.ber, expected);
        }
        // 0 dB with 4x4 LZF and no selection reaches 100 errors quickly
        assert!(pts[0].bit_errors >= 100 && pts[0].trials < 50);
    }

    #[test]
    fn identity_rates() {
        let i4 = ComplexMatrix::identity(4);
        assert!((sumrate_lzf(&i4, 1.0).unwrap() - 4.0 * 1.25f64.log2()).abs() < 1e-12);
        assert!((sumrate_thp(&i4, 1.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn choice_parsing() {
        assert_eq!(parse_selector_choice("none").unwrap(), None);
        assert_eq!(parse_selector_choice("maxr").unwrap(), Some(Selector::MaxR));
        assert!(parse_selector_choice("best").is_err());
        assert_eq!("thp".parse::<Scheme>().unwrap(), Scheme::ZfThp);
        assert!("mmse".parse::<Scheme>().is_err());
    }
}
