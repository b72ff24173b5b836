//! Downlink precoders and the matching single-antenna receivers.
//!
//! Linear zero-forcing scales the channel pseudo-inverse by `1/√γ` so that the
//! expected transmit power is one for unit-energy symbols. Zero-forcing THP
//! factors `Hᴴ = QR`, pre-subtracts known interference user by user through the
//! unit lower-triangular feedback matrix `B = G Rᴴ`, folds every symbol back
//! into the modulo cell and transmits `x = Q v`. Receiver `k` then sees
//! `g_k y_k ≡ s_k` modulo the `τ` lattice.

use crate::error::{Error, Result};
use crate::linalg::{
    gauss_jordan_inverse, qrd_mgs, ComplexMatrix, PivotRule, C64, ONE, ZERO,
};
use crate::qam::QAM16_TAU;

/// Modulo operation folding both components into `[-τ/2, τ/2)`.
#[inline]
pub fn mod_tau(a: C64, tau: f64) -> C64 {
    let fold = |x: f64| x - (x / tau + 0.5).floor() * tau;
    C64::new(fold(a.re), fold(a.im))
}

/// What each receiver needs to undo the precoder.
#[derive(Debug, Clone, PartialEq)]
pub enum ReceiverScaling {
    /// Linear precoding: every user multiplies by `√γ`.
    Linear { gamma: f64 },
    /// THP: user `k` multiplies by `g[k]` and applies the modulo.
    Thp { g: Vec<f64>, tau: f64 },
}

#[derive(Debug, Clone)]
pub struct PrecodedFrame {
    pub x: Vec<C64>,
    pub scaling: ReceiverScaling,
}

/// Prepared linear zero-forcing precoder for one channel realization.
#[derive(Debug, Clone)]
pub struct LzfPrecoder {
    pinv: ComplexMatrix,
    gamma: f64,
}

impl LzfPrecoder {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        if h.rows() > h.cols() {
            return Err(Error::DimensionMismatch(format!(
                "LZF needs users <= antennas, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        let inv = gauss_jordan_inverse(&h.gram())?;
        let gamma = inv.trace().re;
        let pinv = h.hermitian().matmul(&inv)?;
        Ok(Self { pinv, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn precode(&self, s: &[C64]) -> PrecodedFrame {
        let scale = 1.0 / self.gamma.sqrt();
        PrecodedFrame {
            x: self.pinv.mul_vec(s).into_iter().map(|z| z * scale).collect(),
            scaling: ReceiverScaling::Linear { gamma: self.gamma },
        }
    }
}

pub fn lzf_precode(h: &ComplexMatrix, s: &[C64]) -> Result<PrecodedFrame> {
    Ok(LzfPrecoder::new(h)?.precode(s))
}

/// Regularized inverse `Hᴴ(H Hᴴ + αI)⁻¹` without power normalization.
pub fn lmmse_matrix(h: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    let mut gram = h.gram();
    for i in 0..gram.rows() {
        gram[(i, i)] += alpha;
    }
    h.hermitian().matmul(&gauss_jordan_inverse(&gram)?)
}

/// LMMSE precoding with `α = k·σ²` at unit total power, normalized so the
/// expected transmit power is one.
pub fn lmmse_precode(h: &ComplexMatrix, s: &[C64], sigma2: f64, k: usize) -> Result<PrecodedFrame> {
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(Error::Config(format!("sigma2 must be positive, got {sigma2}")));
    }
    let w = lmmse_matrix(h, k as f64 * sigma2)?;
    let gamma: f64 = w.as_slice().iter().map(|z| z.norm_sqr()).sum();
    let scale = 1.0 / gamma.sqrt();
    Ok(PrecodedFrame {
        x: w.mul_vec(s).into_iter().map(|z| z * scale).collect(),
        scaling: ReceiverScaling::Linear { gamma },
    })
}

/// Feedforward, feedback and receiver scalings of a THP transmitter.
#[derive(Debug, Clone)]
pub struct ThpFactors {
    /// `Qᴴ`; only its first `n_tx` columns drive antennas.
    pub f: ComplexMatrix,
    /// Unit lower-triangular feedback `G Rᴴ`.
    pub b: ComplexMatrix,
    /// Receiver scalings `1/R_ii`.
    pub g: Vec<f64>,
    pub tau: f64,
    /// Triangular factor of `Hᴴ` (or of the regularized `H̃ᴴ`).
    pub r: ComplexMatrix,
    pub n_tx: usize,
}

impl ThpFactors {
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.r.rows()).map(|i| self.r[(i, i)].re).collect()
    }

    /// `Q` restricted to the transmit antennas.
    pub fn q(&self) -> ComplexMatrix {
        self.f.hermitian()
    }
}

fn thp_from_hh(hh: &ComplexMatrix, n_tx: usize) -> Result<ThpFactors> {
    let m = hh.cols();
    if hh.rows() < m {
        return Err(Error::DimensionMismatch(format!(
            "THP needs users <= antennas, got {m} users and {} antennas",
            hh.rows()
        )));
    }
    let qr = qrd_mgs(hh, m, PivotRule::InOrder)?;
    let g: Vec<f64> = qr.r_diag().iter().map(|d| 1.0 / d).collect();
    let mut b = ComplexMatrix::zeros(m, m);
    for k in 0..m {
        for j in 0..k {
            b[(k, j)] = qr.r[(j, k)].conj() * g[k];
        }
        b[(k, k)] = ONE;
    }
    Ok(ThpFactors {
        f: qr.q.hermitian(),
        b,
        g,
        tau: QAM16_TAU,
        r: qr.r,
        n_tx,
    })
}

/// ZF-THP factors from the QR decomposition of `Hᴴ` in natural user order.
pub fn thp_factorize(h: &ComplexMatrix) -> Result<ThpFactors> {
    thp_from_hh(&h.hermitian(), h.cols())
}

/// THP factors from the QR decomposition of `[H  √α I]ᴴ` with `α = k·σ²`.
pub fn thp_factorize_regularized(h: &ComplexMatrix, sigma2: f64, k: usize) -> Result<ThpFactors> {
    if sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(Error::Config(format!("sigma2 must be non-negative, got {sigma2}")));
    }
    let alpha = k as f64 * sigma2;
    if alpha == 0.0 {
        return thp_factorize(h);
    }
    let aug = h.hstack(&ComplexMatrix::identity(h.rows()).scale(alpha.sqrt()))?;
    thp_from_hh(&aug.hermitian(), h.cols())
}

/// Successive modulo pre-subtraction followed by the feedforward filter.
pub fn thp_transmit(factors: &ThpFactors, s: &[C64]) -> PrecodedFrame {
    let m = factors.g.len();
    assert_eq!(s.len(), m, "symbol vector length must equal user count");
    let mut v = vec![ZERO; m];
    for k in 0..m {
        let interference: C64 = (0..k).map(|j| factors.b[(k, j)] * v[j]).sum();
        v[k] = mod_tau(s[k] - interference, factors.tau);
    }
    let x = (0..factors.n_tx)
        .map(|i| (0..m).map(|k| factors.f[(k, i)].conj() * v[k]).sum())
        .collect();
    PrecodedFrame {
        x,
        scaling: ReceiverScaling::Thp {
            g: factors.g.clone(),
            tau: factors.tau,
        },
    }
}

/// Per-user receiver processing, producing soft symbols for demapping.
pub fn receive_detect(y: &[C64], scaling: &ReceiverScaling) -> Vec<C64> {
    match scaling {
        ReceiverScaling::Linear { gamma } => {
            let s = gamma.sqrt();
            y.iter().map(|z| z * s).collect()
        }
        ReceiverScaling::Thp { g, tau } => {
            assert_eq!(y.len(), g.len(), "receive vector length mismatch");
            y.iter().zip(g).map(|(z, gk)| mod_tau(z * gk, *tau)).collect()
        }
    }
}
