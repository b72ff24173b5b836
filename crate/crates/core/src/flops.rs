//! Flop accounting.
//!
//! A complex addition counts as one flop and a complex multiplication as
//! three. Divisions and square roots are booked as multiplications. The
//! closed-form evaluators give the worst-case cost of each selection scheme
//! as a function of the antenna count `N` and the number of RF chains `M`.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::select::Selector;

/// Operation tally. `weighted()` is the flop figure used everywhere else.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlopCount {
    pub adds: u64,
    pub mults: u64,
}

impl FlopCount {
    #[inline]
    pub fn count_add(&mut self, n: u64) {
        self.adds += n;
    }

    #[inline]
    pub fn count_mul(&mut self, n: u64) {
        self.mults += n;
    }

    #[inline]
    pub fn weighted(&self) -> u64 {
        self.adds + 3 * self.mults
    }
}

impl Add for FlopCount {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            adds: self.adds + rhs.adds,
            mults: self.mults + rhs.mults,
        }
    }
}

impl AddAssign for FlopCount {
    fn add_assign(&mut self, rhs: Self) {
        self.adds += rhs.adds;
        self.mults += rhs.mults;
    }
}

impl fmt::Display for FlopCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} flops ({} add, {} mul)", self.weighted(), self.adds, self.mults)
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form worst-case flop count of `scheme` for `n` antennas and `m` RF chains.
pub fn formula_flops(scheme: Selector, n: usize, m: usize) -> Result<f64> {
    if m == 0 || n < m {
        return Err(Error::Config(format!("need n >= m >= 1, got n={n}, m={m}")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let flops = match scheme {
        Selector::Optimum => {
            binomial(n as u64, m as u64)
                * (10.0 * mf.powi(3) - 0.5 * mf.powi(2) + 0.5 * mf - 1.0)
        }
        Selector::Rc => {
            mf.powi(2)
                * (2.0 / 3.0 * nf.powi(3) + 4.0 * mf * nf.powi(2) + 5.0 / 3.0 * mf
                    + 4.0 * mf * nf
                    - 14.0 / 3.0 * mf.powi(3)
                    - 41.0 / 12.0 * mf.powi(2)
                    - 5.0 / 4.0 * nf.powi(2)
                    - 23.0 / 12.0 * nf
                    + 11.0 / 12.0)
                + mf * (2.0 / 3.0 * nf.powi(3) + 0.25 * nf.powi(2) - 5.0 / 12.0 * nf + 0.5)
                - (nf.powi(2) + nf) / 2.0
        }
        Selector::MaxR => {
            8.0 * nf.powi(2) * mf.powi(2) + 0.25 * nf.powi(2) + 1.5 * nf.powi(2) * mf
                + 2.75 * nf * mf
                - 4.0 * nf * mf.powi(3)
                - 3.75 * nf * mf.powi(2)
                - 0.75 * nf
        }
        Selector::SingleQr => {
            8.0 * nf * mf.powi(2) + 3.5 * nf * mf
                - 4.0 * mf.powi(3)
                - 3.75 * mf.powi(2)
                - 0.25 * mf
                - 0.5 * nf
        }
    };
    Ok(flops)
}

/// Parses a scheme name and evaluates its formula.
pub fn formula_flops_named(scheme: &str, n: usize, m: usize) -> Result<f64> {
    let s: Selector = scheme.parse()?;
    formula_flops(s, n, m)
}

/// One row of the complexity comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub scheme: Selector,
    pub flops: f64,
    /// Unrounded `100 · C / C_opt`.
    pub ratio_pct: f64,
}

impl RatioRow {
    /// Ratio rounded to one decimal, or two when below 0.1.
    pub fn rounded_ratio(&self) -> String {
        format_ratio(self.ratio_pct)
    }
}

pub fn format_ratio(pct: f64) -> String {
    if pct < 0.1 {
        format!("{pct:.2}")
    } else {
        format!("{pct:.1}")
    }
}

/// Formula flops and percentage of the exhaustive-search cost for every scheme.
pub fn ratio_table(n: usize, m: usize) -> Result<Vec<RatioRow>> {
    let opt = formula_flops(Selector::Optimum, n, m)?;
    Selector::ALL
        .iter()
        .map(|&scheme| {
            let flops = formula_flops(scheme, n, m)?;
            Ok(RatioRow {
                scheme,
                flops,
                ratio_pct: 100.0 * flops / opt,
            })
        })
        .collect()
}
