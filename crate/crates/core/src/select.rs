//! Transmit antenna selection.
//!
//! Four selectors pick `M` of the `N` columns of an `M × N` channel:
//!
//! * [`select_optimum`]: exhaustive search for the minimum `γ = Tr{(H Hᴴ)⁻¹}`.
//! * [`select_rc`]: greedy removal, each round dropping the column whose
//!   deletion leaves the smallest `γ`.
//! * [`select_single_qr`]: one pivoted Gram-Schmidt pass, always taking the
//!   column with the largest residual norm; metric `D = Σ 1/R_ii²`.
//! * [`select_maxr`]: `N` Gram-Schmidt stages, stage `j` forced to start from
//!   the `j`-th strongest column, abandoning a stage as soon as its running `D`
//!   reaches the best completed metric.
//!
//! Antenna indices are 0-based in the API; the CLI reports them 1-based.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flops::FlopCount;
use crate::linalg::{gamma_or_inf, ComplexMatrix, GreedyQr, PivotRule};

/// Antenna selection algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    Optimum,
    Rc,
    MaxR,
    SingleQr,
}

impl Selector {
    pub const ALL: [Selector; 4] = [
        Selector::Optimum,
        Selector::Rc,
        Selector::MaxR,
        Selector::SingleQr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Selector::Optimum => "optimum",
            Selector::Rc => "rc",
            Selector::MaxR => "maxr",
            Selector::SingleQr => "singleqr",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "optimum" | "opt" => Ok(Selector::Optimum),
            "rc" => Ok(Selector::Rc),
            "maxr" => Ok(Selector::MaxR),
            "singleqr" | "single-qr" => Ok(Selector::SingleQr),
            _ => Err(Error::UnsupportedScheme(s.to_string())),
        }
    }
}

impl Serialize for Selector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Ordered set of distinct antenna indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AntennaSubset(Vec<usize>);

impl AntennaSubset {
    pub fn new(indices: Vec<usize>, n_antennas: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_antennas) {
            return Err(Error::InvalidSubset(format!(
                "index {bad} out of range for {n_antennas} antennas"
            )));
        }
        if !indices.iter().all_unique() {
            return Err(Error::InvalidSubset("duplicate index".into()));
        }
        Ok(Self(indices))
    }

    /// The first `m` antennas, i.e. no selection.
    pub fn first(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub subset: AntennaSubset,
    /// `γ` for optimum/RC, `D` for single-QR/maxR.
    pub metric: f64,
    pub flops: FlopCount,
}

fn check_shape(h: &ComplexMatrix) -> Result<(usize, usize)> {
    let (m, n) = (h.rows(), h.cols());
    if n < m {
        return Err(Error::Config(format!(
            "selection needs at least as many antennas as users, got {m}x{n}"
        )));
    }
    Ok((m, n))
}

/// Column submatrix `H(:, subset)` in subset order.
pub fn subset_apply(h: &ComplexMatrix, subset: &AntennaSubset) -> ComplexMatrix {
    h.select_columns(subset.indices())
}

/// Runs `selector` with its default options (maxR prunes).
pub fn select(h: &ComplexMatrix, selector: Selector) -> Result<SelectionResult> {
    match selector {
        Selector::Optimum => select_optimum(h),
        Selector::Rc => select_rc(h),
        Selector::MaxR => select_maxr(h, true),
        Selector::SingleQr => select_single_qr(h),
    }
}

pub fn select_optimum(h: &ComplexMatrix) -> Result<SelectionResult> {
    let (m, n) = check_shape(h)?;
    let mut flops = FlopCount::default();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cols in (0..n).combinations(m) {
        let g = gamma_or_inf(&h.select_columns(&cols), &mut flops);
        if g < best.as_ref().map_or(f64::INFINITY, |b| b.0) {
            best = Some((g, cols));
        }
    }
    let (metric, cols) = best.ok_or(Error::AllSingular)?;
    Ok(SelectionResult {
        subset: AntennaSubset(cols),
        metric,
        flops,
    })
}

pub fn select_rc(h: &ComplexMatrix) -> Result<SelectionResult> {
    let (m, n) = check_shape(h)?;
    let mut flops = FlopCount::default();
    let mut active: Vec<usize> = (0..n).collect();
    if n == m {
        let metric = gamma_or_inf(h, &mut flops);
        if !metric.is_finite() {
            return Err(Error::AllSingular);
        }
        return Ok(SelectionResult {
            subset: AntennaSubset(active),
            metric,
            flops,
        });
    }

    let mut metric = f64::INFINITY;
    let mut candidate = Vec::with_capacity(n);
    for _ in 0..n - m {
        let mut best = (f64::INFINITY, usize::MAX);
        for k in 0..active.len() {
            candidate.clear();
            candidate.extend(active.iter().enumerate().filter(|&(p, _)| p != k).map(|(_, &c)| c));
            let g = gamma_or_inf(&h.select_columns(&candidate), &mut flops);
            if g < best.0 {
                best = (g, k);
            }
        }
        if best.1 == usize::MAX {
            return Err(Error::AllSingular);
        }
        metric = best.0;
        active.remove(best.1);
    }
    Ok(SelectionResult {
        subset: AntennaSubset(active),
        metric,
        flops,
    })
}

pub fn select_single_qr(h: &ComplexMatrix) -> Result<SelectionResult> {
    let (m, _) = check_shape(h)?;
    let mut qr = GreedyQr::new(h);
    let first = qr.next_pivot(PivotRule::MaxNorm).expect("n >= 1");
    let mut flops = FlopCount::default();
    match run_stage(&mut qr, first, m, |_| false, &mut flops) {
        StageOutcome::Completed { metric, subset } => Ok(SelectionResult {
            subset: AntennaSubset(subset),
            metric,
            flops: qr.flops() + flops,
        }),
        StageOutcome::RankDeficient { step, residual } => {
            Err(Error::RankDeficient { step, residual })
        }
        StageOutcome::Pruned => unreachable!("single-QR never prunes"),
    }
}

enum StageOutcome {
    Completed { metric: f64, subset: Vec<usize> },
    Pruned,
    RankDeficient { step: usize, residual: f64 },
}

/// One greedy Gram-Schmidt pass forced to start at original column `start`.
/// `D` accumulates the tracked residual norm of each pivot before it is
/// committed, and the stage stops as soon as `prune(D)` fires.
fn run_stage(
    qr: &mut GreedyQr,
    start: usize,
    m: usize,
    prune: impl Fn(f64) -> bool,
    flops: &mut FlopCount,
) -> StageOutcome {
    let mut d = 0.0;
    for i in 0..m {
        let pos = if i == 0 {
            start
        } else {
            qr.next_pivot(PivotRule::MaxNorm).expect("m <= n")
        };
        d += 1.0 / qr.tnorm(pos);
        flops.count_mul(1);
        flops.count_add(1);
        if prune(d) {
            return StageOutcome::Pruned;
        }
        if let Err(Error::RankDeficient { step, residual }) = qr.commit(pos) {
            return StageOutcome::RankDeficient { step, residual };
        }
    }
    StageOutcome::Completed {
        metric: d,
        subset: qr.selected().to_vec(),
    }
}

/// Stage start order: columns by descending squared norm, ties to the lower index.
fn stage_order(norms: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
}

pub fn select_maxr(h: &ComplexMatrix, prune: bool) -> Result<SelectionResult> {
    let (m, _) = check_shape(h)?;
    let base = GreedyQr::new(h);
    let mut flops = base.flops();
    let base = base.with_cleared_flops();
    let order = stage_order(base.norms());

    let mut best: Option<(f64, Vec<usize>)> = None;
    for &start in &order {
        let bm = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        let mut qr = base.clone();
        let mut stage_flops = FlopCount::default();
        let outcome = run_stage(&mut qr, start, m, |d| prune && d >= bm, &mut stage_flops);
        flops += qr.flops() + stage_flops;
        if let StageOutcome::Completed { metric, subset } = outcome {
            if metric < bm {
                best = Some((metric, subset));
            }
        }
    }
    let (metric, subset) = best.ok_or(Error::AllSingular)?;
    Ok(SelectionResult {
        subset: AntennaSubset(subset),
        metric,
        flops,
    })
}

/// Stage index, completed `(D, subset)` if any, and the work done.
type StageRecord = (usize, Option<(f64, Vec<usize>)>, FlopCount);

/// maxR with stages evaluated concurrently.
///
/// Each stage prunes against a snapshot of the best completed `(D, stage)`;
/// equal `D` only prunes when the snapshot comes from an earlier stage, so the
/// winner is always the earliest stage with the smallest `D`, exactly as in
/// the sequential run. The flop count reflects the work actually done and
/// therefore depends on scheduling.
pub fn select_maxr_parallel(h: &ComplexMatrix) -> Result<SelectionResult> {
    let (m, _) = check_shape(h)?;
    let base = GreedyQr::new(h);
    let base_flops = base.flops();
    let base = base.with_cleared_flops();
    let order = stage_order(base.norms());
    let snapshot = Mutex::new((f64::INFINITY, usize::MAX));

    let stages: Vec<StageRecord> = order
        .par_iter()
        .enumerate()
        .map(|(stage, &start)| {
            let (bm, bm_stage) = *snapshot.lock().expect("poisoned");
            let mut qr = base.clone();
            let mut stage_flops = FlopCount::default();
            let outcome = run_stage(
                &mut qr,
                start,
                m,
                |d| d > bm || (d == bm && bm_stage < stage),
                &mut stage_flops,
            );
            let done = match outcome {
                StageOutcome::Completed { metric, subset } => {
                    let mut snap = snapshot.lock().expect("poisoned");
                    if metric < snap.0 || (metric == snap.0 && stage < snap.1) {
                        *snap = (metric, stage);
                    }
                    Some((metric, subset))
                }
                _ => None,
            };
            (stage, done, qr.flops() + stage_flops)
        })
        .collect();

    let mut flops = base_flops;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (_, done, f) in stages {
        flops += f;
        if let Some((metric, subset)) = done {
            if metric < best.as_ref().map_or(f64::INFINITY, |b| b.0) {
                best = Some((metric, subset));
            }
        }
    }
    let (metric, subset) = best.ok_or(Error::AllSingular)?;
    Ok(SelectionResult {
        subset: AntennaSubset(subset),
        metric,
        flops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gamma;

    fn toy() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]).unwrap()
    }

    #[test]
    fn optimum_on_toy_channel() {
        let r = select_optimum(&toy()).unwrap();
        assert_eq!(r.subset.indices(), &[0, 1]);
        assert!((r.metric - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rc_on_toy_channel() {
        let r = select_rc(&toy()).unwrap();
        assert_eq!(r.subset.indices(), &[0, 1]);
        assert!((r.metric - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rc_without_surplus_returns_everything() {
        let h = ComplexMatrix::diagonal(&[2.0, 1.0]);
        let r = select_rc(&h).unwrap();
        assert_eq!(r.subset.indices(), &[0, 1]);
        assert!((r.metric - 1.25).abs() < 1e-15);
    }

    #[test]
    fn single_qr_on_toy_channel() {
        let r = select_single_qr(&toy()).unwrap();
        assert_eq!(r.subset.indices(), &[2, 0]);
        assert!((r.metric - 2.5).abs() < 1e-12);
    }

    #[test]
    fn maxr_on_toy_channel() {
        for prune in [true, false] {
            let r = select_maxr(&toy(), prune).unwrap();
            assert_eq!(r.subset.indices(), &[0, 1]);
            assert!((r.metric - 2.0).abs() < 1e-12);
        }
        let p = select_maxr_parallel(&toy()).unwrap();
        assert_eq!(p.subset.indices(), &[0, 1]);
        assert!(select_maxr(&toy(), true).unwrap().flops.weighted()
            < select_maxr(&toy(), false).unwrap().flops.weighted());
    }

    #[test]
    fn orthogonal_columns_pick_strongest() {
        let h = ComplexMatrix::diagonal(&[1.0, 3.0, 2.0]).select_columns(&[0, 1, 2]);
        // three users, three antennas: only one subset
        let r = select_single_qr(&h).unwrap();
        assert_eq!(r.subset.indices(), &[1, 2, 0]);
        let expected = 1.0 / 9.0 + 1.0 / 4.0 + 1.0;
        assert!((r.metric - expected).abs() < 1e-14);
        assert!((select_optimum(&h).unwrap().metric - expected).abs() < 1e-14);
        let mr = select_maxr(&h, true).unwrap();
        assert_eq!(mr.subset, r.subset);
        assert_eq!(mr.metric, r.metric);
    }

    #[test]
    fn all_singular_detected() {
        let h = ComplexMatrix::from_real(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(select_optimum(&h).unwrap_err(), Error::AllSingular);
        assert_eq!(select_rc(&h).unwrap_err(), Error::AllSingular);
        assert_eq!(select_maxr(&h, true).unwrap_err(), Error::AllSingular);
        assert!(matches!(
            select_single_qr(&h).unwrap_err(),
            Error::RankDeficient { step: 2, .. }
        ));
    }

    #[test]
    fn subset_validation_and_apply() {
        assert!(AntennaSubset::new(vec![0, 0], 3).is_err());
        assert!(AntennaSubset::new(vec![3], 3).is_err());
        let s = AntennaSubset::new(vec![1, 0], 2).unwrap();
        let h = ComplexMatrix::identity(2);
        let swapped = subset_apply(&h, &s);
        assert_eq!(swapped.column(0), h.column(1));
        assert_eq!(s.one_based(), vec![2, 1]);
        assert_eq!(subset_apply(&h, &AntennaSubset::first(2)), h);
    }

    #[test]
    fn optimum_metric_replays() {
        let h = toy();
        let r = select_optimum(&h).unwrap();
        assert_eq!(gamma(&subset_apply(&h, &r.subset)).unwrap(), r.metric);
    }

    #[test]
    fn selector_names_round_trip() {
        for s in Selector::ALL {
            assert_eq!(s.name().parse::<Selector>().unwrap(), s);
        }
        assert!("none".parse::<Selector>().is_err());
    }
}
