//! Exit criteria. Each test prints a single `PASS`/`FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads 1` to see them.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use common::{brute_force_min, crossing_db, gamma_via_qr, random_channel, random_unitary, rel_diff};
use mimo_tas::flops::ratio_table;
use mimo_tas::linalg::{d_metric, gamma, gamma_from_r, qrd_mgs, ComplexMatrix, PivotRule};
use mimo_tas::precode::{receive_detect, thp_factorize, thp_transmit};
use mimo_tas::qam::{qam16_demap, qam16_map};
use mimo_tas::select::{select_maxr, select_optimum, select_rc, select_single_qr, Selector};
use mimo_tas::sim::{run_ber_arms, run_sumrate_arms, Arm, BerCurve, Scheme, SimConfig};
use rand::Rng;

const SEED: u64 = 1;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn sorted(idx: &[usize]) -> Vec<usize> {
    let mut v = idx.to_vec();
    v.sort_unstable();
    v
}

fn gamma_of(h: &ComplexMatrix, idx: &[usize]) -> f64 {
    gamma(&h.select_columns(&sorted(idx))).unwrap_or(f64::INFINITY)
}

#[test]
fn criterion_1_complexity_ratios() {
    let start = Instant::now();
    let fmt = |n, m| -> Vec<String> {
        ratio_table(n, m)
            .unwrap()
            .iter()
            .skip(1)
            .map(|r| r.rounded_ratio())
            .collect()
    };
    let small = fmt(8, 4);
    let large = fmt(14, 10);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = small == ["41.1", "13.9", "1.8"] && large == ["5.2", "1.0", "0.07"] && elapsed < 1.0;
    report(
        1,
        "complexity ratios",
        pass,
        &format!("(8,4) {small:?} (14,10) {large:?} in {elapsed:.3}s"),
    );
}

#[test]
fn criterion_2_optimum_matches_brute_force() {
    let start = Instant::now();
    let mut dims = Shapes::new(2);
    let (mut mismatches, mut value_drift) = (0, 0.0f64);
    for t in 0..10_000u64 {
        let (m, n) = dims.draw();
        let h = random_channel(m, n, SEED, 20_000 + t);
        let got = select_optimum(&h).unwrap();
        let (want, g) = brute_force_min(&h, |hp| gamma(hp).ok()).unwrap();
        if got.subset.indices() != want.as_slice() || got.metric != g {
            mismatches += 1;
        }
        let (_, g_ref) = brute_force_min(&h, |hp| Some(gamma_via_qr(hp))).unwrap();
        value_drift = value_drift.max(rel_diff(got.metric, g_ref));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && value_drift < 1e-9 && elapsed < 60.0;
    report(
        2,
        "optimum vs brute force",
        pass,
        &format!(
            "{mismatches} mismatches in 10^4 channels, max rel diff to QR-route minimum {value_drift:.1e}, {elapsed:.1}s"
        ),
    );
}

#[test]
fn criterion_3_dominance_invariants() {
    let start = Instant::now();
    let mut dims = Shapes::new(3);
    let mut violations = Vec::new();
    for t in 0..10_000u64 {
        let (m, n) = dims.draw();
        let h = random_channel(m, n, SEED, 30_000 + t);
        let opt = select_optimum(&h).unwrap();
        let g_opt = gamma_of(&h, opt.subset.indices());
        let rc = select_rc(&h).unwrap();
        let sqr = select_single_qr(&h).unwrap();
        let maxr = select_maxr(&h, true).unwrap();
        let maxr_full = select_maxr(&h, false).unwrap();
        for (name, s) in [("rc", &rc), ("maxr", &maxr), ("singleqr", &sqr)] {
            if g_opt > gamma_of(&h, s.subset.indices()) {
                violations.push(format!("trial {t}: gamma_opt > gamma_{name}"));
            }
        }
        if maxr.metric > sqr.metric {
            violations.push(format!("trial {t}: D_maxr > D_singleqr"));
        }
        if maxr.subset.indices() != maxr_full.subset.indices() || maxr.metric != maxr_full.metric {
            violations.push(format!("trial {t}: pruning changed the maxr result"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = violations.is_empty() && elapsed < 60.0;
    report(
        3,
        "dominance invariants",
        pass,
        &format!(
            "{} violations in 10^4 trials, {elapsed:.1}s {:?}",
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_4_trace_identities() {
    let mut dims = Shapes::new(4);
    let (mut worst_trace, mut worst_eq, mut bound_violations) = (0.0f64, 0.0f64, 0);
    for t in 0..1_000u64 {
        let m = dims.0.gen_range(1..=8);
        let h = random_channel(m, m, SEED, 40_000 + t);
        let f = qrd_mgs(&h, m, PivotRule::MaxNorm).unwrap();
        let g = gamma(&h).unwrap();
        worst_trace = worst_trace.max(rel_diff(g, gamma_from_r(&f.r).unwrap()));
        if g < d_metric(&f.r) * (1.0 - 1e-12) {
            bound_violations += 1;
        }

        let u = random_unitary(m, SEED, 41_000 + t);
        let scales: Vec<f64> = (0..m).map(|_| dims.0.gen_range(0.2..3.0)).collect();
        let h = u.matmul(&ComplexMatrix::diagonal(&scales)).unwrap();
        let f = qrd_mgs(&h, m, PivotRule::MaxNorm).unwrap();
        worst_eq = worst_eq.max(rel_diff(gamma(&h).unwrap(), d_metric(&f.r)));
    }
    let pass = worst_trace < 1e-8 && bound_violations == 0 && worst_eq < 1e-9;
    report(
        4,
        "trace identities",
        pass,
        &format!(
            "GJ vs triangular route {worst_trace:.1e}, {bound_violations} bound violations, orthogonal-column equality {worst_eq:.1e} over 10^3 trials"
        ),
    );
}

#[test]
fn criterion_5_thp_noiseless_recovery() {
    let mut rng = mimo_tas::channel::RngStream::new(SEED, 5).rng();
    let mut failures = 0;
    for t in 0..1_000u64 {
        let h = random_channel(4, 4, SEED, 50_000 + t);
        let bits: Vec<u8> = (0..4).map(|_| rng.gen::<u8>() & 0x0f).collect();
        let s: Vec<_> = bits.iter().map(|&b| qam16_map(b)).collect();
        let frame = thp_transmit(&thp_factorize(&h).unwrap(), &s);
        let y = h.mul_vec(&frame.x);
        let got: Vec<u8> = receive_detect(&y, &frame.scaling)
            .iter()
            .map(|&z| qam16_demap(z))
            .collect();
        if got != bits {
            failures += 1;
        }
    }
    report(
        5,
        "THP noiseless recovery",
        failures == 0,
        &format!("{failures} of 10^3 4x4 channels decoded wrongly"),
    );
}

struct BerRuns {
    lzf: Vec<BerCurve>,
    thp: Vec<BerCurve>,
}

fn ber_config(grid: std::ops::RangeInclusive<i32>) -> SimConfig {
    SimConfig {
        n_antennas: 8,
        n_users: 4,
        scheme: Scheme::Lzf,
        selector: None,
        snr_grid_db: grid.map(f64::from).collect(),
        max_trials: 1_000_000,
        target_bit_errors: 100,
        seed: SEED,
    }
}

fn arms(scheme: Scheme) -> Vec<Arm> {
    Selector::ALL
        .iter()
        .map(|&s| Arm {
            scheme,
            selector: Some(s),
        })
        .collect()
}

fn ber_runs() -> &'static BerRuns {
    static RUNS: OnceLock<BerRuns> = OnceLock::new();
    RUNS.get_or_init(|| BerRuns {
        lzf: run_ber_arms(&ber_config(14..=27), &arms(Scheme::Lzf)).unwrap(),
        thp: run_ber_arms(&ber_config(10..=22), &arms(Scheme::ZfThp)).unwrap(),
    })
}

fn crossing(curve: &BerCurve, target: f64) -> f64 {
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.snr_db, p.ber)).collect();
    crossing_db(&pts, target).unwrap_or(f64::NAN)
}

fn gaps(curves: &[BerCurve], target: f64) -> Vec<f64> {
    let opt = crossing(&curves[0], target);
    curves[1..].iter().map(|c| crossing(c, target) - opt).collect()
}

#[test]
fn criterion_6_ber_selector_gaps() {
    let runs = ber_runs();
    let within = |got: &[f64], want: &[f64], tol: f64| {
        got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
    };
    let lzf = gaps(&runs.lzf, 1e-4);
    let thp = gaps(&runs.thp, 1e-4);
    let lzf_ok = within(&lzf, &[0.25, 0.8, 1.8], 0.4);
    let thp_ok = within(&thp, &[0.05, 0.09, 0.5], 0.3);
    report(
        6,
        "BER selector gaps at 1e-4",
        lzf_ok && thp_ok,
        &format!(
            "LZF rc/maxr/singleqr {} dB ({}); THP {} dB ({})",
            fmt_list(&lzf),
            if lzf_ok { "ok" } else { "out of range" },
            fmt_list(&thp),
            if thp_ok { "ok" } else { "out of range" },
        ),
    );
}

#[test]
fn criterion_7_thp_over_lzf() {
    let runs = ber_runs();
    let lzf = &runs.lzf[0];
    let thp = &runs.thp[0];
    let advantage: Vec<f64> = [1e-4, 1e-5]
        .iter()
        .map(|&t| crossing(lzf, t) - crossing(thp, t))
        .collect();
    let left = lzf.points.iter().all(|p| {
        thp.points
            .iter()
            .find(|q| q.snr_db == p.snr_db)
            .is_none_or(|q| q.ber <= p.ber)
    });
    let pass = left && advantage.iter().all(|g| (2.0..=3.3).contains(g));
    report(
        7,
        "THP advantage over LZF",
        pass,
        &format!(
            "optimum-selector gap at 1e-4/1e-5 = {} dB, THP left of LZF: {left}",
            fmt_list(&advantage)
        ),
    );
}

#[test]
fn criterion_8_sum_rate_gaps() {
    let base = SimConfig {
        n_antennas: 12,
        n_users: 4,
        scheme: Scheme::Lzf,
        selector: None,
        snr_grid_db: vec![30.0],
        max_trials: 10_000,
        target_bit_errors: 100,
        seed: SEED,
    };
    let per_user = |curves: &[mimo_tas::sim::RateCurve]| -> Vec<f64> {
        curves.iter().map(|c| c.points[0].mean / 4.0).collect()
    };
    let lzf = per_user(&run_sumrate_arms(&base, &arms(Scheme::Lzf)).unwrap());
    let thp = per_user(&run_sumrate_arms(&base, &arms(Scheme::ZfThp)).unwrap());
    let lzf_gaps: Vec<f64> = lzf[1..].iter().map(|r| lzf[0] - r).collect();
    let lzf_ok = lzf_gaps
        .iter()
        .zip([0.045, 0.07, 0.2])
        .all(|(g, w)| (g - w).abs() <= 0.5 * w);
    let thp_ok = thp[2] >= thp[0] - 0.05;
    report(
        8,
        "sum-rate gaps at 30 dB",
        lzf_ok && thp_ok,
        &format!(
            "LZF per-user gaps rc/maxr/singleqr {}; THP per-user maxr {:.3} vs optimum {:.3}",
            fmt_list(&lzf_gaps),
            thp[2],
            thp[0]
        ),
    );
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/")
}

/// Random test shapes with `M <= 4` and `M <= N <= 8`.
struct Shapes(rand_chacha::ChaCha8Rng);

impl Shapes {
    fn new(stream: u64) -> Self {
        Self(mimo_tas::channel::RngStream::new(SEED, stream).rng())
    }

    fn draw(&mut self) -> (usize, usize) {
        let m = self.0.gen_range(1..=4);
        (m, self.0.gen_range(m..=8))
    }
}
