//! Reference routines shared by the integration tests. Nothing here calls
//! into the library's factorization or inversion code.

#![allow(dead_code)]

use mimo_tas::channel::{sample_matrix, RngStream};
use mimo_tas::linalg::{ComplexMatrix, C64};

pub fn random_channel(m: usize, n: usize, seed: u64, stream: u64) -> ComplexMatrix {
    sample_matrix(m, n, &mut RngStream::new(seed, stream).rng())
}

fn col(a: &ComplexMatrix, j: usize) -> Vec<C64> {
    (0..a.rows()).map(|i| a[(i, j)]).collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Classical Gram-Schmidt without pivoting. Returns Q by columns and R by rows.
pub fn cgs_qr(a: &ComplexMatrix) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let (rows, cols) = (a.rows(), a.cols());
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut r = vec![vec![C64::new(0.0, 0.0); cols]; cols];
    for j in 0..cols {
        let aj = col(a, j);
        let mut v = aj.clone();
        for (i, qi) in q.iter().enumerate() {
            let rij = dot(qi, &aj);
            r[i][j] = rij;
            for k in 0..rows {
                v[k] -= rij * qi[k];
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        r[j][j] = C64::new(nrm, 0.0);
        q.push(v.iter().map(|z| z / nrm).collect());
    }
    (q, r)
}

/// Inverse of an upper triangular matrix by column-wise back substitution.
pub fn triangular_inverse(r: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = r.len();
    let mut inv = vec![vec![C64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        inv[j][j] = C64::new(1.0, 0.0) / r[j][j];
        for i in (0..j).rev() {
            let s: C64 = (i + 1..=j).map(|k| r[i][k] * inv[k][j]).sum();
            inv[i][j] = -s / r[i][i];
        }
    }
    inv
}

/// `Tr{(H Hᴴ)⁻¹}` from the unpivoted QR of `Hᴴ`: `H Hᴴ = Rᴴ R`.
pub fn gamma_via_qr(h: &ComplexMatrix) -> f64 {
    let (_, r) = cgs_qr(&h.hermitian());
    triangular_inverse(&r)
        .iter()
        .flatten()
        .map(|z| z.norm_sqr())
        .sum()
}

/// Every `m`-subset of `0..n` in lexicographic order, built from bitmasks.
pub fn lex_subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == m)
        .map(|mask| (0..n).filter(|&j| mask >> j & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// Brute-force arg-min of `metric` over all `m`-subsets; first minimum wins.
pub fn brute_force_min<F>(h: &ComplexMatrix, mut metric: F) -> Option<(Vec<usize>, f64)>
where
    F: FnMut(&ComplexMatrix) -> Option<f64>,
{
    let mut best: Option<(Vec<usize>, f64)> = None;
    for s in lex_subsets(h.cols(), h.rows()) {
        let Some(g) = metric(&h.select_columns(&s)) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| g < *b) {
            best = Some((s, g));
        }
    }
    best
}

/// Random unitary matrix from the Q factor of a Gaussian draw.
pub fn random_unitary(n: usize, seed: u64, stream: u64) -> ComplexMatrix {
    let (q, _) = cgs_qr(&random_channel(n, n, seed, stream));
    ComplexMatrix::from_columns(&q).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// SNR at which a BER curve first crosses `target`, interpolating
/// `log10(ber)` linearly between grid points.
pub fn crossing_db(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 < target && b0 > 0.0 {
            if b1 <= 0.0 {
                return Some(s1);
            }
            let (l0, l1) = (b0.log10(), b1.log10());
            Some(s0 + (l0 - lt) / (l0 - l1) * (s1 - s0))
        } else {
            None
        }
    })
}
