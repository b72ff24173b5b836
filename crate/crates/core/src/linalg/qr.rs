//! Greedy modified Gram-Schmidt QR with column exchange and residual-norm
//! tracking.
//!
//! The stepper works on a full working copy of the input columns. Each
//! committed step moves the chosen column into the next position, normalizes
//! it, and orthogonalizes every column to its right while downdating their
//! squared residual norms (`Tnorms`). Selectors drive the stepper directly so
//! they can inspect the candidate norm before paying for the step.

use crate::error::{Error, Result};
use crate::flops::FlopCount;
use crate::linalg::matrix::{ComplexMatrix, C64, ZERO};

/// Squared residual norm at or below which a pivot is declared unusable.
pub const RANK_TOL: f64 = 1e-12;

/// How the next pivot column is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Always take the remaining column with the largest residual norm.
    MaxNorm,
    /// First step takes this original column (0-based), then max-norm.
    FixedFirst(usize),
    /// No pivoting: columns are taken in their original order.
    InOrder,
}

/// Result of a (possibly truncated) pivoted QR factorization.
#[derive(Debug, Clone)]
pub struct QrFactors {
    /// rows × k, orthonormal columns.
    pub q: ComplexMatrix,
    /// k × k upper triangular with real non-negative diagonal.
    pub r: ComplexMatrix,
    /// Original (0-based) column index taken at each step.
    pub perm: Vec<usize>,
    /// Tracked squared residual norm per original column; 0 for selected ones.
    pub residual_norms: Vec<f64>,
}

impl QrFactors {
    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.r.rows()).map(|i| self.r[(i, i)].re).collect()
    }
}

/// Incremental Gram-Schmidt state.
#[derive(Debug, Clone)]
pub struct GreedyQr {
    rows: usize,
    /// Working columns by position.
    q: Vec<Vec<C64>>,
    /// Row `i` of R, indexed by position.
    r: Vec<Vec<C64>>,
    tnorms: Vec<f64>,
    perm: Vec<usize>,
    flops: FlopCount,
}

impl GreedyQr {
    pub fn new(a: &ComplexMatrix) -> Self {
        let q = a.columns();
        let mut flops = FlopCount::default();
        let tnorms: Vec<f64> = q
            .iter()
            .map(|col| col.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        flops.count_mul((a.rows() * a.cols()) as u64);
        flops.count_add(((a.rows() - 1) * a.cols()) as u64);
        Self {
            rows: a.rows(),
            perm: (0..a.cols()).collect(),
            q,
            r: Vec::new(),
            tnorms,
            flops,
        }
    }

    /// Number of committed steps.
    #[inline]
    pub fn steps(&self) -> usize {
        self.r.len()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.q.len()
    }

    pub fn flops(&self) -> FlopCount {
        self.flops
    }

    /// Same state with the operation tally reset, for cloning into stages.
    pub fn with_cleared_flops(mut self) -> Self {
        self.flops = FlopCount::default();
        self
    }

    /// Tracked squared residual norm of the column currently at `pos`.
    #[inline]
    pub fn tnorm(&self, pos: usize) -> f64 {
        self.tnorms[pos]
    }

    /// Original column index currently at `pos`.
    #[inline]
    pub fn original(&self, pos: usize) -> usize {
        self.perm[pos]
    }

    /// Initial squared column norms (only meaningful before any step).
    pub fn norms(&self) -> &[f64] {
        &self.tnorms
    }

    /// Position of the next pivot under `rule`; `None` once every column is used.
    pub fn next_pivot(&self, rule: PivotRule) -> Option<usize> {
        let i = self.steps();
        if i >= self.n_cols() {
            return None;
        }
        match rule {
            PivotRule::InOrder => Some(i),
            PivotRule::FixedFirst(j) if i == 0 => Some(j),
            PivotRule::FixedFirst(_) | PivotRule::MaxNorm => {
                let mut best = i;
                for m in i + 1..self.n_cols() {
                    let (tm, tb) = (self.tnorms[m], self.tnorms[best]);
                    if tm > tb || (tm == tb && self.perm[m] < self.perm[best]) {
                        best = m;
                    }
                }
                Some(best)
            }
        }
    }

    /// Commits the column at position `k` as the next pivot.
    pub fn commit(&mut self, k: usize) -> Result<()> {
        let i = self.steps();
        assert!(k >= i && k < self.n_cols(), "pivot position out of range");
        if self.tnorms[k] <= RANK_TOL {
            return Err(Error::RankDeficient {
                step: i + 1,
                residual: self.tnorms[k],
            });
        }
        if k != i {
            self.q.swap(i, k);
            self.tnorms.swap(i, k);
            self.perm.swap(i, k);
            for row in &mut self.r {
                row.swap(i, k);
            }
        }

        let rows = self.rows as u64;
        let n = self.n_cols();
        let rii = self.q[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // norm: rows mults, rows-1 adds, one square root
        self.flops.count_mul(rows + 1);
        self.flops.count_add(rows - 1);
        if rii <= RANK_TOL {
            return Err(Error::RankDeficient {
                step: i + 1,
                residual: rii * rii,
            });
        }
        let inv = 1.0 / rii;
        self.q[i].iter_mut().for_each(|z| *z *= inv);
        self.flops.count_mul(rows + 1);

        let mut r_row = vec![ZERO; n];
        r_row[i] = C64::new(rii, 0.0);
        let (head, tail) = self.q.split_at_mut(i + 1);
        let qi = &head[i];
        for (off, qm) in tail.iter_mut().enumerate() {
            let m = i + 1 + off;
            let rim: C64 = qi.iter().zip(qm.iter()).map(|(a, b)| a.conj() * b).sum();
            for (b, a) in qm.iter_mut().zip(qi) {
                *b -= rim * a;
            }
            let t = self.tnorms[m] - rim.norm_sqr();
            self.tnorms[m] = t.max(0.0);
            r_row[m] = rim;
        }
        // per remaining column: inner product, axpy, norm downdate
        let rem = (n - i - 1) as u64;
        self.flops.count_mul(rem * (2 * rows + 1));
        self.flops.count_add(rem * (2 * rows));
        self.r.push(r_row);
        Ok(())
    }

    /// Freshly computed squared residual norms of the columns still unselected,
    /// in position order.
    pub fn fresh_residual_norms(&self) -> Vec<f64> {
        self.q[self.steps()..]
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Tracked squared residual norms of the columns still unselected.
    pub fn tracked_residual_norms(&self) -> &[f64] {
        &self.tnorms[self.steps()..]
    }

    /// Original indices taken so far.
    pub fn selected(&self) -> &[usize] {
        &self.perm[..self.steps()]
    }

    pub fn into_factors(self) -> QrFactors {
        let k = self.steps();
        let q = ComplexMatrix::from_columns(&self.q[..k]).expect("k >= 1 finite columns");
        let mut r = ComplexMatrix::zeros(k, k);
        for (i, row) in self.r.iter().enumerate() {
            for j in i..k {
                r[(i, j)] = row[j];
            }
        }
        let mut residual_norms = vec![0.0; self.n_cols()];
        for pos in k..self.n_cols() {
            residual_norms[self.perm[pos]] = self.tnorms[pos];
        }
        QrFactors {
            q,
            r,
            perm: self.perm[..k].to_vec(),
            residual_norms,
        }
    }
}

/// Pivoted modified Gram-Schmidt QR of `a` truncated at `k` columns.
pub fn qrd_mgs(a: &ComplexMatrix, k: usize, rule: PivotRule) -> Result<QrFactors> {
    qrd_mgs_counted(a, k, rule).map(|(f, _)| f)
}

pub fn qrd_mgs_counted(
    a: &ComplexMatrix,
    k: usize,
    rule: PivotRule,
) -> Result<(QrFactors, FlopCount)> {
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Error::InvalidDimensions {
            rows: a.rows(),
            cols: a.cols(),
            reason: "k must satisfy 1 <= k <= min(rows, cols)",
        });
    }
    if let PivotRule::FixedFirst(j) = rule {
        if j >= a.cols() {
            return Err(Error::InvalidSubset(format!("first column {j} out of range")));
        }
    }
    let mut qr = GreedyQr::new(a);
    for _ in 0..k {
        let pos = qr.next_pivot(rule).expect("k <= cols");
        qr.commit(pos)?;
    }
    let flops = qr.flops();
    Ok((qr.into_factors(), flops))
}
