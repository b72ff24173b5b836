use crate::error::{Error, Result};
use crate::flops::FlopCount;
use crate::linalg::matrix::{ComplexMatrix, C64, ONE, ZERO};

/// Pivot magnitude at or below which Gauss-Jordan declares the matrix singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Inverse by Gauss-Jordan elimination with partial (row) pivoting.
pub fn gauss_jordan_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    gauss_jordan_inverse_counted(a, &mut FlopCount::default())
}

pub fn gauss_jordan_inverse_counted(
    a: &ComplexMatrix,
    flops: &mut FlopCount,
) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let w = 2 * n;
    // augmented [A | I], row-major
    let mut aug = vec![ZERO; n * w];
    for i in 0..n {
        aug[i * w..i * w + n].copy_from_slice(a.row(i));
        aug[i * w + n + i] = ONE;
    }

    for col in 0..n {
        let mut best = col;
        let mut best_mag = aug[col * w + col].norm();
        for row in col + 1..n {
            let mag = aug[row * w + col].norm();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        if best_mag <= SINGULAR_TOL {
            return Err(Error::Singular {
                col,
                pivot: best_mag,
            });
        }
        if best != col {
            for j in 0..w {
                aug.swap(col * w + j, best * w + j);
            }
        }

        let inv = ONE / aug[col * w + col];
        for z in &mut aug[col * w..(col + 1) * w] {
            *z *= inv;
        }
        aug[col * w + col] = ONE;
        flops.count_mul(1 + w as u64);

        let (before, rest) = aug.split_at_mut(col * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let factor = row[col];
            for (z, p) in row.iter_mut().zip(pivot_row.iter()) {
                *z -= factor * p;
            }
        }
        flops.count_mul(((n - 1) * w) as u64);
        flops.count_add(((n - 1) * w) as u64);
    }

    let data = (0..n)
        .flat_map(|i| aug[i * w + n..(i + 1) * w].iter().copied())
        .collect();
    ComplexMatrix::from_vec(n, n, data).map_err(|_| Error::Singular { col: n, pivot: 0.0 })
}

/// Scaling factor `Tr{(H Hᴴ)⁻¹}` at unit total transmit power.
pub fn gamma(h: &ComplexMatrix) -> Result<f64> {
    gamma_counted(h, &mut FlopCount::default())
}

pub fn gamma_counted(h: &ComplexMatrix, flops: &mut FlopCount) -> Result<f64> {
    if h.rows() > h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "gamma needs rows <= cols, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let inv = gauss_jordan_inverse_counted(&h.gram_counted(flops), flops)?;
    flops.count_add(h.rows() as u64 - 1);
    Ok(inv.trace().re)
}

/// `γ` for a subset given by a candidate column list, +∞ when singular.
pub(crate) fn gamma_or_inf(h: &ComplexMatrix, flops: &mut FlopCount) -> f64 {
    gamma_counted(h, flops).unwrap_or(f64::INFINITY)
}

/// Right pseudo-inverse `Hᴴ(H Hᴴ)⁻¹` of a wide full-row-rank matrix.
pub fn pseudo_inverse(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.rows() > h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "pseudo-inverse needs rows <= cols, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let inv = gauss_jordan_inverse(&h.gram())?;
    h.hermitian().matmul(&inv)
}

/// Inverse of an upper triangular matrix by back substitution.
pub fn upper_triangular_inverse(r: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !r.is_square() {
        return Err(Error::DimensionMismatch("triangular inverse of non-square".into()));
    }
    let n = r.rows();
    let mut a = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for i in (0..=j).rev() {
            let rhs = if i == j { ONE } else { ZERO };
            let s: C64 = (i + 1..=j).map(|p| r[(i, p)] * a[(p, j)]).sum();
            let d = r[(i, i)];
            if d.norm() <= SINGULAR_TOL {
                return Err(Error::Singular {
                    col: i,
                    pivot: d.norm(),
                });
            }
            a[(i, j)] = (rhs - s) / d;
        }
    }
    Ok(a)
}

/// `Tr{R⁻ᴴ R⁻¹}`, the squared Frobenius norm of `R⁻¹`.
pub fn gamma_from_r(r: &ComplexMatrix) -> Result<f64> {
    let a = upper_triangular_inverse(r)?;
    Ok(a.as_slice().iter().map(|z| z.norm_sqr()).sum())
}

/// Lower bound `Σ 1/R_ii²` on `γ`.
pub fn d_metric(r: &ComplexMatrix) -> f64 {
    (0..r.rows().min(r.cols()))
        .map(|i| 1.0 / r[(i, i)].norm_sqr())
        .sum()
}
