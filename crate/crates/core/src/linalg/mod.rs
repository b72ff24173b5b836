//! Complex dense linear algebra: matrices, pivoted Gram-Schmidt QR,
//! Gauss-Jordan inversion and the `γ` / `D` selection metrics.

mod inverse;
mod matrix;
mod qr;

pub use inverse::{
    d_metric, gamma, gamma_counted, gamma_from_r, gauss_jordan_inverse,
    gauss_jordan_inverse_counted, pseudo_inverse, upper_triangular_inverse, SINGULAR_TOL,
};
pub(crate) use inverse::gamma_or_inf;
pub use matrix::{ComplexMatrix, C64, ONE, ZERO};
pub use qr::{qrd_mgs, qrd_mgs_counted, GreedyQr, PivotRule, QrFactors, RANK_TOL};
