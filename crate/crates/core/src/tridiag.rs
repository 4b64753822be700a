//! Thomas algorithm for the small tridiagonal systems of the per-cell solve.

use crate::error::{Error, Result};

/// Solve a tridiagonal system without pivoting.
///
/// `sub[i]` is entry `(i + 1, i)`, `sup[i]` is entry `(i, i + 1)`. `scratch`
/// needs at least `diag.len()` slots. Stable for matrices that are diagonally
/// dominant by rows or by columns, which covers every matrix the scheme
/// builds.
pub fn thomas_solve(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    if sub.len() + 1 != n
        || sup.len() + 1 != n
        || rhs.len() != n
        || out.len() != n
        || scratch.len() < n
    {
        return Err(Error::Usage(format!(
            "tridiagonal sizes: sub {}, diag {n}, sup {}, rhs {}, out {}",
            sub.len(),
            sup.len(),
            rhs.len(),
            out.len()
        )));
    }
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::InvalidState(format!(
            "zero pivot at row 0 ({pivot})"
        )));
    }
    out[0] = rhs[0] / pivot;
    for i in 1..n {
        scratch[i - 1] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i - 1] * scratch[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::InvalidState(format!(
                "zero pivot at row {i} ({pivot})"
            )));
        }
        out[i] = (rhs[i] - sub[i - 1] * out[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        out[i] -= scratch[i] * out[i + 1];
    }
    Ok(())
}
