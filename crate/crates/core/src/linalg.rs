//! Dense matrix helpers shared by the rating and pricing modules.

use nalgebra::DMatrix;

/// Induced 1-norm (max absolute column sum).
pub(crate) fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LogFailure {
    /// A real eigenvalue on the closed negative half-line: no real principal log.
    NoRealLog,
    /// Square-root or series iteration did not settle.
    NotConverged,
}

/// Principal matrix square root by the product form of the Denman–Beavers
/// iteration.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>, LogFailure> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut y = a.clone();
    let mut m = a.clone();
    for _ in 0..100 {
        let m_inv = m.clone().try_inverse().ok_or(LogFailure::NotConverged)?;
        let y_next = &y * (&id + &m_inv) * 0.5;
        let m_next = (&id * 2.0 + &m + &m_inv) * 0.25;
        let step = max_abs_diff(&y_next, &y);
        y = y_next;
        m = m_next;
        if step <= 1e-15 * norm1(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(LogFailure::NotConverged)
}

/// Principal logarithm by inverse scaling and squaring.
///
/// Square roots are taken until `‖A − I‖₁ ≤ 1/4`, then `log(I + E)` is summed
/// as a Taylor series and scaled back by `2^s`.
pub(crate) fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>, LogFailure> {
    let n = a.nrows();
    let eig = a.complex_eigenvalues();
    if eig
        .iter()
        .any(|z| z.im.abs() <= 1e-14 * (1.0 + z.re.abs()) && z.re <= 0.0)
    {
        return Err(LogFailure::NoRealLog);
    }

    let id = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut squarings = 0u32;
    while norm1(&(&x - &id)) > 0.25 {
        x = sqrtm(&x)?;
        squarings += 1;
        if squarings > 60 {
            return Err(LogFailure::NotConverged);
        }
    }

    let e = &x - &id;
    let mut power = e.clone();
    let mut sum = e.clone();
    let mut converged = false;
    for k in 2..200 {
        power = &power * &e;
        let term = &power / (k as f64);
        if k % 2 == 0 {
            sum -= &term;
        } else {
            sum += &term;
        }
        if norm1(&term) <= 1e-18 * norm1(&sum).max(1e-300) || norm1(&power) == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LogFailure::NotConverged);
    }
    Ok(sum * 2f64.powi(squarings as i32))
}
