//! Golden-section search for the maximum of a unimodal function on an interval.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (√5 − 1)/2

/// Maximizes `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Returns the best evaluated point and its value; endpoints are included
/// in the comparison, ties go to the smaller abscissa.
pub fn maximize<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut best = (a, f(a)?);
    let fb = f(b)?;
    if fb > best.1 {
        best = (b, fb);
    }
    if b - a <= tol {
        return Ok(best);
    }

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    Ok(best)
}
