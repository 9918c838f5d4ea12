//! One-dimensional bracketing searches.

/// Golden-ratio conjugate, `(sqrt(5) - 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Root of `f` on `[lo, hi]` by bisection.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (or one of them to be
/// zero); returns `None` otherwise. Stops once the bracket is narrower than
/// `tol` or after `max_iter` halvings.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(lo + 0.5 * (hi - lo))
}

/// Maximiser of a unimodal `f` on `[lo, hi]` by golden-section search.
/// Returns the abscissa and the function value there.
pub fn golden_section_max<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    // Endpoints are candidates too: the maximum may sit on the boundary.
    let mid = 0.5 * (lo + hi);
    [(lo, f(lo)), (mid, f(mid)), (hi, f(hi)), (a, fa), (b, fb)]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_without_sign_change() {
        assert_eq!(bisect(|x| x + 1.0, 0.0, 1.0, 1e-9, 100), None);
    }

    #[test]
    fn bisect_exact_endpoint() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-9, 100), Some(0.0));
    }

    #[test]
    fn golden_interior_and_boundary() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, 0.0, 1.0, 1e-12, 200);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
        let (x, _) = golden_section_max(|x| x, 0.0, 1.0, 1e-12, 200);
        assert_eq!(x, 1.0);
        let (x, _) = golden_section_max(|x| -x, 0.0, 1.0, 1e-12, 200);
        assert_eq!(x, 0.0);
    }
}
