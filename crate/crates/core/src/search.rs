//! One-dimensional searches over bounded intervals.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximises a unimodal `f` on `[lo, hi]` by golden-section search until the
/// bracket is narrower than `tol`. Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ends = [(lo, f(lo)), (hi, f(hi))];
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    // Endpoints matter when the maximum sits on the boundary.
    let mid = 0.5 * (lo + hi);
    [(mid, f(mid)), (x1, f1), (x2, f2), ends[0], ends[1]].into_iter().fold((f64::NAN, f64::NEG_INFINITY), |best, c| {
        if c.1 > best.1 {
            c
        } else {
            best
        }
    })
}

/// Last point where a sign-changing `g` (positive then non-positive) is still
/// positive, bracketed in `[lo, hi]`, by bisection to absolute width `tol`.
pub fn bisect_sign_change<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Log-spaced grid with `n >= 2` points on `[lo, hi]`, `lo > 0`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn golden_handles_boundary_max() {
        let (x, _) = golden_max(|x| x, 0.0, 2.0, 1e-9);
        assert_eq!(x, 2.0);
        let (x, _) = golden_max(|x| -x, 0.5, 2.0, 1e-9);
        assert_eq!(x, 0.5);
    }

    #[test]
    fn bisection_locates_root() {
        let x = bisect_sign_change(|x| 2.0 - x, 0.0, 10.0, 1e-12);
        assert!((x - 2.0).abs() < 1e-11);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 4.0, 1024);
        assert_eq!(g.len(), 1024);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[1023] - 4.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
