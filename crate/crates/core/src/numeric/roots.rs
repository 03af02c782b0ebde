/// Result of scanning a function for sign changes over a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignScan {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    /// Grid cells `[a, b]` on which the function changes sign (or touches zero).
    pub brackets: Vec<(f64, f64)>,
}

impl SignScan {
    pub fn count(&self) -> usize {
        self.brackets.len()
    }
}

/// Evaluates `f` on `points + 1` equally spaced nodes of `[lo, hi]` and
/// records every cell where the sign flips. A node where `f` is exactly zero
/// counts as one root, whether or not the sign flips across it.
pub fn scan_sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> SignScan {
    assert!(points >= 1 && hi > lo);
    let step = (hi - lo) / points as f64;
    let node = |i: usize| {
        if i == points {
            hi
        } else {
            lo + step * i as f64
        }
    };

    let mut brackets = Vec::new();
    let mut prev_x = lo;
    let mut prev = f(lo);
    let f_lo = prev;
    if prev == 0.0 {
        brackets.push((lo, lo));
    }
    for i in 1..=points {
        let x = node(i);
        let v = f(x);
        if v == 0.0 {
            brackets.push((x, x));
        } else if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            brackets.push((prev_x, x));
        }
        prev_x = x;
        prev = v;
    }
    SignScan {
        lo,
        hi,
        f_lo,
        f_hi: prev,
        brackets,
    }
}

/// Bisection on a bracket with `f(a)` and `f(b)` of opposite sign (or zero).
///
/// Stops once the bracket is narrower than `x_tol` and the midpoint residual
/// is below `f_tol`, or when the bracket can no longer shrink in floating
/// point. Returns the endpoint or midpoint with the smallest `|f|`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x_tol: f64, f_tol: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!((fa > 0.0) != (fb > 0.0), "bisect needs a sign change");
    let mut best = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= x_tol && fm.abs() <= f_tol {
            break;
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn counts_cubic_roots() {
        let s = scan_sign_changes(|x| (x - 1.0) * (x - 2.0) * (x - 3.0), 0.5, 3.7, 1000);
        assert_eq!(s.count(), 3);
        for (a, b) in &s.brackets {
            assert!(b - a <= 3.2 / 1000.0 + 1e-12);
        }
    }

    #[test]
    fn exact_zero_on_node_counts_once() {
        // Node at 1.0 is an exact root; no double counting with the adjacent cell.
        let s = scan_sign_changes(|x| x - 1.0, 0.0, 2.0, 4);
        assert_eq!(s.count(), 1);
        assert_eq!(s.brackets[0], (1.0, 1.0));
    }

    #[test]
    fn no_roots() {
        let s = scan_sign_changes(|x| x * x + 1.0, -1.0, 1.0, 100);
        assert_eq!(s.count(), 0);
    }
}
