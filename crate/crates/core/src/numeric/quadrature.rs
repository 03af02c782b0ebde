/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a + h * i as f64;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// `|S(n) - S(n/2)|` for the final panel count.
    pub error_estimate: f64,
    pub panels: usize,
}

/// Simpson quadrature starting at `panels`, doubling until the
/// panel-halving difference is within `tol` or `max_panels` is reached.
pub fn simpson_refined<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
    max_panels: usize,
) -> Quadrature {
    let mut n = panels.max(4);
    let mut coarse = simpson(&f, a, b, n / 2);
    loop {
        let fine = simpson(&f, a, b, n);
        let err = (fine - coarse).abs();
        if err <= tol || n >= max_panels {
            return Quadrature {
                value: fine,
                error_estimate: err,
                panels: n,
            };
        }
        coarse = fine;
        n *= 2;
    }
}
