const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Terminates when the bracket is narrower than `width`; the best evaluated
/// point (including both ends of the original interval) is returned so a
/// boundary maximum is found as well.
pub fn golden_section_max<F, E>(mut f: F, a: f64, b: f64, width: f64) -> Result<GoldenResult, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut lo, mut hi) = (a, b);
    let mut evaluations = 0;
    let mut eval = |x: f64, evaluations: &mut usize| {
        *evaluations += 1;
        f(x)
    };
    let mut best = (a, eval(a, &mut evaluations)?);
    let fb = eval(b, &mut evaluations)?;
    if fb > best.1 {
        best = (b, fb);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1, &mut evaluations)?;
    let mut f2 = eval(x2, &mut evaluations)?;
    while hi - lo > width {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1, &mut evaluations)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2, &mut evaluations)?;
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(GoldenResult {
        x: best.0,
        value: best.1,
        evaluations,
    })
}
