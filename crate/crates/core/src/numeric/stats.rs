/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self {
                mean,
                std_error: 0.0,
                n,
            };
        }
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Half-width of the normal-approximation 95% confidence interval.
    pub fn half_width_95(&self) -> f64 {
        1.959_963_984_540_054 * self.std_error
    }
}

/// Depth of the deepest interior dip in `values`: the largest amount by which
/// a point lies below the maximum on both of its sides. Zero for any
/// unimodal (or monotone) sequence.
pub fn deepest_dip(values: &[f64]) -> (usize, f64) {
    let n = values.len();
    if n < 3 {
        return (0, 0.0);
    }
    let mut suffix = vec![f64::NEG_INFINITY; n];
    for i in (0..n - 1).rev() {
        suffix[i] = suffix[i + 1].max(values[i + 1]);
    }
    let mut prefix = values[0];
    let mut worst = (0, 0.0);
    for i in 1..n - 1 {
        let dip = (prefix.min(suffix[i]) - values[i]).max(0.0);
        if dip > worst.1 {
            worst = (i, dip);
        }
        prefix = prefix.max(values[i]);
    }
    worst
}
