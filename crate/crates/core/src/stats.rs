//! Small estimators shared by the campaigns.

use libm::sqrt;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` failures out of `n` trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Half-width of the 95% Wilson interval.
pub fn wilson_halfwidth(errors: u64, n: u64) -> f64 {
    let (lo, hi) = wilson_interval(errors, n, Z95);
    (hi - lo) / 2.0
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            sqrt(self.variance() / self.n as f64)
        }
    }

    /// Normal-approximation 95% half-width of the mean.
    pub fn ci95(&self) -> f64 {
        Z95 * self.std_error()
    }
}

impl FromIterator<f64> for Summary {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Summary::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// z statistic for `a.mean() - b.mean()` under independent samples.
pub fn diff_z(a: &Summary, b: &Summary) -> f64 {
    let se = sqrt(a.std_error().powi(2) + b.std_error().powi(2));
    let d = a.mean() - b.mean();
    if se == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    } else {
        d / se
    }
}

/// z statistic comparing two binomial proportions (pooled).
pub fn proportion_diff_z(e1: u64, n1: u64, e2: u64, n2: u64) -> f64 {
    if n1 == 0 || n2 == 0 {
        return 0.0;
    }
    let p1 = e1 as f64 / n1 as f64;
    let p2 = e2 as f64 / n2 as f64;
    let p = (e1 + e2) as f64 / (n1 + n2) as f64;
    let se = sqrt(p * (1.0 - p) * (1.0 / n1 as f64 + 1.0 / n2 as f64));
    if se == 0.0 {
        0.0
    } else {
        (p1 - p2) / se
    }
}
