//! Order-independent summation and one-sample Kolmogorov-Smirnov tests.

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

/// Sample mean, variance (n - 1 denominator) and fourth central moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub fourth_central: f64,
}

impl Moments {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, variance: f64::NAN, fourth_central: f64::NAN };
        }
        let mean = compensated_sum(samples.iter().copied()) / n as f64;
        let m2 = compensated_sum(samples.iter().map(|x| (x - mean).powi(2)));
        let m4 = compensated_sum(samples.iter().map(|x| (x - mean).powi(4))) / n as f64;
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self { n, mean, variance, fourth_central: m4 }
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the variance estimate.
    pub fn variance_se(&self) -> f64 {
        ((self.fourth_central - self.variance * self.variance).max(0.0) / self.n as f64).sqrt()
    }
}

/// Two-sided KS statistic `sup |F_n - F|`. Sorts `samples` in place; ties are
/// handled by stepping the empirical CDF once per distinct value.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    d
}

/// Asymptotic p-value of the KS statistic `d` for `n` samples, with the
/// usual small-sample correction to the Kolmogorov argument.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsOutcome {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> KsOutcome {
    let statistic = ks_statistic(samples, cdf);
    KsOutcome { statistic, p_value: ks_p_value(statistic, samples.len()), n: samples.len() }
}
