//! Streaming sample statistics for the Monte Carlo checks.

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
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

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        libm::sqrt(self.variance() / self.n as f64)
    }

    /// Standard error of the sample variance under a normal model,
    /// `s² √(2 / (n − 1))`.
    pub fn variance_std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.variance() * libm::sqrt(2.0 / (self.n - 1) as f64)
    }
}
