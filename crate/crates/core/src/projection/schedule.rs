/// Basis-growth rule: the `N`-th basis function is present once
/// `n ≥ ⌊c · N^p⌋`, with `p = (2α + d)/d`, and never fewer than `N₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub constant: f64,
    pub exponent: f64,
    pub initial: usize,
}

impl Schedule {
    pub fn new(alpha: f64, dim: usize, constant: f64, initial: usize) -> Self {
        let d = dim as f64;
        Schedule {
            constant,
            exponent: (2.0 * alpha + d) / d,
            initial,
        }
    }

    /// Sample count at which the basis grows to `count` functions.
    pub fn trigger(&self, count: usize) -> u64 {
        (self.constant * (count as f64).powf(self.exponent)).floor() as u64
    }

    /// Largest `N` with `⌊c N^p⌋ ≤ n`, floored at `N₀`.
    pub fn basis_count(&self, n: u64) -> usize {
        let guess = ((n as f64 + 1.0) / self.constant).powf(1.0 / self.exponent).floor() as usize;
        let mut count = guess.max(1);
        while count > 1 && self.trigger(count) > n {
            count -= 1;
        }
        while self.trigger(count + 1) <= n {
            count += 1;
        }
        if self.trigger(count) > n {
            count = 0;
        }
        count.max(self.initial)
    }
}

/// Free-function form of [`Schedule::basis_count`].
pub fn schedule_basis_count(n: u64, alpha: f64, dim: usize, constant: f64, initial: usize) -> usize {
    Schedule::new(alpha, dim, constant, initial).basis_count(n)
}
