//! Compensated summation.

/// Neumaier's variant of Kahan summation. Unlike plain Kahan it stays
/// accurate when an addend is larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_next_to_large_ones() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(v), 2.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn many_tenths() {
        let s = sum(std::iter::repeat_n(0.1, 1_000_000));
        assert!((s - 100_000.0).abs() < 1e-9);
    }
}
