//! Compensated floating-point accumulation.
//!
//! Every long sum in the crate runs through [`NeumaierSum`] in a fixed order,
//! which keeps results reproducible bit for bit across runs and thread counts
//! and keeps rounding error independent of the number of terms.

use crate::Real;

/// Neumaier variant of Kahan summation.
///
/// Unlike plain Kahan it stays accurate when an incoming term is larger in
/// magnitude than the running sum.
#[derive(Debug, Clone, Copy)]
pub struct NeumaierSum<T: Real> {
    sum: T,
    compensation: T,
}

impl<T: Real> NeumaierSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Compensated total.
    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }

    pub fn sum_iter(values: impl IntoIterator<Item = T>) -> T {
        let mut acc = Self::new();
        for v in values {
            acc.add(v);
        }
        acc.value()
    }
}

impl<T: Real> Default for NeumaierSum<T> {
    fn default() -> Self {
        Self::new()
    }
}
