//! Fixed-order reductions. Every sum in the crate goes through these so
//! repeated runs are bit-identical regardless of thread count.

const LEAF: usize = 16;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over `values` without materializing the mapped slice.
pub fn pairwise_sum_by<T, F: Fn(&T) -> f64 + Copy>(values: &[T], f: F) -> f64 {
    if values.len() <= LEAF {
        return values.iter().map(f).sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}

/// Neumaier-compensated running sum, for long sequential series.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
