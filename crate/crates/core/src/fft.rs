//! Multi-dimensional FFT over row-major arrays, one 1-D pass per axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&m| planner.plan_fft_forward(m)).collect();
        let inverse = shape.iter().map(|&m| planner.plan_fft_inverse(m)).collect();
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    /// `c_m = (1/M) Σ_x f(x) e^{-i x·ξ_m}` in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// `f(x) = Σ_m c_m e^{i x·ξ_m}` in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(data.len(), self.len());
        let ndim = self.shape.len();
        for axis in 0..ndim {
            let m = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let plan = &plans[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let outer = data.len() / (m * stride);
            let mut line = vec![Complex64::new(0.0, 0.0); m];
            for o in 0..outer {
                let base = o * m * stride;
                for s in 0..stride {
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + s + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + s + k * stride] = *v;
                    }
                }
            }
        }
    }
}
