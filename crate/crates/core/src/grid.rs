use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Square transverse grid centred on the optical axis.
///
/// Sample `i` sits at `(i − n/2)·step`, so index `n/2` is the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub step: f64,
}

impl Grid {
    pub fn new(n: usize, step: f64) -> Self {
        Self { n, step }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.step
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    /// Angular spatial frequencies in FFT order, rad/m.
    pub fn frequencies(&self) -> Vec<f64> {
        let dk = 2.0 * PI / (self.n as f64 * self.step);
        (0..self.n)
            .map(|i| {
                if i < self.n / 2 {
                    i as f64 * dk
                } else {
                    (i as f64 - self.n as f64) * dk
                }
            })
            .collect()
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.step
    }

    pub fn cell_area(&self) -> f64 {
        self.step * self.step
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}
