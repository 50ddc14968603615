use alloc::vec::Vec;

/// Observables of one field at one time, in model units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub time: f64,
    pub norm_sqr: f64,
    pub x: f64,
    pub y: f64,
    pub lz: f64,
    pub lz2: f64,
    pub energy: f64,
}

/// Time series of [`Sample`]s with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Smallest grid spacing of the run; orbit fits reject radii below two spacings.
    pub grid_spacing: f64,
}

impl Trajectory {
    pub fn new(grid_spacing: f64) -> Self {
        Self { samples: Vec::new(), grid_spacing }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}
