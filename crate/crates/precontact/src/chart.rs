//! Coordinate charts with a sampling box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ChartError;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub coord_names: Vec<String>,
    pub domain: Vec<(f64, f64)>,
    /// Optional period per coordinate (angle coordinates).
    pub periods: Vec<Option<f64>>,
}

impl Chart {
    pub fn new(names: &[&str], domain: &[(f64, f64)]) -> Result<Self, ChartError> {
        Self::from_parts(names.iter().map(|s| s.to_string()).collect(), domain.to_vec())
    }

    pub fn from_parts(coord_names: Vec<String>, domain: Vec<(f64, f64)>) -> Result<Self, ChartError> {
        if coord_names.is_empty() {
            return Err(ChartError::Empty);
        }
        if coord_names.len() != domain.len() {
            return Err(ChartError::DomainLength { names: coord_names.len(), intervals: domain.len() });
        }
        for (i, a) in coord_names.iter().enumerate() {
            if coord_names[..i].contains(a) {
                return Err(ChartError::DuplicateName(a.clone()));
            }
        }
        for (name, &(lo, hi)) in coord_names.iter().zip(&domain) {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(ChartError::BadInterval { name: name.clone(), lo, hi });
            }
        }
        let periods = vec![None; coord_names.len()];
        Ok(Chart { coord_names, domain, periods })
    }

    pub fn with_period(mut self, name: &str, period: f64) -> Self {
        if let Some(i) = self.index_of(name) {
            self.periods[i] = Some(period);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coord_names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.coord_names.iter().map(|s| s.as_str()).collect()
    }

    /// Deterministic uniform samples in the domain box.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sample_box(&self.domain, count, seed)
    }
}

pub fn sample_box(domain: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            domain
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
                .collect()
        })
        .collect()
}
