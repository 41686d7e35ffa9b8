use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CertError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Grid,
    Random,
}

/// Where certificate conditions are evaluated: a box `bounds` covered by a
/// grid (`counts` points per axis, endpoints included) or by `budget`
/// seeded uniform draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub mode: SamplerMode,
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub counts: Vec<usize>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_radius")]
    pub boundary_radius: f64,
}

fn default_budget() -> usize {
    10_000
}

fn default_radius() -> f64 {
    0.1
}

impl Sampler {
    pub fn grid(bounds: Vec<[f64; 2]>, counts: Vec<usize>) -> Self {
        let budget = counts.iter().product::<usize>().max(1);
        Self {
            mode: SamplerMode::Grid,
            bounds,
            counts,
            budget,
            seed: 0,
            boundary_radius: default_radius(),
        }
    }

    pub fn random(bounds: Vec<[f64; 2]>, budget: usize, seed: u64) -> Self {
        Self {
            mode: SamplerMode::Random,
            bounds,
            counts: Vec::new(),
            budget,
            seed,
            boundary_radius: default_radius(),
        }
    }

    pub fn with_boundary_radius(mut self, r: f64) -> Self {
        self.boundary_radius = r;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<(), CertError> {
        let bad = |m: String| Err(CertError::BadParameters(m));
        if self.bounds.len() != dim {
            return bad(format!("sampler has {} bounds for dimension {dim}", self.bounds.len()));
        }
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return bad(format!("sampler bound {} is not a bounded interval", i + 1));
            }
        }
        if self.budget == 0 {
            return bad("sampler budget must be at least 1".into());
        }
        if self.mode == SamplerMode::Grid
            && !self.counts.is_empty()
            && (self.counts.len() != dim || self.counts.contains(&0))
        {
            return bad("grid counts must give one positive count per coordinate".into());
        }
        if !(self.boundary_radius >= 0.0) {
            return bad("boundary_radius must be non-negative".into());
        }
        Ok(())
    }

    fn axis_counts(&self) -> Vec<usize> {
        if !self.counts.is_empty() {
            return self.counts.clone();
        }
        let d = self.bounds.len().max(1) as f64;
        let n = ((self.budget as f64).powf(1.0 / d).floor() as usize).max(1);
        vec![n; self.bounds.len()]
    }

    /// The sampled states, in a fixed order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self.mode {
            SamplerMode::Grid => {
                let axes: Vec<Vec<f64>> = self
                    .bounds
                    .iter()
                    .zip(self.axis_counts())
                    .map(|(&[lo, hi], n)| linspace(lo, hi, n))
                    .collect();
                let mut out = vec![Vec::new()];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |v| {
                                let mut q = p.clone();
                                q.push(*v);
                                q
                            })
                        })
                        .collect();
                }
                out
            }
            SamplerMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.budget)
                    .map(|_| {
                        self.bounds
                            .iter()
                            .map(|&[lo, hi]| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let s = Sampler::grid(vec![[0.0, 2.0], [-3.0, 3.0]], vec![3, 2]);
        let pts = s.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, -3.0]);
        assert_eq!(pts[5], vec![2.0, 3.0]);
        assert!(pts.contains(&vec![1.0, 3.0]));
    }

    #[test]
    fn random_is_seeded() {
        let s = Sampler::random(vec![[0.0, 1.0]; 3], 50, 7);
        assert_eq!(s.points(), s.points());
        assert_ne!(s.points(), Sampler::random(vec![[0.0, 1.0]; 3], 50, 8).points());
        assert!(s.points().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn budget_sets_grid_size() {
        let mut s = Sampler::grid(vec![[0.0, 1.0], [0.0, 1.0]], vec![]);
        s.budget = 100;
        assert_eq!(s.points().len(), 100);
        assert!(s.validate(2).is_ok());
        assert!(s.validate(3).is_err());
    }
}
