use thiserror::Error;

use super::domain::{DomainError, HybridTime, HybridTimeDomain};

/// A state sample stored in one phase of an arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Sample {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Self { t, x }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArcError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("arc has {samples} sample phases but the domain has {phases} phases")]
    PhaseCount { samples: usize, phases: usize },
    #[error("phase {j} has no samples")]
    EmptyPhase { j: usize },
    #[error("phase {j}: samples must start at t_start = {expected}, got {got}")]
    BadStart { j: usize, expected: f64, got: f64 },
    #[error("phase {j}: samples must end at t_end = {expected}, got {got}")]
    BadEnd { j: usize, expected: f64, got: f64 },
    #[error("phase {j}: sample times are not strictly increasing at index {index}")]
    NotIncreasing { j: usize, index: usize },
    #[error("phase {j}: point phase must have exactly one sample")]
    PointPhase { j: usize },
    #[error("sample at ({t}, {j}) has dimension {got}, expected {expected}")]
    Dimension {
        t: f64,
        j: usize,
        got: usize,
        expected: usize,
    },
}

/// A sampled hybrid arc: a hybrid time domain plus per-phase state samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc {
    dim: usize,
    domain: HybridTimeDomain,
    phases: Vec<Vec<Sample>>,
    offsets: Vec<usize>,
}

/// Borrowed view of one sample together with its hybrid time.
#[derive(Debug, Clone, Copy)]
pub struct ArcPoint<'a> {
    pub time: HybridTime,
    pub x: &'a [f64],
}

impl HybridArc {
    pub fn new(
        dim: usize,
        domain: HybridTimeDomain,
        phases: Vec<Vec<Sample>>,
    ) -> Result<Self, ArcError> {
        if phases.len() != domain.phases().len() {
            return Err(ArcError::PhaseCount {
                samples: phases.len(),
                phases: domain.phases().len(),
            });
        }
        let mut offsets = Vec::with_capacity(phases.len());
        let mut total = 0;
        for (j, (samples, phase)) in phases.iter().zip(domain.phases()).enumerate() {
            let first = samples.first().ok_or(ArcError::EmptyPhase { j })?;
            let last = &samples[samples.len() - 1];
            if first.t != phase.t_start {
                return Err(ArcError::BadStart {
                    j,
                    expected: phase.t_start,
                    got: first.t,
                });
            }
            if last.t != phase.t_end {
                return Err(ArcError::BadEnd {
                    j,
                    expected: phase.t_end,
                    got: last.t,
                });
            }
            if phase.is_point() && samples.len() != 1 {
                return Err(ArcError::PointPhase { j });
            }
            for (index, w) in samples.windows(2).enumerate() {
                if !(w[1].t > w[0].t) {
                    return Err(ArcError::NotIncreasing { j, index: index + 1 });
                }
            }
            for s in samples {
                if s.x.len() != dim {
                    return Err(ArcError::Dimension {
                        t: s.t,
                        j,
                        got: s.x.len(),
                        expected: dim,
                    });
                }
            }
            offsets.push(total);
            total += samples.len();
        }
        Ok(Self {
            dim,
            domain,
            phases,
            offsets,
        })
    }

    /// Builds an arc from `(t, j, x)` triples ordered along the domain.
    pub fn from_flat(
        dim: usize,
        domain: HybridTimeDomain,
        samples: impl IntoIterator<Item = (f64, usize, Vec<f64>)>,
    ) -> Result<Self, ArcError> {
        let mut phases: Vec<Vec<Sample>> = vec![Vec::new(); domain.phases().len()];
        for (t, j, x) in samples {
            let point = HybridTime::new(t, j);
            if !domain.contains(point) {
                return Err(DomainError::NotInDomain(point).into());
            }
            phases[j].push(Sample::new(t, x));
        }
        Self::new(dim, domain, phases)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &HybridTimeDomain {
        &self.domain
    }

    pub fn phase_samples(&self, j: usize) -> &[Sample] {
        &self.phases[j]
    }

    /// Total number of samples across all phases.
    pub fn len(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.phases.last().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.phases[0][0].x
    }

    pub fn final_point(&self) -> ArcPoint<'_> {
        let j = self.phases.len() - 1;
        let s = &self.phases[j][self.phases[j].len() - 1];
        ArcPoint {
            time: HybridTime::new(s.t, j),
            x: &s.x,
        }
    }

    /// All samples in domain order (increasing `t + j`).
    pub fn points(&self) -> impl Iterator<Item = ArcPoint<'_>> + '_ {
        self.phases.iter().enumerate().flat_map(|(j, samples)| {
            samples.iter().map(move |s| ArcPoint {
                time: HybridTime::new(s.t, j),
                x: &s.x,
            })
        })
    }

    /// Flat index (domain order) of the sample stored exactly at `point`.
    pub fn sample_index(&self, point: HybridTime) -> Option<usize> {
        let samples = self.phases.get(point.j)?;
        samples
            .binary_search_by(|s| s.t.partial_cmp(&point.t).unwrap())
            .ok()
            .map(|k| self.offsets[point.j] + k)
    }

    /// Flat index of the sample nearest to `point` in its phase, if within `tol`.
    pub fn nearest_sample_index(&self, point: HybridTime, tol: f64) -> Option<usize> {
        let samples = self.phases.get(point.j)?;
        let (k, s) = samples.iter().enumerate().min_by(|a, b| {
            (a.1.t - point.t)
                .abs()
                .partial_cmp(&(b.1.t - point.t).abs())
                .unwrap()
        })?;
        ((s.t - point.t).abs() <= tol).then(|| self.offsets[point.j] + k)
    }

    /// Index of the first flat sample of phase `j`.
    pub fn phase_offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    /// State at `point`: the stored sample if there is one, otherwise linear
    /// interpolation between the bracketing samples of phase `point.j`.
    pub fn sample_at(&self, point: HybridTime) -> Result<Vec<f64>, DomainError> {
        if !self.domain.contains(point) {
            return Err(DomainError::NotInDomain(point));
        }
        let samples = &self.phases[point.j];
        let idx = samples.partition_point(|s| s.t < point.t);
        if idx < samples.len() && samples[idx].t == point.t {
            return Ok(samples[idx].x.clone());
        }
        // idx > 0 because the first sample sits at t_start <= point.t.
        let (a, b) = (&samples[idx - 1], &samples[idx]);
        let w = (point.t - a.t) / (b.t - a.t);
        Ok(a.x
            .iter()
            .zip(&b.x)
            .map(|(xa, xb)| xa + w * (xb - xa))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_phase() -> HybridArc {
        let d = HybridTimeDomain::from_triples(&[(0, 0.0, 1.0), (1, 1.0, 2.0)]).unwrap();
        HybridArc::from_flat(
            1,
            d,
            vec![
                (0.0, 0, vec![0.0]),
                (0.5, 0, vec![1.0]),
                (1.0, 0, vec![2.0]),
                (1.0, 1, vec![-2.0]),
                (2.0, 1, vec![0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_and_interpolated() {
        let a = two_phase();
        assert_eq!(a.len(), 5);
        assert_eq!(a.sample_at(HybridTime::new(0.5, 0)).unwrap(), vec![1.0]);
        assert_eq!(a.sample_at(HybridTime::new(0.25, 0)).unwrap(), vec![0.5]);
        assert_eq!(a.sample_at(HybridTime::new(1.5, 1)).unwrap(), vec![-1.0]);
        assert_eq!(a.sample_at(HybridTime::ORIGIN).unwrap(), vec![0.0]);
        assert!(a.sample_at(HybridTime::new(0.5, 1)).is_err());
        assert_eq!(a.sample_index(HybridTime::new(1.0, 1)), Some(3));
        assert_eq!(a.sample_index(HybridTime::new(0.7, 0)), None);
    }

    #[test]
    fn rejects_malformed_samples() {
        let d = HybridTimeDomain::from_triples(&[(0, 0.0, 1.0)]).unwrap();
        let e = HybridArc::from_flat(1, d.clone(), vec![(0.0, 0, vec![0.0])]).unwrap_err();
        assert!(matches!(e, ArcError::BadEnd { .. }));
        let e = HybridArc::from_flat(
            1,
            d.clone(),
            vec![(0.0, 0, vec![0.0]), (0.0, 0, vec![0.0]), (1.0, 0, vec![0.0])],
        )
        .unwrap_err();
        assert!(matches!(e, ArcError::NotIncreasing { .. }));
        let e = HybridArc::from_flat(2, d, vec![(0.0, 0, vec![0.0]), (1.0, 0, vec![0.0])])
            .unwrap_err();
        assert!(matches!(e, ArcError::Dimension { .. }));
    }
}
