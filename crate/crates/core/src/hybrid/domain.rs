use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point `(t, j)` of hybrid time: ordinary time and jump count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridTime {
    pub t: f64,
    pub j: usize,
}

impl HybridTime {
    pub const ORIGIN: HybridTime = HybridTime { t: 0.0, j: 0 };

    pub fn new(t: f64, j: usize) -> Self {
        Self { t, j }
    }

    /// The scalar `t + j` used to order points of a hybrid time domain.
    pub fn total(&self) -> f64 {
        self.t + self.j as f64
    }
}

impl fmt::Display for HybridTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.t, self.j)
    }
}

/// One interval `[t_start, t_end] x {j}` of a hybrid time domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub j: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl Phase {
    pub fn new(j: usize, t_start: f64, t_end: f64) -> Self {
        Self { j, t_start, t_end }
    }

    pub fn is_point(&self) -> bool {
        self.t_start == self.t_end
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t_start <= t && t <= self.t_end
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("hybrid time domain has no phases")]
    Empty,
    #[error("first phase must start at (0, 0), got j = {j}, t_start = {t_start}")]
    NonzeroOrigin { j: usize, t_start: f64 },
    #[error("phase {index} starts at t = {t_start} but the previous phase ends at t = {prev_end}")]
    GapOrOverlap {
        index: usize,
        prev_end: f64,
        t_start: f64,
    },
    #[error("phase {index} has t_end = {t_end} < t_start = {t_start}")]
    NegativeInterval {
        index: usize,
        t_start: f64,
        t_end: f64,
    },
    #[error("phase {index} has jump index {j}, expected {expected}")]
    NonConsecutiveJ {
        index: usize,
        j: usize,
        expected: usize,
    },
    #[error("phase {index} has a non-finite endpoint")]
    NonFinite { index: usize },
    #[error("point {0} is not in the hybrid time domain")]
    NotInDomain(HybridTime),
}

/// A compact hybrid time domain `U_j [t_j, t_{j+1}] x {j}`.
///
/// Both ends of every interval are closed, so the jump instant `t_{j+1}`
/// appears as `(t_{j+1}, j)` and `(t_{j+1}, j + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridTimeDomain {
    phases: Vec<Phase>,
}

impl HybridTimeDomain {
    /// Validates the phase list and builds the domain.
    pub fn validate(phases: Vec<Phase>) -> Result<Self, DomainError> {
        let first = phases.first().ok_or(DomainError::Empty)?;
        if first.j != 0 || first.t_start != 0.0 {
            return Err(DomainError::NonzeroOrigin {
                j: first.j,
                t_start: first.t_start,
            });
        }
        for (index, phase) in phases.iter().enumerate() {
            if !phase.t_start.is_finite() || !phase.t_end.is_finite() {
                return Err(DomainError::NonFinite { index });
            }
            if phase.j != index {
                return Err(DomainError::NonConsecutiveJ {
                    index,
                    j: phase.j,
                    expected: index,
                });
            }
            if phase.t_end < phase.t_start {
                return Err(DomainError::NegativeInterval {
                    index,
                    t_start: phase.t_start,
                    t_end: phase.t_end,
                });
            }
            if index > 0 {
                let prev_end = phases[index - 1].t_end;
                if prev_end != phase.t_start {
                    return Err(DomainError::GapOrOverlap {
                        index,
                        prev_end,
                        t_start: phase.t_start,
                    });
                }
            }
        }
        Ok(Self { phases })
    }

    /// Convenience wrapper over [`validate`](Self::validate) for `(j, t_start, t_end)` triples.
    pub fn from_triples(triples: &[(usize, f64, f64)]) -> Result<Self, DomainError> {
        Self::validate(
            triples
                .iter()
                .map(|&(j, a, b)| Phase::new(j, a, b))
                .collect(),
        )
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn phase(&self, j: usize) -> Option<&Phase> {
        self.phases.get(j)
    }

    /// Number of jumps, i.e. the largest `j` in the domain.
    pub fn jumps(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        self.phases[self.phases.len() - 1].t_end
    }

    pub fn contains(&self, point: HybridTime) -> bool {
        self.phases
            .get(point.j)
            .map_or(false, |p| p.contains(point.t))
    }

    /// Orders two domain points by `t + j`.
    pub fn compare(&self, a: HybridTime, b: HybridTime) -> Result<Ordering, DomainError> {
        for p in [a, b] {
            if !self.contains(p) {
                return Err(DomainError::NotInDomain(p));
            }
        }
        // Equal sums only happen for identical points; the tie-break on j
        // keeps the order total under floating-point rounding of t + j.
        Ok(a
            .total()
            .partial_cmp(&b.total())
            .unwrap_or(Ordering::Equal)
            .then(a.j.cmp(&b.j))
            .then(a.t.partial_cmp(&b.t).unwrap_or(Ordering::Equal)))
    }
}

impl<'de> Deserialize<'de> for HybridTimeDomain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            phases: Vec<Phase>,
        }
        let raw = Raw::deserialize(deserializer)?;
        HybridTimeDomain::validate(raw.phases).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_bouncing_ball_shape() {
        let d = HybridTimeDomain::from_triples(&[(0, 0.0, 1.4142), (1, 1.4142, 2.8)]).unwrap();
        assert_eq!(d.jumps(), 1);
        assert_eq!(d.t_final(), 2.8);
    }

    #[test]
    fn rejects_bad_origin() {
        let err = HybridTimeDomain::from_triples(&[(0, 0.5, 1.0)]).unwrap_err();
        assert!(matches!(err, DomainError::NonzeroOrigin { .. }));
        let err = HybridTimeDomain::from_triples(&[(1, 0.0, 1.0)]).unwrap_err();
        assert!(matches!(err, DomainError::NonzeroOrigin { .. }));
    }

    #[test]
    fn rejects_gap() {
        let err = HybridTimeDomain::from_triples(&[(0, 0.0, 1.0), (1, 2.0, 3.0)]).unwrap_err();
        assert!(matches!(err, DomainError::GapOrOverlap { index: 1, .. }));
    }

    #[test]
    fn rejects_negative_interval_and_bad_j() {
        let err = HybridTimeDomain::from_triples(&[(0, 0.0, 1.0), (1, 1.0, 0.5)]).unwrap_err();
        assert!(matches!(err, DomainError::NegativeInterval { index: 1, .. }));
        let err = HybridTimeDomain::from_triples(&[(0, 0.0, 1.0), (2, 1.0, 2.0)]).unwrap_err();
        assert!(matches!(err, DomainError::NonConsecutiveJ { index: 1, j: 2, .. }));
        assert_eq!(
            HybridTimeDomain::validate(vec![]).unwrap_err(),
            DomainError::Empty
        );
    }

    #[test]
    fn point_phases_allowed() {
        let d = HybridTimeDomain::from_triples(&[(0, 0.0, 0.0), (1, 0.0, 0.0), (2, 0.0, 1.0)])
            .unwrap();
        assert!(d.contains(HybridTime::new(0.0, 1)));
        assert!(!d.contains(HybridTime::new(0.5, 1)));
    }

    #[test]
    fn compare_examples() {
        let d = HybridTimeDomain::from_triples(&[(0, 0.0, 1.0), (1, 1.0, 2.0)]).unwrap();
        let c = |a: (f64, usize), b: (f64, usize)| {
            d.compare(HybridTime::new(a.0, a.1), HybridTime::new(b.0, b.1))
        };
        assert_eq!(c((1.0, 0), (1.0, 1)).unwrap(), Ordering::Less);
        assert_eq!(c((0.5, 0), (0.5, 0)).unwrap(), Ordering::Equal);
        assert_eq!(c((2.0, 1), (1.0, 1)).unwrap(), Ordering::Greater);
        assert!(matches!(
            c((0.5, 1), (1.0, 1)),
            Err(DomainError::NotInDomain(_))
        ));
    }

    #[test]
    fn deserialize_validates() {
        let ok: HybridTimeDomain =
            serde_json::from_str(r#"{"phases":[{"j":0,"t_start":0.0,"t_end":1.0}]}"#).unwrap();
        assert_eq!(ok.phases().len(), 1);
        let bad = serde_json::from_str::<HybridTimeDomain>(
            r#"{"phases":[{"j":0,"t_start":0.2,"t_end":1.0}]}"#,
        );
        assert!(bad.is_err());
    }
}
