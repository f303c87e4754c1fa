//! Per-culture linear steering of the final hidden state:
//! `h̃ = h + ε·h·W_c`, where `W_c` is the active culture's d×d matrix.

mod checkpoint;
mod train;

use crate::data::CultureId;
use crate::linalg::matmul;
use crate::lm::SteerSite;
use crate::{Error, Result, Scalar};

pub use checkpoint::{load_steer, save_steer, steer_from_bytes, steer_to_bytes};
pub use train::{example_loss, grad_check, train_steer, LossPoint, SteerTrainConfig, SteerTrainOutcome, TrainExample};

/// Default steering scale.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// One-hot selection of a culture from a registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CultureVector {
    len: usize,
    active: usize,
}

impl CultureVector {
    pub fn new(len: usize, active: usize) -> Result<Self> {
        if active >= len {
            return Err(Error::Invalid(format!(
                "culture index {active} outside registry of {len}"
            )));
        }
        Ok(CultureVector { len, active })
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn one_hot<T: Scalar>(&self) -> Vec<T> {
        (0..self.len)
            .map(|i| if i == self.active { T::one() } else { T::zero() })
            .collect()
    }
}

/// Culture registry, matrix bank and scale. The backbone is passed
/// separately to the functions that need it.
#[derive(Clone, Debug, PartialEq)]
pub struct SteerModel<T> {
    registry: Vec<CultureId>,
    d: usize,
    pub epsilon: T,
    /// |C| slices of d×d, in registry order.
    w: Vec<T>,
}

impl<T: Scalar> SteerModel<T> {
    /// Zero-initialized bank.
    pub fn new(registry: Vec<CultureId>, d: usize, epsilon: T) -> Result<Self> {
        if registry.is_empty() {
            return Err(Error::Config("steering needs at least one culture".into()));
        }
        for (i, c) in registry.iter().enumerate() {
            if registry[..i].contains(c) {
                return Err(Error::DuplicateCulture(c.to_string()));
            }
        }
        if !(epsilon >= T::zero()) || !epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        let w = vec![T::zero(); registry.len() * d * d];
        Ok(SteerModel {
            registry,
            d,
            epsilon,
            w,
        })
    }

    pub fn registry(&self) -> &[CultureId] {
        &self.registry
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn culture(&self, id: &CultureId) -> Result<CultureVector> {
        let idx = self
            .registry
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::UnknownCulture(id.to_string()))?;
        CultureVector::new(self.registry.len(), idx)
    }

    fn check(&self, c: &CultureVector) -> Result<()> {
        if c.len != self.registry.len() {
            return Err(Error::DimMismatch {
                expected: self.registry.len(),
                got: c.len,
            });
        }
        Ok(())
    }

    pub fn slice(&self, c: &CultureVector) -> Result<&[T]> {
        self.check(c)?;
        let n = self.d * self.d;
        Ok(&self.w[c.active * n..(c.active + 1) * n])
    }

    pub fn slice_mut(&mut self, c: &CultureVector) -> Result<&mut [T]> {
        self.check(c)?;
        let n = self.d * self.d;
        Ok(&mut self.w[c.active * n..(c.active + 1) * n])
    }

    /// Hook for the backbone's final hidden state.
    pub fn site(&self, c: &CultureVector) -> Result<SteerSite<'_, T>> {
        Ok(SteerSite {
            matrix: self.slice(c)?,
            epsilon: self.epsilon,
        })
    }
}

/// `Δh = h·W_c`.
pub fn steer_delta<T: Scalar>(h: &[T], culture: &CultureVector, model: &SteerModel<T>) -> Result<Vec<T>> {
    if h.len() != model.d {
        return Err(Error::DimMismatch {
            expected: model.d,
            got: h.len(),
        });
    }
    Ok(matmul(h, model.slice(culture)?, 1, model.d, model.d))
}

/// `h̃ = h + ε·Δh`.
pub fn apply_steer<T: Scalar>(h: &[T], culture: &CultureVector, model: &SteerModel<T>) -> Result<Vec<T>> {
    let delta = steer_delta(h, culture, model)?;
    Ok(h.iter().zip(delta).map(|(&x, dx)| x + model.epsilon * dx).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<CultureId> {
        names.iter().map(|n| CultureId::new(*n).unwrap()).collect()
    }

    fn two_by_two(eps: f64) -> (SteerModel<f64>, CultureVector) {
        let mut m = SteerModel::new(ids(&["A", "B"]), 2, eps).unwrap();
        let c = m.culture(&CultureId::new("A").unwrap()).unwrap();
        m.slice_mut(&c).unwrap().copy_from_slice(&[0.0, 2.0, 0.0, 0.0]);
        (m, c)
    }

    #[test]
    fn delta_hand_case() {
        let (m, c) = two_by_two(0.5);
        assert_eq!(steer_delta(&[1.0, 0.0], &c, &m).unwrap(), vec![0.0, 2.0]);
        assert_eq!(apply_steer(&[1.0, 0.0], &c, &m).unwrap(), vec![1.0, 1.0]);
        assert_eq!(steer_delta(&[0.0, 0.0], &c, &m).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_matrix_and_zero_scale() {
        let (m, _) = two_by_two(0.0);
        let b = m.culture(&CultureId::new("B").unwrap()).unwrap();
        assert_eq!(steer_delta(&[3.0, -1.0], &b, &m).unwrap(), vec![0.0, 0.0]);
        let (m, a) = two_by_two(0.0);
        assert_eq!(apply_steer(&[3.0, -1.0], &a, &m).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn dimension_checked() {
        let (m, c) = two_by_two(1.0);
        assert!(matches!(
            steer_delta(&[1.0], &c, &m),
            Err(Error::DimMismatch { expected: 2, got: 1 })
        ));
        assert!(m.culture(&CultureId::new("Z").unwrap()).is_err());
    }

    #[test]
    fn one_hot_vector() {
        let c = CultureVector::new(3, 1).unwrap();
        assert_eq!(c.one_hot::<f64>(), vec![0.0, 1.0, 0.0]);
        assert!(CultureVector::new(2, 2).is_err());
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(SteerModel::<f64>::new(ids(&["A"]), 2, -1.0).is_err());
        assert!(SteerModel::<f64>::new(ids(&["A", "A"]), 2, 0.0).is_err());
    }
}
