use crate::linalg::{argmax, softmax};
use crate::lm::model::{BackboneLm, SteerSite};
use crate::{Error, Result, Scalar};

/// Next-token distributions recorded over a greedy decoding window.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTrace<T> {
    pub prompt: Vec<u32>,
    pub k: usize,
    /// `k` rows of length V.
    pub rows: Vec<Vec<T>>,
    /// Greedy token emitted at each step.
    pub emitted: Vec<u32>,
}

impl<T: Scalar> DistributionTrace<T> {
    /// Builds a trace directly from rows; emitted tokens are the row argmaxes.
    pub fn from_rows(prompt: Vec<u32>, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ZeroWindow);
        }
        let v = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != v) {
            return Err(Error::DimMismatch {
                expected: v,
                got: r.len(),
            });
        }
        let emitted = rows.iter().map(|r| argmax(r) as u32).collect();
        Ok(DistributionTrace {
            prompt,
            k: rows.len(),
            rows,
            emitted,
        })
    }

    pub fn vocab(&self) -> usize {
        self.rows[0].len()
    }

    /// Probability of `token` at window step `m`.
    pub fn prob(&self, m: usize, token: u32) -> T {
        self.rows[m][token as usize]
    }
}

/// Greedy decode for `k` steps after `prompt`, recording the full softmax
/// row at every step. With `steer`, each final hidden state is steered
/// before unembedding.
pub fn trace_window<T: Scalar>(
    model: &BackboneLm<T>,
    prompt: &[u32],
    k: usize,
    steer: Option<SteerSite<'_, T>>,
    temperature: T,
) -> Result<DistributionTrace<T>> {
    if k == 0 {
        return Err(Error::ZeroWindow);
    }
    if prompt.is_empty() {
        return Err(Error::Invalid("empty prompt".into()));
    }
    let context = model.dims().context;
    if prompt.len() + k > context {
        return Err(Error::ContextOverflow {
            needed: prompt.len() + k,
            context,
        });
    }
    let mut ids = prompt.to_vec();
    let mut rows = Vec::with_capacity(k);
    let mut emitted = Vec::with_capacity(k);
    for _ in 0..k {
        let acts = model.forward(&ids)?;
        let h = acts.hidden_row(ids.len() - 1);
        let h = match &steer {
            Some(s) => s.apply(h),
            None => h.to_vec(),
        };
        let row = softmax(&model.logits(&h), temperature);
        let next = argmax(&row) as u32;
        rows.push(row);
        emitted.push(next);
        ids.push(next);
    }
    Ok(DistributionTrace {
        prompt: prompt.to_vec(),
        k,
        rows,
        emitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::model::ModelDims;

    fn model() -> BackboneLm<f64> {
        BackboneLm::init(
            ModelDims {
                vocab: 13,
                d: 4,
                context: 10,
            },
            5,
        )
    }

    #[test]
    fn rows_normalized_and_greedy() {
        let m = model();
        let t = trace_window(&m, &[1, 4, 5], 5, None, 1.0).unwrap();
        assert_eq!(t.rows.len(), 5);
        for (row, &e) in t.rows.iter().zip(&t.emitted) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(argmax(row) as u32, e);
        }
    }

    #[test]
    fn single_step() {
        let t = trace_window(&model(), &[1], 1, None, 1.0).unwrap();
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn zero_epsilon_matches_unsteered() {
        let m = model();
        let w: Vec<f64> = (0..16).map(|i| i as f64 * 0.37 - 2.0).collect();
        let site = SteerSite {
            matrix: &w,
            epsilon: 0.0,
        };
        let a = trace_window(&m, &[1, 2], 4, None, 1.0).unwrap();
        let b = trace_window(&m, &[1, 2], 4, Some(site), 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overflow_reports_required_context() {
        let err = trace_window(&model(), &[1; 7], 5, None, 1.0).unwrap_err();
        assert!(matches!(
            err,
            Error::ContextOverflow {
                needed: 12,
                context: 10
            }
        ));
    }
}
