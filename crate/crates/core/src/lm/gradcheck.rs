//! Central finite-difference checks of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lm::model::{BackboneLm, Params, TokenTarget};
use crate::{Error, Result};

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central difference of `f` around `x[i]`; restores `x[i]` afterwards.
pub fn central_difference<F>(x: &mut [f64], i: usize, step: f64, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let orig = x[i];
    x[i] = orig + step;
    let up = f(x)?;
    x[i] = orig - step;
    let down = f(x)?;
    x[i] = orig;
    if !up.is_finite() || !down.is_finite() {
        return Err(Error::NonFiniteLoss(format!("finite difference at index {i}")));
    }
    Ok((up - down) / (2.0 * step))
}

/// Maximum relative error per parameter group, over `probes` random entries
/// of each group.
pub fn backbone_grad_check(
    model: &BackboneLm<f64>,
    input: &[u32],
    targets: &[TokenTarget],
    probes: usize,
    step: f64,
    seed: u64,
) -> Result<Vec<(&'static str, f64)>> {
    if probes == 0 {
        return Err(Error::NoProbes);
    }
    let (loss, grads, _) = model.loss_and_grads(input, targets, None)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss("backbone loss".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = model.clone();
    let mut out = Vec::new();
    for (gi, name) in Params::<f64>::GROUPS.iter().enumerate() {
        let len = grads.groups()[gi].len();
        let mut worst = 0.0f64;
        for _ in 0..probes {
            let i = rng.gen_range(0..len);
            let analytic = grads.groups()[gi][i];
            let orig = work.params.groups()[gi][i];
            let mut eval = |delta: f64| {
                work.params.groups_mut()[gi][i] = orig + delta;
                let l = work.loss(input, targets, None);
                work.params.groups_mut()[gi][i] = orig;
                l
            };
            let up = eval(step)?;
            let down = eval(-step)?;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFiniteLoss(format!("perturbed {name}[{i}]")));
            }
            let numeric = (up - down) / (2.0 * step);
            worst = worst.max(relative_error(analytic, numeric));
        }
        out.push((*name, worst));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::model::{teacher_forced, ModelDims};

    #[test]
    fn all_groups_within_tolerance() {
        let m = BackboneLm::<f64>::init(
            ModelDims {
                vocab: 20,
                d: 6,
                context: 10,
            },
            11,
        );
        let (input, targets) = teacher_forced(&[1, 5, 9, 4], &[12, 7, 2]);
        let res = backbone_grad_check(&m, &input, &targets, 12, 1e-5, 3).unwrap();
        assert_eq!(res.len(), 10);
        for (name, err) in res {
            assert!(err <= 1e-4, "{name}: {err}");
        }
    }

    #[test]
    fn zero_probes_rejected() {
        let m = BackboneLm::<f64>::init(
            ModelDims {
                vocab: 5,
                d: 2,
                context: 4,
            },
            1,
        );
        let t = [TokenTarget { pos: 0, token: 2 }];
        assert!(matches!(
            backbone_grad_check(&m, &[1], &t, 0, 1e-5, 0),
            Err(Error::NoProbes)
        ));
    }

    #[test]
    fn central_difference_of_quadratic() {
        let mut x = vec![1.0, 3.0];
        let d = central_difference(&mut x, 1, 1e-4, |x| Ok(x[1] * x[1])).unwrap();
        assert!((d - 6.0).abs() < 1e-8);
        assert_eq!(x, vec![1.0, 3.0]);
    }
}
