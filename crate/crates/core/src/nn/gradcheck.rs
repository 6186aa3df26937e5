//! Central-difference verification of analytic gradients.

use crate::rng::SplitMix64;

/// Gradients smaller than this in both forms count as agreeing zeros.
const ABS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub checked: usize,
}

/// Compares `analytic` against central differences of `loss` on a random subsample
/// of parameters (`fraction` of them, at least `min_checked`).
///
/// Relative error per coordinate is `|a - n| / max(|a|, |n|)`, taken as zero when
/// both are below an absolute floor of 1e-8.
pub fn finite_diff_check(
    params: &[f64],
    analytic: &[f64],
    loss: impl Fn(&[f64]) -> f64,
    eps: f64,
    fraction: f64,
    min_checked: usize,
    seed: u64,
) -> GradCheck {
    assert_eq!(params.len(), analytic.len());
    let n = params.len();
    let k = ((n as f64 * fraction).ceil() as usize).max(min_checked).min(n);
    let idx = SplitMix64::new(seed).sample_indices(n, k);
    let mut work = params.to_vec();
    let mut max_rel: f64 = 0.0;
    for &i in &idx {
        let orig = work[i];
        work[i] = orig + eps;
        let up = loss(&work);
        work[i] = orig - eps;
        let down = loss(&work);
        work[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[i];
        let scale = a.abs().max(numeric.abs());
        let rel = if scale < ABS_FLOOR { 0.0 } else { (a - numeric).abs() / scale };
        max_rel = max_rel.max(rel);
    }
    GradCheck { max_relative_error: max_rel, checked: idx.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{featurize, softmax_ce, Input, Mlp};

    fn ce_setup() -> (Mlp, crate::nn::FeatureVector, Vec<f64>) {
        let m = Mlp::new(vec![64, 16, 12, 6], 21).unwrap();
        let x = featurize("hint tokens: 8 life tokens: 3 red=1 0:ranks=1", 64);
        let t = vec![0.1, 0.0, 0.5, 0.2, 0.0, 0.2];
        (m, x, t)
    }

    fn ce_loss(m: &Mlp, x: &crate::nn::FeatureVector, t: &[f64], w: f64) -> impl Fn(&[f64]) -> f64 {
        let layout = m.layout.clone();
        let x = x.clone();
        let t = t.to_vec();
        move |p: &[f64]| {
            let z = layout.forward(p, Input::Sparse(&x)).unwrap();
            softmax_ce(z.output(), &t, w).unwrap().0
        }
    }

    fn ce_grad(m: &Mlp, x: &crate::nn::FeatureVector, t: &[f64], w: f64) -> Vec<f64> {
        let tr = m.trace(Input::Sparse(x)).unwrap();
        let (_, dz) = softmax_ce(tr.output(), t, w).unwrap();
        let mut g = vec![0.0; m.params.len()];
        m.backward(Input::Sparse(x), &tr, &dz, &mut g);
        g
    }

    #[test]
    fn mlp_cross_entropy_gradients() {
        let (m, x, t) = ce_setup();
        for w in [1.0, -1.0, 0.5, 2.0] {
            let g = ce_grad(&m, &x, &t, w);
            let r = finite_diff_check(&m.params, &g, ce_loss(&m, &x, &t, w), 1e-5, 0.01, 200, 3);
            assert!(r.max_relative_error < 1e-4, "w={w}: {r:?}");
        }
    }

    #[test]
    fn zero_net_has_zero_gradients_through_dead_units() {
        let m = Mlp::zeros(vec![16, 4, 3]).unwrap();
        let x = featurize("a b c", 16);
        let t = vec![1.0 / 3.0; 3];
        let g = ce_grad(&m, &x, &t, 1.0);
        assert!(g.iter().all(|&v| v == 0.0));
        let r = finite_diff_check(&m.params, &g, ce_loss(&m, &x, &t, 1.0), 1e-5, 1.0, 0, 1);
        assert_eq!(r.max_relative_error, 0.0);
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let (m, x, t) = ce_setup();
        let mut g = ce_grad(&m, &x, &t, 1.0);
        // Sign flip on every output-layer weight.
        let n = g.len();
        for v in &mut g[n - 6 - 12 * 6..n - 6] {
            *v = -*v;
        }
        let r = finite_diff_check(&m.params, &g, ce_loss(&m, &x, &t, 1.0), 1e-5, 1.0, 0, 3);
        assert!(r.max_relative_error > 1e-2);
    }
}
