use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::error::{Error, Result};
use crate::image::GeometricImage;
use crate::numerics::Prng;
use crate::symmetry::Group;
use crate::tensor::TensorSpec;

/// Outcome of [`check_equivariance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    /// Largest `|f(gA) - g f(A)|_inf / max(|f(A)|_inf, |f(gA)|_inf)`.
    pub max_violation: f64,
    pub trials: usize,
    pub group_elements: usize,
    pub translations: usize,
    pub checks: usize,
}

impl EquivarianceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

pub fn random_image(n: usize, spec: TensorSpec, rng: &mut Prng) -> GeometricImage {
    let len = crate::tensor::pow(n, spec.d) * spec.len();
    GeometricImage::new(n, spec, (0..len).map(|_| rng.gaussian(0.0, 1.0)).collect()).expect("consistent length")
}

/// Tests `f(h A) = h f(A)` for every `h = t g` with `g` in `B_d` and `t` the
/// identity shift or one of `translations` random shifts. Each trial draws a
/// random input and, when `params` is `None`, parameters from `N(0, init_std^2)`.
pub fn check_equivariance(
    model: &Model,
    params: Option<&[f64]>,
    n: usize,
    trials: usize,
    translations: usize,
    init_std: f64,
    seed: u64,
) -> Result<EquivarianceReport> {
    if n.is_multiple_of(2) {
        return Err(Error::UnsupportedSidelength(n));
    }
    let d = model.d();
    let group = Group::hyperoctahedral(d);
    let eval = model.evaluator(n)?;
    let root = Prng::new(seed);
    let input_sig = model.input();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for t in 0..trials {
        let mut rng = root.derive(t as u64);
        let drawn;
        let p = match params {
            Some(p) => p,
            None => {
                drawn = model.init_params(&mut rng, init_std);
                &drawn[..]
            }
        };
        let a = random_image(n, TensorSpec::new(d, input_sig.k, input_sig.parity), &mut rng);
        let fa = eval.forward(p, &a)?;
        let mut shifts = vec![vec![0i64; d]];
        for _ in 0..translations {
            shifts.push((0..d).map(|_| rng.below(n) as i64).collect());
        }
        for g in group.elements() {
            let ga = a.act(g)?;
            let gfa = fa.act(g)?;
            for s in &shifts {
                let lhs = eval.forward(p, &ga.translate(s)?)?;
                let rhs = gfa.translate(s)?;
                let scale = lhs.max_abs().max(rhs.max_abs());
                let diff = lhs.max_abs_diff(&rhs)?;
                let v = if scale > 0.0 { diff / scale } else { diff };
                worst = worst.max(if v.is_nan() { f64::INFINITY } else { v });
                checks += 1;
            }
        }
    }
    Ok(EquivarianceReport { max_violation: worst, trials, group_elements: group.len(), translations, checks })
}
