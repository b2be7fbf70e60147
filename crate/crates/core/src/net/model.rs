use super::baseline::Baseline;
use super::ginet::GiNet;
use super::spec::{ModelSpec, Signature};
use super::tape::{Context, Tape};
use crate::error::{Error, Result};
use crate::image::GeometricImage;
use crate::numerics::Prng;
use crate::tensor::TensorSpec;

/// Either kind of network, ready to evaluate.
#[derive(Clone, Debug)]
pub enum Model {
    Ginet(GiNet),
    Baseline(Baseline),
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Ginet(s) => Model::Ginet(GiNet::new(s)?),
            ModelSpec::Baseline(s) => Model::Baseline(Baseline::new(s)?),
        })
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            Model::Ginet(n) => ModelSpec::Ginet(n.spec().clone()),
            Model::Baseline(b) => ModelSpec::Baseline(b.spec().clone()),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Ginet(n) => n.param_count(),
            Model::Baseline(b) => b.param_count(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Model::Ginet(n) => n.spec().d,
            Model::Baseline(b) => b.spec().d,
        }
    }

    pub fn input(&self) -> Signature {
        match self {
            Model::Ginet(n) => n.spec().input,
            Model::Baseline(b) => b.spec().input,
        }
    }

    pub fn output(&self) -> Signature {
        match self {
            Model::Ginet(n) => n.spec().output,
            Model::Baseline(b) => b.spec().output,
        }
    }

    /// Independent `N(0, std^2)` draws.
    pub fn init_params(&self, rng: &mut Prng, std: f64) -> Vec<f64> {
        (0..self.param_count()).map(|_| rng.gaussian(0.0, std)).collect()
    }

    pub fn evaluator(&self, n: usize) -> Result<Evaluator<'_>> {
        let ctx = match self {
            Model::Ginet(net) => net.context(n)?,
            Model::Baseline(b) => b.context(n)?,
        };
        Ok(Evaluator { model: self, ctx, n })
    }

    pub fn forward(&self, params: &[f64], input: &GeometricImage) -> Result<GeometricImage> {
        self.evaluator(input.n())?.forward(params, input)
    }
}

/// A model bound to one image sidelength, with its lookup tables built.
pub struct Evaluator<'m> {
    model: &'m Model,
    ctx: Context,
    n: usize,
}

impl Evaluator<'_> {
    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, params: &[f64], input: &GeometricImage) -> Result<()> {
        if params.len() != self.model.param_count() {
            return Err(Error::ParamCount { expected: self.model.param_count(), found: params.len() });
        }
        if input.n() != self.n {
            return Err(Error::SpecMismatch(format!("evaluator built for N={}, got N={}", self.n, input.n())));
        }
        let want = self.model.input();
        let s = input.spec();
        if s.d != self.model.d() || s.k != want.k || s.parity != want.parity {
            return Err(Error::SpecMismatch(format!(
                "model expects {} images in d={}, got {}",
                want,
                self.model.d(),
                s
            )));
        }
        Ok(())
    }

    fn output_spec(&self) -> TensorSpec {
        let out = self.model.output();
        TensorSpec::new(self.model.d(), out.k, out.parity)
    }

    fn record<'t>(&'t self, tape: &mut Tape<'t>, input: &GeometricImage) -> Result<usize> {
        let node = tape.input(input.data().to_vec(), input.spec().len());
        match self.model {
            Model::Ginet(net) => net.forward_graph(tape, node),
            Model::Baseline(b) => b.forward_graph(tape, node),
        }
    }

    pub fn forward(&self, params: &[f64], input: &GeometricImage) -> Result<GeometricImage> {
        self.check(params, input)?;
        let mut tape = Tape::new(&self.ctx, params, true);
        let out = self.record(&mut tape, input)?;
        GeometricImage::new(self.n, self.output_spec(), tape.value(out).to_vec())
    }

    /// Prediction together with the gradient of `<seed, f(input)>` where the
    /// seed is computed from the prediction.
    pub fn forward_backward(
        &self,
        params: &[f64],
        input: &GeometricImage,
        seed: impl FnOnce(&GeometricImage) -> Vec<f64>,
    ) -> Result<(GeometricImage, Vec<f64>)> {
        self.check(params, input)?;
        let mut tape = Tape::new(&self.ctx, params, true);
        let out = self.record(&mut tape, input)?;
        let prediction = GeometricImage::new(self.n, self.output_spec(), tape.value(out).to_vec())?;
        let s = seed(&prediction);
        let mut grad = vec![0.0; params.len()];
        tape.backward(out, &s, &mut grad);
        Ok((prediction, grad))
    }

    /// Sum of squared errors against `target` and its gradient divided by 2,
    /// i.e. `sum (f - y) df/dtheta`.
    pub fn half_sse_gradient(
        &self,
        params: &[f64],
        input: &GeometricImage,
        target: &GeometricImage,
    ) -> Result<(f64, Vec<f64>)> {
        if target.spec() != self.output_spec() || target.n() != self.n {
            return Err(Error::SpecMismatch(format!("target {} does not match the model output", target.spec())));
        }
        let mut sse = 0.0;
        let (_, grad) = self.forward_backward(params, input, |pred| {
            let r: Vec<f64> = pred.data().iter().zip(target.data()).map(|(a, b)| a - b).collect();
            sse = r.iter().map(|x| x * x).sum();
            r
        })?;
        Ok((sse, grad))
    }
}
