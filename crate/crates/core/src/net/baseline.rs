use super::spec::{BaselineLayer, BaselineSpec};
use super::tape::{Context, NodeId, Tape};
use crate::error::{Error, Result};
use crate::image::{Boundary, GeometricImage, TapTable};
use crate::tensor::{pow, Parity, TensorSpec};

/// A validated baseline CNN.
#[derive(Clone, Debug)]
pub struct Baseline {
    spec: BaselineSpec,
    dilations: Vec<usize>,
    param_count: usize,
}

impl Baseline {
    pub fn new(spec: BaselineSpec) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        if spec.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if spec.filter_size.is_multiple_of(2) {
            return Err(Error::EvenFilter(spec.filter_size));
        }
        if spec.layers.is_empty() {
            return bad("baseline has no layers".into());
        }
        let mut dilations = Vec::new();
        for (li, layer) in spec.layers.iter().enumerate() {
            match layer {
                BaselineLayer::Conv { out_channels, dilations: dils, .. } => {
                    if *out_channels == 0 {
                        return bad(format!("layer {li}: zero output channels"));
                    }
                    if dils.is_empty() || dils.contains(&0) {
                        return bad(format!("layer {li}: dilations must be a nonempty list of positive integers"));
                    }
                    dilations.extend(dils.iter().copied());
                }
                BaselineLayer::DilationSum => {
                    if li == 0 {
                        return bad("dilation_sum cannot be the first layer".into());
                    }
                }
            }
        }
        dilations.sort_unstable();
        dilations.dedup();
        let mut net = Baseline { spec, dilations, param_count: 0 };
        let ctx = Context { pixels: 0, filters: Vec::new(), taps: Vec::new(), plans: Vec::new() };
        let mut tape = Tape::new(&ctx, &[], false);
        let input = tape.input(Vec::new(), pow(net.spec.d, net.spec.input.k));
        net.forward_graph(&mut tape, input)?;
        net.param_count = tape.allocated;
        Ok(net)
    }

    pub fn spec(&self) -> &BaselineSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub(crate) fn context(&self, n: usize) -> Result<Context> {
        let shape = GeometricImage::zeros(self.spec.filter_size, TensorSpec::new(self.spec.d, 0, Parity::Pos));
        let taps = self
            .dilations
            .iter()
            .map(|&dil| TapTable::new(n, self.spec.d, &shape, dil, Boundary::Torus))
            .collect::<Result<Vec<_>>>()?;
        Ok(Context { pixels: pow(n, self.spec.d), filters: Vec::new(), taps, plans: Vec::new() })
    }

    pub(crate) fn forward_graph(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        let taps_per_filter = pow(self.spec.filter_size, self.spec.d);
        let mut chunks = vec![input];
        for (li, layer) in self.spec.layers.iter().enumerate() {
            match layer {
                BaselineLayer::Conv { out_channels, dilations, activation } => {
                    let x = if chunks.len() == 1 { chunks[0] } else { tape.concat(chunks.clone()) };
                    chunks = dilations
                        .iter()
                        .map(|dil| {
                            let t = self.dilations.binary_search(dil).expect("dilation registered");
                            let c = tape.channel_conv(x, *out_channels, t, taps_per_filter);
                            match activation {
                                Some(a) => tape.activate(c, *a),
                                None => c,
                            }
                        })
                        .collect();
                }
                BaselineLayer::DilationSum => {
                    let w = tape.width(chunks[0]);
                    if chunks.iter().any(|&c| tape.width(c) != w) {
                        return Err(Error::InvalidNetwork(format!("layer {li}: dilation blocks differ in width")));
                    }
                    chunks = vec![tape.weighted_sum(chunks)];
                }
            }
        }
        let out = if chunks.len() == 1 { chunks[0] } else { tape.concat(chunks) };
        let expected = pow(self.spec.d, self.spec.output.k);
        if tape.width(out) != expected {
            return Err(Error::InvalidNetwork(format!(
                "baseline ends with {} channels but a {} output needs {expected}",
                tape.width(out),
                self.spec.output
            )));
        }
        Ok(out)
    }
}
