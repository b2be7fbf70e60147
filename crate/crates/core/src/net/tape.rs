//! A small reverse-mode tape over flat pixel-major buffers.
//!
//! Every node holds `pixels * width` numbers: pixel-major, with `width`
//! components (tensor components or CNN channels) contiguous per pixel. The
//! same tape serves the equivariant nets and the baseline CNN. A tape built
//! with `compute = false` records shapes and parameter offsets only, which
//! is how networks are validated and sized at construction.

use serde::{Deserialize, Serialize};

use crate::image::{convolve_accumulate, convolve_input_adjoint, GeometricImage, TapTable};
use crate::tensor::ContractionPlan;

/// Pointwise nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
        }
    }
}

/// Fixed operands shared by every tape of one network at one sidelength.
pub(crate) struct Context {
    pub pixels: usize,
    pub filters: Vec<GeometricImage>,
    pub taps: Vec<TapTable>,
    pub plans: Vec<ContractionPlan>,
}

pub(crate) type NodeId = usize;

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Input,
    /// `sum_j p[offset + j] * inputs[j]`.
    WeightedSum {
        inputs: Vec<NodeId>,
        offset: usize,
    },
    /// Geometric convolution with a fixed filter.
    Convolve {
        input: NodeId,
        filter: usize,
        taps: usize,
    },
    Contract {
        input: NodeId,
        plan: usize,
    },
    Activate {
        input: NodeId,
        kind: Activation,
    },
    /// Pixelwise outer product.
    Outer {
        a: NodeId,
        b: NodeId,
    },
    /// Multi-channel scalar convolution with learned `M^d` filters laid out
    /// as `p[offset + (o * in_ch + i) * taps + t]`.
    ChannelConv {
        input: NodeId,
        offset: usize,
        in_ch: usize,
        out_ch: usize,
        taps: usize,
    },
    /// Channel concatenation, pixel by pixel.
    Concat {
        inputs: Vec<NodeId>,
    },
}

struct Node {
    op: Op,
    width: usize,
    value: Vec<f64>,
}

pub(crate) struct Tape<'a> {
    ctx: &'a Context,
    params: &'a [f64],
    compute: bool,
    nodes: Vec<Node>,
    /// Parameters handed out so far.
    pub allocated: usize,
}

impl<'a> Tape<'a> {
    pub fn new(ctx: &'a Context, params: &'a [f64], compute: bool) -> Self {
        Tape { ctx, params, compute, nodes: Vec::new(), allocated: 0 }
    }

    pub fn width(&self, id: NodeId) -> usize {
        self.nodes[id].width
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    fn push(&mut self, op: Op, width: usize, value: Vec<f64>) -> NodeId {
        self.nodes.push(Node { op, width, value });
        self.nodes.len() - 1
    }

    fn alloc(&mut self, count: usize) -> usize {
        let offset = self.allocated;
        self.allocated += count;
        offset
    }

    pub fn input(&mut self, data: Vec<f64>, width: usize) -> NodeId {
        self.push(Op::Input, width, data)
    }

    pub fn weighted_sum(&mut self, inputs: Vec<NodeId>) -> NodeId {
        assert!(!inputs.is_empty(), "weighted sum of nothing");
        let width = self.width(inputs[0]);
        let offset = self.alloc(inputs.len());
        let mut value = Vec::new();
        if self.compute {
            value = vec![0.0; self.ctx.pixels * width];
            for (j, &id) in inputs.iter().enumerate() {
                let w = self.params[offset + j];
                if w == 0.0 {
                    continue;
                }
                for (y, x) in value.iter_mut().zip(&self.nodes[id].value) {
                    *y += w * x;
                }
            }
        }
        self.push(Op::WeightedSum { inputs, offset }, width, value)
    }

    pub fn convolve(&mut self, input: NodeId, filter: usize, taps: usize) -> NodeId {
        let w_in = self.width(input);
        let f = &self.ctx.filters[filter];
        let width = w_in * f.spec().len();
        let mut value = Vec::new();
        if self.compute {
            value = vec![0.0; self.ctx.pixels * width];
            convolve_accumulate(&self.nodes[input].value, w_in, f, &self.ctx.taps[taps], &mut value);
        }
        self.push(Op::Convolve { input, filter, taps }, width, value)
    }

    pub fn contract(&mut self, input: NodeId, plan: usize, width: usize) -> NodeId {
        let mut value = Vec::new();
        if self.compute {
            let p = &self.ctx.plans[plan];
            debug_assert_eq!(p.in_len(), self.width(input));
            debug_assert_eq!(p.out_len(), width);
            value = vec![0.0; self.ctx.pixels * width];
            for (src, dst) in self.nodes[input].value.chunks_exact(p.in_len()).zip(value.chunks_exact_mut(width)) {
                p.apply(src, dst);
            }
        }
        self.push(Op::Contract { input, plan }, width, value)
    }

    pub fn activate(&mut self, input: NodeId, kind: Activation) -> NodeId {
        let width = self.width(input);
        let value =
            if self.compute { self.nodes[input].value.iter().map(|&x| kind.apply(x)).collect() } else { Vec::new() };
        self.push(Op::Activate { input, kind }, width, value)
    }

    pub fn outer(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (wa, wb) = (self.width(a), self.width(b));
        let width = wa * wb;
        let mut value = Vec::new();
        if self.compute {
            value = Vec::with_capacity(self.ctx.pixels * width);
            for (x, y) in self.nodes[a].value.chunks_exact(wa).zip(self.nodes[b].value.chunks_exact(wb)) {
                for &u in x {
                    value.extend(y.iter().map(|&v| u * v));
                }
            }
        }
        self.push(Op::Outer { a, b }, width, value)
    }

    pub fn channel_conv(&mut self, input: NodeId, out_ch: usize, taps: usize, t_count: usize) -> NodeId {
        let in_ch = self.width(input);
        let offset = self.alloc(out_ch * in_ch * t_count);
        let mut value = Vec::new();
        if self.compute {
            debug_assert_eq!(self.ctx.taps[taps].sources.len(), t_count);
            value = vec![0.0; self.ctx.pixels * out_ch];
            let x = &self.nodes[input].value;
            let w = &self.params[offset..offset + out_ch * in_ch * t_count];
            for (t, row) in self.ctx.taps[taps].sources.iter().enumerate() {
                for (p, src) in row.iter().enumerate() {
                    let Some(s) = *src else { continue };
                    let a = &x[s * in_ch..(s + 1) * in_ch];
                    let o = &mut value[p * out_ch..(p + 1) * out_ch];
                    for (oc, y) in o.iter_mut().enumerate() {
                        let base = oc * in_ch * t_count + t;
                        *y += a.iter().enumerate().map(|(i, &v)| v * w[base + i * t_count]).sum::<f64>();
                    }
                }
            }
        }
        self.push(Op::ChannelConv { input, offset, in_ch, out_ch, taps }, out_ch, value)
    }

    pub fn concat(&mut self, inputs: Vec<NodeId>) -> NodeId {
        let width: usize = inputs.iter().map(|&i| self.width(i)).sum();
        let mut value = Vec::new();
        if self.compute {
            value = Vec::with_capacity(self.ctx.pixels * width);
            for p in 0..self.ctx.pixels {
                for &id in &inputs {
                    let w = self.nodes[id].width;
                    value.extend_from_slice(&self.nodes[id].value[p * w..(p + 1) * w]);
                }
            }
        }
        self.push(Op::Concat { inputs }, width, value)
    }

    /// Accumulates `d(output . seed)/d(params)` into `grad`.
    pub fn backward(&self, output: NodeId, seed: &[f64], grad: &mut [f64]) {
        assert!(self.compute, "backward on a shape-only tape");
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output] = Some(seed.to_vec());
        let pixels = self.ctx.pixels;
        for id in (0..=output).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            let slot = |grads: &mut Vec<Option<Vec<f64>>>, target: NodeId| -> Vec<f64> {
                grads[target].take().unwrap_or_else(|| vec![0.0; pixels * self.nodes[target].width])
            };
            match &node.op {
                Op::Input => {}
                Op::WeightedSum { inputs, offset } => {
                    for (j, &src) in inputs.iter().enumerate() {
                        let x = &self.nodes[src].value;
                        grad[offset + j] += x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
                        let w = self.params[offset + j];
                        if w != 0.0 {
                            let mut gi = slot(&mut grads, src);
                            gi.iter_mut().zip(&g).for_each(|(a, b)| *a += w * b);
                            grads[src] = Some(gi);
                        }
                    }
                }
                Op::Convolve { input, filter, taps } => {
                    let mut gi = slot(&mut grads, *input);
                    let w_in = self.nodes[*input].width;
                    convolve_input_adjoint(&g, w_in, &self.ctx.filters[*filter], &self.ctx.taps[*taps], &mut gi);
                    grads[*input] = Some(gi);
                }
                Op::Contract { input, plan } => {
                    let p = &self.ctx.plans[*plan];
                    let mut gi = slot(&mut grads, *input);
                    for (go, dst) in g.chunks_exact(node.width).zip(gi.chunks_exact_mut(p.in_len())) {
                        p.apply_adjoint(go, dst);
                    }
                    grads[*input] = Some(gi);
                }
                Op::Activate { input, kind } => {
                    let mut gi = slot(&mut grads, *input);
                    for ((a, &x), &b) in gi.iter_mut().zip(&self.nodes[*input].value).zip(&g) {
                        *a += kind.derivative(x) * b;
                    }
                    grads[*input] = Some(gi);
                }
                Op::Outer { a, b } => {
                    let (wa, wb) = (self.nodes[*a].width, self.nodes[*b].width);
                    let mut ga = slot(&mut grads, *a);
                    {
                        let bv = &self.nodes[*b].value;
                        for p in 0..pixels {
                            let gp = &g[p * wa * wb..(p + 1) * wa * wb];
                            let y = &bv[p * wb..(p + 1) * wb];
                            for i in 0..wa {
                                ga[p * wa + i] +=
                                    gp[i * wb..(i + 1) * wb].iter().zip(y).map(|(u, v)| u * v).sum::<f64>();
                            }
                        }
                    }
                    grads[*a] = Some(ga);
                    let mut gb = slot(&mut grads, *b);
                    let av = &self.nodes[*a].value;
                    for p in 0..pixels {
                        let gp = &g[p * wa * wb..(p + 1) * wa * wb];
                        let x = &av[p * wa..(p + 1) * wa];
                        for (i, &u) in x.iter().enumerate() {
                            for j in 0..wb {
                                gb[p * wb + j] += u * gp[i * wb + j];
                            }
                        }
                    }
                    grads[*b] = Some(gb);
                }
                Op::ChannelConv { input, offset, in_ch, out_ch, taps } => {
                    let (in_ch, out_ch) = (*in_ch, *out_ch);
                    let table = &self.ctx.taps[*taps];
                    let t_count = table.sources.len();
                    let x = &self.nodes[*input].value;
                    let w = &self.params[*offset..*offset + out_ch * in_ch * t_count];
                    let mut gi = slot(&mut grads, *input);
                    let gw = &mut grad[*offset..*offset + out_ch * in_ch * t_count];
                    for (t, row) in table.sources.iter().enumerate() {
                        for (p, src) in row.iter().enumerate() {
                            let Some(s) = *src else { continue };
                            let go = &g[p * out_ch..(p + 1) * out_ch];
                            for (oc, &gv) in go.iter().enumerate() {
                                if gv == 0.0 {
                                    continue;
                                }
                                let base = oc * in_ch * t_count + t;
                                for i in 0..in_ch {
                                    gw[base + i * t_count] += gv * x[s * in_ch + i];
                                    gi[s * in_ch + i] += gv * w[base + i * t_count];
                                }
                            }
                        }
                    }
                    grads[*input] = Some(gi);
                }
                Op::Concat { inputs } => {
                    let mut start = 0;
                    for &src in inputs {
                        let w = self.nodes[src].width;
                        let mut gi = slot(&mut grads, src);
                        for p in 0..pixels {
                            for c in 0..w {
                                gi[p * w + c] += g[p * node.width + start + c];
                            }
                        }
                        grads[src] = Some(gi);
                        start += w;
                    }
                }
            }
        }
    }
}
