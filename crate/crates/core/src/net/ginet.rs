use std::collections::BTreeMap;
use std::ops::Range;

use super::spec::{LayerSpec, NetSpec, Signature};
use super::tape::{Context, NodeId, Tape};
use crate::error::{Error, Result};
use crate::filters::{enumerate_invariant_filters, FilterBank};
use crate::image::{Boundary, GeometricImage, TapTable};
use crate::tensor::{contraction_pair_sets, pow, ContractionPlan};

/// Contraction plans requested while building a graph, grouped by
/// `(k_in, k_out)` and stored contiguously per group.
#[derive(Clone, Debug, Default)]
pub(crate) struct PlanRegistry {
    index: BTreeMap<(usize, usize), Range<usize>>,
    entries: Vec<(usize, Vec<(usize, usize)>)>,
}

/// Plan lookup while building a graph: the sizing pass registers plans,
/// later passes only read them.
pub(crate) enum Plans<'a> {
    Recording(&'a mut PlanRegistry),
    Frozen(&'a PlanRegistry),
}

impl Plans<'_> {
    fn plans(&mut self, k: usize, target: usize) -> Range<usize> {
        match self {
            Plans::Recording(reg) => reg.register(k, target),
            Plans::Frozen(reg) => reg
                .index
                .get(&(k, target))
                .cloned()
                .unwrap_or_else(|| panic!("contraction {k}->{target} was not seen while sizing the network")),
        }
    }
}

impl PlanRegistry {
    fn register(&mut self, k: usize, target: usize) -> Range<usize> {
        if let Some(r) = self.index.get(&(k, target)) {
            return r.clone();
        }
        let start = self.entries.len();
        for pairs in contraction_pair_sets(k, target) {
            self.entries.push((k, pairs));
        }
        let range = start..self.entries.len();
        self.index.insert((k, target), range.clone());
        range
    }

    pub(crate) fn build(&self, d: usize) -> Result<Vec<ContractionPlan>> {
        self.entries.iter().map(|(k, pairs)| ContractionPlan::new(d, *k, pairs)).collect()
    }
}

type Stack = BTreeMap<Signature, Vec<NodeId>>;

/// A validated GI-Net with its filter banks and parameter layout.
#[derive(Clone, Debug)]
pub struct GiNet {
    spec: NetSpec,
    filters: Vec<GeometricImage>,
    filter_sigs: Vec<Signature>,
    /// Global filter indices used by each layer (empty for non-conv layers).
    layer_filters: Vec<Vec<usize>>,
    dilations: Vec<usize>,
    plans: PlanRegistry,
    param_count: usize,
    layer_params: Vec<Range<usize>>,
    /// Images in the stack after each layer.
    layer_images: Vec<usize>,
}

impl GiNet {
    pub fn new(spec: NetSpec) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        if spec.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if spec.filter_size.is_multiple_of(2) {
            return Err(Error::EvenFilter(spec.filter_size));
        }
        if spec.max_order == 0 {
            return bad("max_order must be at least 1".into());
        }
        if spec.input.k > spec.max_order {
            return bad(format!("input order {} exceeds max_order {}", spec.input.k, spec.max_order));
        }
        match spec.layers.last() {
            Some(LayerSpec::FinalCombine) => {}
            _ => return bad("the last layer must be final_combine".into()),
        }
        if spec.layers.iter().filter(|l| matches!(l, LayerSpec::FinalCombine)).count() != 1 {
            return bad("final_combine must appear exactly once".into());
        }

        let mut banks: BTreeMap<Signature, FilterBank> = BTreeMap::new();
        let mut filters = Vec::new();
        let mut filter_sigs = Vec::new();
        let mut global: BTreeMap<Signature, Range<usize>> = BTreeMap::new();
        let mut layer_filters = Vec::new();
        let mut dilations = Vec::new();
        for (li, layer) in spec.layers.iter().enumerate() {
            let mut used = Vec::new();
            match layer {
                LayerSpec::Conv { filters: sigs, dilations: dils, .. } => {
                    if sigs.is_empty() {
                        return bad(format!("layer {li}: no filter types"));
                    }
                    if dils.is_empty() || dils.contains(&0) {
                        return bad(format!("layer {li}: dilations must be a nonempty list of positive integers"));
                    }
                    for sig in sigs {
                        if !banks.contains_key(sig) {
                            let bank = enumerate_invariant_filters(spec.filter_size, spec.d, sig.k, sig.parity)?;
                            if bank.is_empty() {
                                return bad(format!(
                                    "layer {li}: there are no invariant {sig} filters of side {}",
                                    spec.filter_size
                                ));
                            }
                            let start = filters.len();
                            for f in &bank.filters {
                                filters.push(f.clone());
                                filter_sigs.push(*sig);
                            }
                            global.insert(*sig, start..filters.len());
                            banks.insert(*sig, bank);
                        }
                        used.extend(global[sig].clone());
                    }
                    dilations.extend(dils.iter().copied());
                }
                LayerSpec::OuterProduct { degree } if *degree < 2 => {
                    return bad(format!("layer {li}: outer product degree must be at least 2"));
                }
                _ => {}
            }
            layer_filters.push(used);
        }
        dilations.sort_unstable();
        dilations.dedup();

        let mut net = GiNet {
            spec,
            filters,
            filter_sigs,
            layer_filters,
            dilations,
            plans: PlanRegistry::default(),
            param_count: 0,
            layer_params: Vec::new(),
            layer_images: Vec::new(),
        };
        // Size the network with a shape-only pass.
        let ctx = Context { pixels: 0, filters: net.filters.clone(), taps: Vec::new(), plans: Vec::new() };
        let mut plans = PlanRegistry::default();
        let mut layer_params = Vec::new();
        let mut layer_images = Vec::new();
        {
            let mut tape = Tape::new(&ctx, &[], false);
            let input = tape.input(Vec::new(), pow(net.spec.d, net.spec.input.k));
            net.build_graph(
                &mut tape,
                &mut Plans::Recording(&mut plans),
                input,
                Some((&mut layer_params, &mut layer_images)),
            )?;
            net.param_count = tape.allocated;
        }
        net.plans = plans;
        net.layer_params = layer_params;
        net.layer_images = layer_images;
        Ok(net)
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Parameter range owned by each layer.
    pub fn layer_params(&self) -> &[Range<usize>] {
        &self.layer_params
    }

    /// Number of images in the stack after each layer.
    pub fn layer_images(&self) -> &[usize] {
        &self.layer_images
    }

    pub fn filters(&self) -> &[GeometricImage] {
        &self.filters
    }

    pub(crate) fn context(&self, n: usize) -> Result<Context> {
        let taps = self
            .dilations
            .iter()
            .map(|&dil| TapTable::new(n, self.spec.d, &self.filters[0], dil, Boundary::Torus))
            .collect::<Result<Vec<_>>>()?;
        Ok(Context {
            pixels: pow(n, self.spec.d),
            filters: self.filters.clone(),
            taps,
            plans: self.plans.build(self.spec.d)?,
        })
    }

    /// Records the forward graph on `tape` and returns the output node.
    pub(crate) fn forward_graph(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        self.build_graph(tape, &mut Plans::Frozen(&self.plans), input, None)
    }

    fn contract_to(&self, tape: &mut Tape, plans: &mut Plans, node: NodeId, k: usize, target: usize) -> Vec<NodeId> {
        if k == target {
            return vec![node];
        }
        let width = pow(self.spec.d, target);
        plans.plans(k, target).map(|p| tape.contract(node, p, width)).collect()
    }

    /// Contracts every group above `max_order` down to `max_order` or
    /// `max_order - 1`, whichever matches its order parity.
    fn cap(&self, tape: &mut Tape, plans: &mut Plans, stack: Stack) -> Stack {
        let cap = self.spec.max_order;
        let mut out: Stack = BTreeMap::new();
        for (sig, nodes) in stack {
            if sig.k <= cap {
                out.entry(sig).or_default().extend(nodes);
                continue;
            }
            let target = cap - (sig.k - cap) % 2;
            let entry_sig = Signature::new(target, sig.parity);
            for node in nodes {
                let reduced = self.contract_to(tape, plans, node, sig.k, target);
                out.entry(entry_sig).or_default().extend(reduced);
            }
        }
        out
    }

    fn build_graph(
        &self,
        tape: &mut Tape,
        plans: &mut Plans,
        input: NodeId,
        mut record: Option<(&mut Vec<Range<usize>>, &mut Vec<usize>)>,
    ) -> Result<NodeId> {
        let mut stack: Stack = BTreeMap::new();
        stack.insert(self.spec.input, vec![input]);
        for (li, layer) in self.spec.layers.iter().enumerate() {
            let params_before = tape.allocated;
            match layer {
                LayerSpec::Conv { dilations, outputs, .. } => {
                    let mut next: Stack = BTreeMap::new();
                    for (sig, nodes) in &stack {
                        for &fi in &self.layer_filters[li] {
                            let fsig = self.filter_sigs[fi];
                            let out = Signature::new(sig.k + fsig.k, sig.parity * fsig.parity);
                            if !outputs.keeps(out) {
                                continue;
                            }
                            for dil in dilations {
                                let taps = self.dilations.binary_search(dil).expect("dilation registered");
                                let sum = tape.weighted_sum(nodes.clone());
                                let conv = tape.convolve(sum, fi, taps);
                                next.entry(out).or_default().push(conv);
                            }
                        }
                    }
                    stack = self.cap(tape, plans, next);
                }
                LayerSpec::Contraction { target_k } => {
                    let mut next: Stack = BTreeMap::new();
                    for (sig, nodes) in &stack {
                        if sig.k < *target_k || (sig.k - target_k) % 2 != 0 {
                            continue;
                        }
                        for &node in nodes {
                            let reduced = self.contract_to(tape, plans, node, sig.k, *target_k);
                            next.entry(Signature::new(*target_k, sig.parity)).or_default().extend(reduced);
                        }
                    }
                    stack = next;
                }
                LayerSpec::Activation { activation } => {
                    let mut next: Stack = BTreeMap::new();
                    for (sig, nodes) in &stack {
                        if sig.k % 2 == 1 {
                            next.entry(*sig).or_default().extend(nodes);
                            continue;
                        }
                        for &node in nodes {
                            let scalars = self.contract_to(tape, plans, node, sig.k, 0);
                            next.entry(Signature::new(0, sig.parity)).or_default().extend(scalars);
                        }
                    }
                    if let Some(scalars) = next.get_mut(&Signature::scalar()) {
                        for node in scalars.iter_mut() {
                            *node = tape.activate(*node, *activation);
                        }
                    }
                    stack = next;
                }
                LayerSpec::OuterProduct { degree } => {
                    let sums: Vec<(Signature, NodeId)> =
                        stack.iter().map(|(sig, nodes)| (*sig, tape.weighted_sum(nodes.clone()))).collect();
                    let mut next = stack.clone();
                    for deg in 2..=*degree {
                        let mut combos = Vec::new();
                        multisets(sums.len(), deg, 0, &mut Vec::new(), &mut combos);
                        for combo in combos {
                            let (mut sig, mut node) = sums[combo[0]];
                            for &i in &combo[1..] {
                                let (s, n) = sums[i];
                                node = tape.outer(node, n);
                                sig = Signature::new(sig.k + s.k, sig.parity * s.parity);
                            }
                            next.entry(sig).or_default().push(node);
                        }
                    }
                    stack = self.cap(tape, plans, next);
                }
                LayerSpec::FinalCombine => {
                    let keys: Vec<Signature> = stack.keys().copied().collect();
                    if keys != [self.spec.output] {
                        let shown: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
                        return Err(Error::InvalidNetwork(format!(
                            "final_combine needs only {} images but the stack holds [{}]",
                            self.spec.output,
                            shown.join(", ")
                        )));
                    }
                    let out = tape.weighted_sum(stack[&self.spec.output].clone());
                    if let Some((params, images)) = record.as_mut() {
                        params.push(params_before..tape.allocated);
                        images.push(1);
                    }
                    return Ok(out);
                }
            }
            if stack.is_empty() {
                return Err(Error::InvalidNetwork(format!("layer {li} leaves no images")));
            }
            if let Some((params, images)) = record.as_mut() {
                params.push(params_before..tape.allocated);
                images.push(stack.values().map(Vec::len).sum());
            }
        }
        unreachable!("validated to end in final_combine")
    }
}

fn multisets(n: usize, size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == size {
        out.push(current.clone());
        return;
    }
    for i in start..n {
        current.push(i);
        multisets(n, size, i, current, out);
        current.pop();
    }
}
