//! Named architectures for the two physics problems.

use super::spec::{BaselineLayer, BaselineSpec, LayerSpec, ModelSpec, NetSpec, OutputPlan, Signature};
use super::tape::Activation;
use crate::error::{Error, Result};
use crate::tensor::Parity;

pub const PRESET_NAMES: &[&str] = &["gravity", "charge", "charge-full", "fig6", "gravity-baseline", "charge-baseline"];

const CHARGE_DILATIONS: [usize; 9] = [1, 2, 4, 2, 1, 1, 2, 1, 1];

fn sig(k: usize) -> Signature {
    Signature::new(k, Parity::Pos)
}

fn conv(filters: &[usize], dilations: impl IntoIterator<Item = usize>, outputs: OutputPlan) -> LayerSpec {
    LayerSpec::Conv {
        filters: filters.iter().map(|&k| sig(k)).collect(),
        dilations: dilations.into_iter().collect(),
        outputs,
    }
}

fn to_vector() -> OutputPlan {
    OutputPlan::ReachableTo { k: 1, parity: Parity::Pos }
}

/// Scalar masses to vector field, linear in the input.
pub fn gravity() -> NetSpec {
    NetSpec {
        d: 2,
        filter_size: 3,
        input: Signature::scalar(),
        output: Signature::vector(),
        max_order: 5,
        layers: vec![
            conv(&[0, 1], [1], OutputPlan::All),
            conv(&[0, 1], 1..=15, OutputPlan::All),
            conv(&[0, 1], 1..=7, to_vector()),
            LayerSpec::Contraction { target_k: 1 },
            LayerSpec::FinalCombine,
        ],
    }
}

fn charge_with(filters: &[usize]) -> NetSpec {
    let leaky = Activation::LeakyRelu { slope: 0.01 };
    let mut layers = Vec::new();
    for (i, &dil) in CHARGE_DILATIONS.iter().enumerate() {
        let last = i + 1 == CHARGE_DILATIONS.len();
        layers.push(conv(filters, [dil], if last { to_vector() } else { OutputPlan::All }));
        if !last {
            layers.push(LayerSpec::Activation { activation: leaky });
        }
    }
    layers.push(LayerSpec::Contraction { target_k: 1 });
    layers.push(LayerSpec::FinalCombine);
    NetSpec { d: 2, filter_size: 3, input: Signature::vector(), output: Signature::vector(), max_order: 5, layers }
}

/// Vector field to vector field with a nonlinearity between convolutions.
pub fn charge() -> NetSpec {
    charge_with(&[1, 2])
}

/// [`charge`] with scalar filters as well.
pub fn charge_full() -> NetSpec {
    charge_with(&[0, 1, 2])
}

/// Small nonlinear vector network that exercises the order cap.
pub fn fig6() -> NetSpec {
    NetSpec {
        d: 2,
        filter_size: 3,
        input: Signature::vector(),
        output: Signature::vector(),
        max_order: 3,
        layers: vec![
            conv(&[1, 2], [1], OutputPlan::All),
            LayerSpec::Activation { activation: Activation::Relu },
            conv(&[1, 2], [1, 2], to_vector()),
            LayerSpec::Contraction { target_k: 1 },
            LayerSpec::FinalCombine,
        ],
    }
}

pub fn gravity_baseline() -> BaselineSpec {
    BaselineSpec {
        d: 2,
        filter_size: 3,
        input: Signature::scalar(),
        output: Signature::vector(),
        layers: vec![
            BaselineLayer::Conv { out_channels: 2, dilations: vec![1], activation: None },
            BaselineLayer::Conv { out_channels: 2, dilations: (1..=15).collect(), activation: None },
            BaselineLayer::Conv { out_channels: 2, dilations: (1..=7).collect(), activation: None },
            BaselineLayer::DilationSum,
        ],
    }
}

pub fn charge_baseline() -> BaselineSpec {
    let leaky = Some(Activation::LeakyRelu { slope: 0.01 });
    let mut layers: Vec<BaselineLayer> = CHARGE_DILATIONS[..8]
        .iter()
        .map(|&dil| BaselineLayer::Conv { out_channels: 20, dilations: vec![dil], activation: leaky })
        .collect();
    layers.push(BaselineLayer::Conv { out_channels: 2, dilations: vec![1], activation: None });
    BaselineSpec { d: 2, filter_size: 3, input: Signature::vector(), output: Signature::vector(), layers }
}

pub fn preset(name: &str) -> Result<ModelSpec> {
    Ok(match name {
        "gravity" => ModelSpec::Ginet(gravity()),
        "charge" => ModelSpec::Ginet(charge()),
        "charge-full" => ModelSpec::Ginet(charge_full()),
        "fig6" => ModelSpec::Ginet(fig6()),
        "gravity-baseline" => ModelSpec::Baseline(gravity_baseline()),
        "charge-baseline" => ModelSpec::Baseline(charge_baseline()),
        other => {
            return Err(Error::InvalidConfig(format!("unknown preset {other:?}; known: {}", PRESET_NAMES.join(", "))))
        }
    })
}
