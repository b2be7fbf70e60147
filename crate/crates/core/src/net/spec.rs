//! Serializable architecture documents.

use serde::{Deserialize, Serialize};

use super::tape::Activation;
use crate::tensor::Parity;

/// Tensor order and parity of an image group or a filter type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub k: usize,
    pub parity: Parity,
}

impl Signature {
    pub fn new(k: usize, parity: Parity) -> Self {
        Signature { k, parity }
    }

    pub fn scalar() -> Self {
        Signature::new(0, Parity::Pos)
    }

    pub fn vector() -> Self {
        Signature::new(1, Parity::Pos)
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.k, self.parity)
    }
}

/// Which convolution outputs a layer keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "keep", rename_all = "snake_case")]
pub enum OutputPlan {
    #[default]
    All,
    /// Only outputs that later contractions can bring to this signature:
    /// same parity and an order of the same parity, not below it.
    ReachableTo { k: usize, parity: Parity },
}

impl OutputPlan {
    pub fn keeps(&self, out: Signature) -> bool {
        match *self {
            OutputPlan::All => true,
            OutputPlan::ReachableTo { k, parity } => {
                out.parity == parity && out.k >= k && (out.k - k).is_multiple_of(2)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerSpec {
    /// For every input group paired with each filter and dilation: convolve a weighted sum
    /// of the group's images with the filter.
    Conv {
        filters: Vec<Signature>,
        dilations: Vec<usize>,
        #[serde(default)]
        outputs: OutputPlan,
    },
    /// All unique contractions down to `target_k`; groups that cannot reach
    /// it are dropped.
    Contraction { target_k: usize },
    /// Even orders are contracted to scalars and the nonlinearity is applied
    /// to the positive-parity scalars; odd orders and pseudoscalars pass
    /// through.
    Activation { activation: Activation },
    /// Products of the per-group weighted sums up to `degree`, appended to
    /// the stack.
    OuterProduct { degree: usize },
    /// Linear combination of every image in the final group.
    FinalCombine,
}

/// A GI-Net architecture. Filters are the complete invariant banks of the
/// requested types at sidelength `filter_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub d: usize,
    pub filter_size: usize,
    pub input: Signature,
    pub output: Signature,
    pub max_order: usize,
    pub layers: Vec<LayerSpec>,
}

/// Layers of the scalar-channel CNN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum BaselineLayer {
    /// Learned `M^d` filters from every input channel to `out_channels`
    /// channels, once per dilation; the dilation outputs stack as channels.
    Conv {
        out_channels: usize,
        dilations: Vec<usize>,
        #[serde(default)]
        activation: Option<Activation>,
    },
    /// Weighted sum across the per-dilation channel blocks of the previous
    /// convolution.
    DilationSum,
}

/// A conventional CNN acting on the components of the input image as
/// channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub d: usize,
    pub filter_size: usize,
    pub input: Signature,
    pub output: Signature,
    pub layers: Vec<BaselineLayer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Ginet(NetSpec),
    Baseline(BaselineSpec),
}
