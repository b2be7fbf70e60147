//! JSON documents exchanged with the command line tool.
//!
//! Every document carries `schema_version`. Parsers check shapes and bounds
//! before allocating, so arbitrary bytes yield an error rather than a panic.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::image::GeometricImage;
use crate::net::{BaselineLayer, LayerSpec, ModelSpec, Signature, TrainConfig};
use crate::physics::{Problem, ProblemConfig, SampleMeta, SamplePair, SplitSizes};
use crate::tensor::{Parity, TensorSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest number of values any single image may hold.
pub const MAX_IMAGE_VALUES: usize = 1 << 24;
pub const MAX_D: usize = 4;
pub const MAX_K: usize = 8;
pub const MAX_FILTER_SIZE: usize = 9;
pub const MAX_DILATION: usize = 1024;
pub const MAX_LAYERS: usize = 256;
pub const MAX_CHANNELS: usize = 1024;

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return bad(format!("unsupported schema_version {v}; expected {SCHEMA_VERSION}"));
    }
    Ok(())
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

/// Values per image, or an error when the shape is out of bounds.
fn image_len(n: usize, d: usize, k: usize) -> Result<usize> {
    if d == 0 || d > MAX_D {
        return bad(format!("d={d} outside 1..={MAX_D}"));
    }
    if k > MAX_K {
        return bad(format!("k={k} exceeds {MAX_K}"));
    }
    let mut len = 1usize;
    for _ in 0..d {
        len = len
            .checked_mul(n)
            .filter(|&l| l <= MAX_IMAGE_VALUES)
            .ok_or_else(|| Error::Format("image too large".into()))?;
    }
    for _ in 0..k {
        len = len
            .checked_mul(d)
            .filter(|&l| l <= MAX_IMAGE_VALUES)
            .ok_or_else(|| Error::Format("image too large".into()))?;
    }
    Ok(len)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageDoc {
    pub schema_version: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub parity: Parity,
    pub data: Vec<f64>,
}

impl ImageDoc {
    pub fn from_image(img: &GeometricImage) -> Self {
        ImageDoc {
            schema_version: SCHEMA_VERSION,
            n: img.n(),
            d: img.d(),
            k: img.k(),
            parity: img.parity(),
            data: img.data().to_vec(),
        }
    }

    pub fn into_image(self) -> Result<GeometricImage> {
        check_version(self.schema_version)?;
        if self.n == 0 {
            return bad("N must be positive");
        }
        let len = image_len(self.n, self.d, self.k)?;
        if self.data.len() != len {
            return bad(format!("expected {len} values, found {}", self.data.len()));
        }
        GeometricImage::new(self.n, TensorSpec::new(self.d, self.k, self.parity), self.data)
    }
}

pub fn image_to_json(img: &GeometricImage) -> String {
    to_json(&ImageDoc::from_image(img))
}

pub fn parse_image(text: &str) -> Result<GeometricImage> {
    from_json::<ImageDoc>(text)?.into_image()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankDoc {
    pub schema_version: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub parity: Parity,
    pub count: usize,
    /// Each filter's flat data, in the image layout.
    pub filters: Vec<Vec<f64>>,
}

pub fn bank_to_json(bank: &FilterBank) -> String {
    to_json(&BankDoc {
        schema_version: SCHEMA_VERSION,
        m: bank.m,
        d: bank.spec.d,
        k: bank.spec.k,
        parity: bank.spec.parity,
        count: bank.len(),
        filters: bank.filters.iter().map(|f| f.data().to_vec()).collect(),
    })
}

pub fn parse_bank(text: &str) -> Result<FilterBank> {
    let doc: BankDoc = from_json(text)?;
    check_version(doc.schema_version)?;
    if doc.m.is_multiple_of(2) {
        return bad(format!("filter sidelength {} must be odd", doc.m));
    }
    if doc.count != doc.filters.len() {
        return bad(format!("count {} but {} filters", doc.count, doc.filters.len()));
    }
    let len = image_len(doc.m, doc.d, doc.k)?;
    let spec = TensorSpec::new(doc.d, doc.k, doc.parity);
    let filters = doc
        .filters
        .into_iter()
        .map(|data| {
            if data.len() != len {
                return bad(format!("filter has {} values, expected {len}", data.len()));
            }
            GeometricImage::new(doc.m, spec, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FilterBank::from_filters(doc.m, spec, filters)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub schema_version: u32,
    pub spec: ModelSpec,
    pub params: Vec<f64>,
}

fn check_signature(s: Signature, what: &str) -> Result<()> {
    if s.k > MAX_K {
        return bad(format!("{what} order {} exceeds {MAX_K}", s.k));
    }
    Ok(())
}

fn check_dilations(dils: &[usize]) -> Result<()> {
    if dils.len() > MAX_DILATION || dils.iter().any(|&x| x > MAX_DILATION) {
        return bad(format!("dilations must not exceed {MAX_DILATION}"));
    }
    Ok(())
}

/// Bounds checks that keep construction of the network tractable.
pub fn check_model_spec(spec: &ModelSpec) -> Result<()> {
    let (d, m, input, output, layers) = match spec {
        ModelSpec::Ginet(s) => (s.d, s.filter_size, s.input, s.output, s.layers.len()),
        ModelSpec::Baseline(s) => (s.d, s.filter_size, s.input, s.output, s.layers.len()),
    };
    if d == 0 || d > 3 {
        return bad(format!("d={d} outside 1..=3"));
    }
    if m > MAX_FILTER_SIZE {
        return bad(format!("filter_size {m} exceeds {MAX_FILTER_SIZE}"));
    }
    if layers > MAX_LAYERS {
        return bad(format!("more than {MAX_LAYERS} layers"));
    }
    check_signature(input, "input")?;
    check_signature(output, "output")?;
    match spec {
        ModelSpec::Ginet(s) => {
            if s.max_order > 6 {
                return bad("max_order exceeds 6");
            }
            for layer in &s.layers {
                match layer {
                    LayerSpec::Conv { filters, dilations, .. } => {
                        check_dilations(dilations)?;
                        if filters.len() > 16 {
                            return bad("too many filter types");
                        }
                        for f in filters {
                            if f.k > 4 {
                                return bad("filter order exceeds 4");
                            }
                        }
                    }
                    LayerSpec::Contraction { target_k } if *target_k > MAX_K => {
                        return bad("contraction target too large")
                    }
                    LayerSpec::OuterProduct { degree } if *degree > 4 => return bad("outer product degree exceeds 4"),
                    _ => {}
                }
            }
        }
        ModelSpec::Baseline(s) => {
            for layer in &s.layers {
                if let BaselineLayer::Conv { out_channels, dilations, .. } = layer {
                    check_dilations(dilations)?;
                    if *out_channels > MAX_CHANNELS {
                        return bad(format!("more than {MAX_CHANNELS} channels"));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn model_to_json(spec: &ModelSpec, params: &[f64]) -> String {
    to_json(&ModelDoc { schema_version: SCHEMA_VERSION, spec: spec.clone(), params: params.to_vec() })
}

/// Parses and bounds-checks a model document without building the network.
pub fn parse_model(text: &str) -> Result<(ModelSpec, Vec<f64>)> {
    let doc: ModelDoc = from_json(text)?;
    check_version(doc.schema_version)?;
    check_model_spec(&doc.spec)?;
    Ok((doc.spec, doc.params))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDoc {
    schema_version: u32,
    spec: ModelSpec,
}

pub fn net_to_json(spec: &ModelSpec) -> String {
    to_json(&NetDoc { schema_version: SCHEMA_VERSION, spec: spec.clone() })
}

/// An architecture document: a model document without parameters.
pub fn parse_net(text: &str) -> Result<ModelSpec> {
    let doc: NetDoc = from_json(text)?;
    check_version(doc.schema_version)?;
    check_model_spec(&doc.spec)?;
    Ok(doc.spec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrainConfigDoc {
    schema_version: u32,
    #[serde(flatten)]
    config: TrainConfig,
}

pub fn train_config_to_json(cfg: &TrainConfig) -> String {
    to_json(&TrainConfigDoc { schema_version: SCHEMA_VERSION, config: cfg.clone() })
}

pub fn parse_train_config(text: &str) -> Result<TrainConfig> {
    let doc: TrainConfigDoc = from_json(text)?;
    check_version(doc.schema_version)?;
    doc.config.validate()?;
    Ok(doc.config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDoc {
    pub index: usize,
    pub input: ImageDoc,
    pub target: ImageDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitDoc {
    pub schema_version: u32,
    pub problem: Problem,
    pub split: String,
    pub seed: u64,
    pub samples: Vec<SampleDoc>,
}

pub fn split_to_json(problem: Problem, split: &str, seed: u64, samples: &[SamplePair]) -> String {
    to_json(&SplitDoc {
        schema_version: SCHEMA_VERSION,
        problem,
        split: split.to_string(),
        seed,
        samples: samples
            .iter()
            .map(|s| SampleDoc {
                index: s.meta.index,
                input: ImageDoc::from_image(&s.input),
                target: ImageDoc::from_image(&s.target),
            })
            .collect(),
    })
}

/// Parses a split file. All samples must share one input shape and one
/// target shape.
pub fn parse_split(text: &str) -> Result<Vec<SamplePair>> {
    let doc: SplitDoc = from_json(text)?;
    check_version(doc.schema_version)?;
    let mut out: Vec<SamplePair> = Vec::with_capacity(doc.samples.len());
    for s in doc.samples {
        let input = s.input.into_image()?;
        let target = s.target.into_image()?;
        if input.n() != target.n() || input.d() != target.d() {
            return bad("input and target live on different grids");
        }
        if let Some(first) = out.first() {
            if input.spec() != first.input.spec()
                || target.spec() != first.target.spec()
                || input.n() != first.input.n()
            {
                return bad("samples differ in shape");
            }
        }
        out.push(SamplePair {
            input,
            target,
            meta: SampleMeta { problem: doc.problem, seed: doc.seed, index: s.index },
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub config: ProblemConfig,
    pub sizes: SplitSizes,
    /// Split name to file name, relative to the manifest.
    pub files: std::collections::BTreeMap<String, String>,
}

pub fn parse_dataset_manifest(text: &str) -> Result<DatasetManifest> {
    let doc: DatasetManifest = from_json(text)?;
    check_version(doc.schema_version)?;
    doc.config.validate()?;
    for (name, file) in &doc.files {
        if !crate::physics::SPLIT_NAMES.contains(&name.as_str()) {
            return bad(format!("unknown split {name:?}"));
        }
        if file.is_empty() || file.contains('/') || file.contains('\\') || file.starts_with('.') {
            return bad(format!("split file {file:?} must be a plain file name"));
        }
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip() {
        let img = GeometricImage::new(2, TensorSpec::new(2, 1, Parity::Neg), (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(parse_image(&image_to_json(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_wrong_version_and_length() {
        let ok = r#"{"schema_version":1,"N":1,"d":2,"k":0,"parity":1,"data":[1.0]}"#;
        assert!(parse_image(ok).is_ok());
        assert!(parse_image(&ok.replace("\"schema_version\":1", "\"schema_version\":2")).is_err());
        assert!(parse_image(&ok.replace("[1.0]", "[1.0,2.0]")).is_err());
        assert!(parse_image(&ok.replace("\"parity\":1", "\"parity\":0")).is_err());
        assert!(parse_image(r#"{"schema_version":1,"N":4294967296,"d":4,"k":8,"parity":1,"data":[]}"#).is_err());
    }
}
