//! Dataset generators for the two toy physics problems.
//!
//! Pixel `i` of an `N x N` grid covers the square `[i, i+1)` so its center
//! is `i + 1/2`; vector component `c` runs along pixel axis `c`. Forces use
//! plain Euclidean distances, with no wrap-around.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GeometricImage;
use crate::numerics::Prng;
use crate::tensor::{Parity, TensorSpec};

/// Pairs closer than this are treated as coincident.
pub const COINCIDENCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Gravity,
    Charge,
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Problem::Gravity => "gravity",
            Problem::Charge => "charge",
        })
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gravity" => Ok(Problem::Gravity),
            "charge" => Ok(Problem::Charge),
            _ => Err(Error::InvalidConfig(format!("unknown problem {s:?}"))),
        }
    }
}

/// Point particles with positive weights (masses or charges).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub positions: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn new(positions: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidConfig("positions and weights differ in length".into()));
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig("weights must be positive".into()));
        }
        Ok(ParticleSet { positions, weights })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.min(dist(*a, *b));
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub problem: Problem,
    pub seed: u64,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePair {
    pub input: GeometricImage,
    pub target: GeometricImage,
    pub meta: SampleMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GravityConfig {
    pub n: usize,
    pub masses: usize,
}

impl Default for GravityConfig {
    fn default() -> Self {
        GravityConfig { n: 16, masses: 5 }
    }
}

impl GravityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be positive".into()));
        }
        if self.masses == 0 || self.masses > self.n * self.n {
            return Err(Error::InvalidConfig(format!(
                "cannot place {} masses on {} pixels",
                self.masses,
                self.n * self.n
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChargeConfig {
    pub n: usize,
    pub charges: usize,
    pub dt: f64,
    pub steps: usize,
    pub squash_scale: f64,
}

impl Default for ChargeConfig {
    fn default() -> Self {
        ChargeConfig { n: 16, charges: 5, dt: 0.01, steps: 10, squash_scale: 0.2 }
    }
}

impl ChargeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n < 2 {
            return bad("N must be at least 2");
        }
        if self.charges == 0 {
            return bad("need at least one charge");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !(self.squash_scale.is_finite() && self.squash_scale > 0.0) {
            return bad("squash scale must be positive");
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `(a - b) / |a - b|^3`, or zero when the points coincide.
fn inverse_square(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let r = [a[0] - b[0], a[1] - b[1]];
    let norm = r[0].hypot(r[1]);
    if norm < COINCIDENCE {
        return [0.0, 0.0];
    }
    let c = norm.powi(3);
    [r[0] / c, r[1] / c]
}

pub fn pixel_center(i: usize, j: usize) -> [f64; 2] {
    [i as f64 + 0.5, j as f64 + 0.5]
}

fn vector_image(n: usize, field: impl Fn([f64; 2]) -> [f64; 2]) -> GeometricImage {
    let mut data = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            data.extend(field(pixel_center(i, j)));
        }
    }
    GeometricImage::new(n, TensorSpec::new(2, 1, Parity::Pos), data).expect("consistent length")
}

/// `Q(v, s) = (sigmoid(|v|/s) - 1/2) v/|v|`, with `Q(0) = 0`.
pub fn squash(v: [f64; 2], s: f64) -> [f64; 2] {
    let norm = v[0].hypot(v[1]);
    if norm == 0.0 {
        return [0.0, 0.0];
    }
    let mag = 1.0 / (1.0 + (-norm / s).exp()) - 0.5;
    [mag * v[0] / norm, mag * v[1] / norm]
}

/// Gravitational field `sum_j m_j (x_j - p) / |x_j - p|^3` at every pixel
/// center `p`, skipping a mass sitting on `p`.
pub fn gravity_field(particles: &ParticleSet, n: usize) -> GeometricImage {
    vector_image(n, |p| {
        let mut f = [0.0, 0.0];
        for (x, m) in particles.positions.iter().zip(&particles.weights) {
            let g = inverse_square(*x, p);
            f[0] += m * g[0];
            f[1] += m * g[1];
        }
        f
    })
}

/// Coulomb field `sum_j q_j (p - x_j) / |p - x_j|^3` at every pixel center,
/// optionally squashed.
pub fn render_field(particles: &ParticleSet, n: usize, squash_scale: Option<f64>) -> Result<GeometricImage> {
    if let Some(s) = squash_scale {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidConfig("squash scale must be positive".into()));
        }
    }
    Ok(vector_image(n, |p| {
        let mut f = [0.0, 0.0];
        for (x, q) in particles.positions.iter().zip(&particles.weights) {
            let g = inverse_square(p, *x);
            f[0] += q * g[0];
            f[1] += q * g[1];
        }
        match squash_scale {
            Some(s) => squash(f, s),
            None => f,
        }
    }))
}

/// Velocities `V(x_i) = sum_{j != i} q_j (x_i - x_j) / |x_i - x_j|^3`.
pub fn coulomb_velocities(particles: &ParticleSet) -> Vec<[f64; 2]> {
    let p = &particles.positions;
    (0..p.len())
        .map(|i| {
            let mut v = [0.0, 0.0];
            for (j, q) in particles.weights.iter().enumerate() {
                if j != i {
                    let g = inverse_square(p[i], p[j]);
                    v[0] += q * g[0];
                    v[1] += q * g[1];
                }
            }
            v
        })
        .collect()
}

/// One explicit Euler step.
pub fn euler_step(particles: &mut ParticleSet, dt: f64) {
    let v = coulomb_velocities(particles);
    for (x, v) in particles.positions.iter_mut().zip(v) {
        x[0] += dt * v[0];
        x[1] += dt * v[1];
    }
}

fn gravity_sample(rng: &mut Prng, cfg: &GravityConfig) -> (GeometricImage, GeometricImage) {
    let n = cfg.n;
    let pixels = rng.sample_without_replacement(n * n, cfg.masses);
    let mut mass_image = GeometricImage::zeros(n, TensorSpec::new(2, 0, Parity::Pos));
    let mut positions = Vec::with_capacity(cfg.masses);
    let mut weights = Vec::with_capacity(cfg.masses);
    for flat in pixels {
        // U(0,1) excluding 0 so weights stay positive.
        let m = loop {
            let m = rng.next_f64();
            if m > 0.0 {
                break m;
            }
        };
        mass_image.data_mut()[flat] = m;
        positions.push(pixel_center(flat / n, flat % n));
        weights.push(m);
    }
    let particles = ParticleSet { positions, weights };
    (mass_image, gravity_field(&particles, n))
}

/// `count` samples; sample `i` draws from the child stream `(seed, i)`.
pub fn gen_gravity(seed: u64, count: usize, cfg: &GravityConfig) -> Result<Vec<SamplePair>> {
    cfg.validate()?;
    let root = Prng::new(seed);
    Ok((0..count)
        .into_par_iter()
        .map(|index| {
            let (input, target) = gravity_sample(&mut root.derive(index as u64), cfg);
            SamplePair { input, target, meta: SampleMeta { problem: Problem::Gravity, seed, index } }
        })
        .collect())
}

/// Initial unit charges uniform over the central half of the grid, which is
/// the central 8x8 square when `N = 16`.
pub fn initial_charges(rng: &mut Prng, cfg: &ChargeConfig) -> ParticleSet {
    let lo = cfg.n as f64 / 4.0;
    let hi = 3.0 * cfg.n as f64 / 4.0;
    let positions = (0..cfg.charges).map(|_| [rng.uniform(lo, hi), rng.uniform(lo, hi)]).collect();
    ParticleSet { positions, weights: vec![1.0; cfg.charges] }
}

/// Simulates one configuration, returning the fields after step 1 and after
/// step `T`, or `None` if two charges came within [`COINCIDENCE`].
pub fn simulate_charges(
    mut particles: ParticleSet,
    cfg: &ChargeConfig,
) -> Result<Option<(GeometricImage, GeometricImage)>> {
    if particles.min_separation() < COINCIDENCE {
        return Ok(None);
    }
    let mut input = None;
    for step in 1..=cfg.steps {
        euler_step(&mut particles, cfg.dt);
        if particles.min_separation() < COINCIDENCE || particles.positions.iter().flatten().any(|x| !x.is_finite()) {
            return Ok(None);
        }
        if step == 1 {
            input = Some(render_field(&particles, cfg.n, Some(cfg.squash_scale))?);
        }
    }
    let target = render_field(&particles, cfg.n, Some(cfg.squash_scale))?;
    Ok(input.map(|i| (i, target)))
}

pub fn gen_charges(seed: u64, count: usize, cfg: &ChargeConfig) -> Result<Vec<SamplePair>> {
    cfg.validate()?;
    let root = Prng::new(seed);
    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = root.derive(index as u64);
            loop {
                if let Some((input, target)) = simulate_charges(initial_charges(&mut rng, cfg), cfg)? {
                    return Ok(SamplePair {
                        input,
                        target,
                        meta: SampleMeta { problem: Problem::Charge, seed, index },
                    });
                }
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemConfig {
    Gravity(GravityConfig),
    Charge(ChargeConfig),
}

impl ProblemConfig {
    pub fn problem(&self) -> Problem {
        match self {
            ProblemConfig::Gravity(_) => Problem::Gravity,
            ProblemConfig::Charge(_) => Problem::Charge,
        }
    }

    pub fn default_for(problem: Problem) -> Self {
        match problem {
            Problem::Gravity => ProblemConfig::Gravity(GravityConfig::default()),
            Problem::Charge => ProblemConfig::Charge(ChargeConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemConfig::Gravity(c) => c.validate(),
            ProblemConfig::Charge(c) => c.validate(),
        }
    }

    pub fn generate(&self, seed: u64, count: usize) -> Result<Vec<SamplePair>> {
        match self {
            ProblemConfig::Gravity(c) => gen_gravity(seed, count, c),
            ProblemConfig::Charge(c) => gen_charges(seed, count, c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Train, validation and test splits. Each split has its own child seed, so
/// the validation and test sets do not change when the training size does.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub config: ProblemConfig,
    pub seed: u64,
    pub train: Vec<SamplePair>,
    pub val: Vec<SamplePair>,
    pub test: Vec<SamplePair>,
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

pub fn split_seed(seed: u64, split: usize) -> u64 {
    Prng::new(seed).derive(0x5eed_0000 + split as u64).seed()
}

impl Dataset {
    pub fn generate(config: ProblemConfig, seed: u64, sizes: SplitSizes) -> Result<Self> {
        config.validate()?;
        let counts = [sizes.train, sizes.val, sizes.test];
        let mut splits = counts
            .iter()
            .enumerate()
            .map(|(s, &c)| config.generate(split_seed(seed, s), c))
            .collect::<Result<Vec<_>>>()?;
        let test = splits.pop().unwrap_or_default();
        let val = splits.pop().unwrap_or_default();
        let train = splits.pop().unwrap_or_default();
        Ok(Dataset { config, seed, train, val, test })
    }

    pub fn sizes(&self) -> SplitSizes {
        SplitSizes { train: self.train.len(), val: self.val.len(), test: self.test.len() }
    }

    pub fn split(&self, name: &str) -> Option<&[SamplePair]> {
        match name {
            "train" => Some(&self.train),
            "val" => Some(&self.val),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squash_limits() {
        assert_eq!(squash([0.0, 0.0], 0.2), [0.0, 0.0]);
        let big = squash([1e6, 0.0], 0.2);
        assert!((big[0] - 0.5).abs() < 1e-12 && big[1] == 0.0);
    }

    #[test]
    fn self_pixel_is_skipped() {
        let p = ParticleSet::new(vec![pixel_center(2, 3)], vec![1.0]).unwrap();
        let f = gravity_field(&p, 5);
        assert_eq!(f.pixel(&[2, 3]).components(), &[0.0, 0.0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_charges(3, 2, &ChargeConfig::default()).unwrap();
        let b = gen_charges(3, 2, &ChargeConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
