//! Dense `k(p)` tensors in `d` dimensions.
//!
//! A [`GeometricTensor`] holds `d^k` real components in row-major order over
//! the index tuple `(i_1, ..., i_k)` (first index slowest) together with a
//! parity bit. Negative-parity tensors pick up an extra factor of `det(M(g))`
//! under the orthogonal group action.
//!
//! All index arguments in this crate are zero-based: index `0` here is index
//! `1` in the usual mathematical notation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmetry::GroupElement;

/// Sign bit of a geometric object: `+1` for tensors, `-1` for pseudotensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Parity {
    Pos,
    Neg,
}

impl Parity {
    pub fn sign(self) -> i64 {
        match self {
            Parity::Pos => 1,
            Parity::Neg => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Parity::Pos),
            -1 => Ok(Parity::Neg),
            other => Err(Error::InvalidParity(other)),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Pos => Parity::Neg,
            Parity::Neg => Parity::Pos,
        }
    }
}

impl std::ops::Mul for Parity {
    type Output = Parity;

    fn mul(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Pos
        } else {
            Parity::Neg
        }
    }
}

impl TryFrom<i64> for Parity {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        Parity::from_sign(value)
    }
}

impl From<Parity> for i64 {
    fn from(p: Parity) -> i64 {
        p.sign()
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Pos => write!(f, "+"),
            Parity::Neg => write!(f, "-"),
        }
    }
}

/// The `(d, k, parity)` triple that determines the space a tensor lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TensorSpec {
    pub d: usize,
    pub k: usize,
    pub parity: Parity,
}

impl TensorSpec {
    pub fn new(d: usize, k: usize, parity: Parity) -> Self {
        TensorSpec { d, k, parity }
    }

    /// Number of components, `d^k`.
    pub fn len(&self) -> usize {
        pow(self.d, self.k)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for TensorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) in d={}", self.k, self.parity, self.d)
    }
}

pub(crate) fn pow(base: usize, exp: usize) -> usize {
    (0..exp).fold(1usize, |acc, _| acc * base)
}

/// Writes the base-`d` digits of `flat` into `out`, most significant first.
pub(crate) fn digits_into(mut flat: usize, d: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % d;
        flat /= d;
    }
}

pub(crate) fn flatten(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// A `k(p)` tensor in `d` dimensions with dense row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricTensor {
    spec: TensorSpec,
    components: Vec<f64>,
}

impl GeometricTensor {
    pub fn new(d: usize, k: usize, parity: Parity, components: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        let spec = TensorSpec::new(d, k, parity);
        if components.len() != spec.len() {
            return Err(Error::ComponentCount { expected: spec.len(), found: components.len() });
        }
        Ok(GeometricTensor { spec, components })
    }

    pub fn zeros(spec: TensorSpec) -> Self {
        GeometricTensor { spec, components: vec![0.0; spec.len()] }
    }

    /// An order-0 tensor with a single component.
    pub fn scalar(d: usize, parity: Parity, value: f64) -> Self {
        GeometricTensor { spec: TensorSpec::new(d, 0, parity), components: vec![value] }
    }

    pub fn vector(parity: Parity, components: Vec<f64>) -> Result<Self> {
        let d = components.len();
        GeometricTensor::new(d, 1, parity, components)
    }

    /// The Kronecker delta, a `2(+)` tensor represented by the identity matrix.
    pub fn kronecker_delta(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        let mut components = vec![0.0; d * d];
        for i in 0..d {
            components[i * d + i] = 1.0;
        }
        Ok(GeometricTensor { spec: TensorSpec::new(d, 2, Parity::Pos), components })
    }

    /// The Levi-Civita symbol, a `d(-)` tensor: the sign of the index
    /// permutation, zero on repeated indices.
    pub fn levi_civita(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let spec = TensorSpec::new(d, d, Parity::Neg);
        let mut components = vec![0.0; spec.len()];
        let mut idx = vec![0; d];
        for (flat, slot) in components.iter_mut().enumerate() {
            digits_into(flat, d, &mut idx);
            *slot = permutation_sign(&idx) as f64;
        }
        Ok(GeometricTensor { spec, components })
    }

    pub fn spec(&self) -> TensorSpec {
        self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn parity(&self) -> Parity {
        self.spec.parity
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    /// Component at a multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.k());
        self.components[flatten(index, self.d())]
    }

    /// Outer product: order `k_a + k_b`, parity `p_a * p_b`.
    pub fn outer(&self, other: &GeometricTensor) -> Result<GeometricTensor> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: other.d() });
        }
        let spec = TensorSpec::new(self.d(), self.k() + other.k(), self.parity() * other.parity());
        let mut components = Vec::with_capacity(spec.len());
        for &a in &self.components {
            components.extend(other.components.iter().map(|&b| a * b));
        }
        Ok(GeometricTensor { spec, components })
    }

    /// Contraction over the index pair `(mu, nu)`.
    pub fn contract(&self, mu: usize, nu: usize) -> Result<GeometricTensor> {
        self.multicontract(&[(mu, nu)])
    }

    /// Contracts several disjoint index pairs at once.
    ///
    /// Pairs refer to the indices of `self` before any contraction happens,
    /// so `[(0, 2), (1, 3)]` equals contracting `(0, 2)` and then `(0, 1)` of
    /// the intermediate result.
    pub fn multicontract(&self, pairs: &[(usize, usize)]) -> Result<GeometricTensor> {
        let plan = ContractionPlan::new(self.d(), self.k(), pairs)?;
        let mut out = vec![0.0; plan.out_len()];
        plan.apply(&self.components, &mut out);
        Ok(GeometricTensor { spec: TensorSpec::new(self.d(), plan.out_k(), self.parity()), components: out })
    }

    /// Contraction of `d - 1` indices against the Levi-Civita symbol. Order
    /// becomes `k - d + 2` and the parity flips.
    pub fn levi_civita_contract(&self, mus: &[usize]) -> Result<GeometricTensor> {
        let d = self.d();
        let k = self.k();
        if mus.len() + 1 != d {
            return Err(Error::InvalidIndex(format!(
                "Levi-Civita contraction in d={d} takes {} indices, got {}",
                d.saturating_sub(1),
                mus.len()
            )));
        }
        let eps = GeometricTensor::levi_civita(d)?;
        if let Some(&bad) = mus.iter().find(|&&mu| mu >= k) {
            return Err(Error::InvalidIndex(format!("index {bad} out of range for order {k}")));
        }
        let pairs: Vec<(usize, usize)> = mus.iter().enumerate().map(|(i, &mu)| (mu, k + i)).collect();
        check_pairs(k + d, &pairs)?;
        self.outer(&eps)?.multicontract(&pairs)
    }

    /// Index permutation: `[a^sigma]_{i_1..i_k} = [a]_{i_{sigma^-1(1)}..i_{sigma^-1(k)}}`,
    /// so input axis `m` becomes output axis `sigma[m]`.
    pub fn permute_indices(&self, sigma: &[usize]) -> Result<GeometricTensor> {
        let k = self.k();
        validate_permutation(sigma, k)?;
        let d = self.d();
        let mut out = vec![0.0; self.components.len()];
        let mut out_idx = vec![0; k];
        let mut in_idx = vec![0; k];
        for (flat, slot) in out.iter_mut().enumerate() {
            digits_into(flat, d, &mut out_idx);
            for m in 0..k {
                in_idx[m] = out_idx[sigma[m]];
            }
            *slot = self.components[flatten(&in_idx, d)];
        }
        Ok(GeometricTensor { spec: self.spec, components: out })
    }

    /// The `O(d)` action restricted to signed permutation matrices.
    pub fn act(&self, g: &GroupElement) -> Result<GeometricTensor> {
        if g.d() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: g.d() });
        }
        let plan = ActionPlan::new(g, self.spec);
        let mut out = vec![0.0; self.components.len()];
        plan.apply(&self.components, &mut out);
        Ok(GeometricTensor { spec: self.spec, components: out })
    }

    pub fn add(&self, other: &GeometricTensor) -> Result<GeometricTensor> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch(format!("cannot add {} and {}", self.spec, other.spec)));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect();
        Ok(GeometricTensor { spec: self.spec, components })
    }

    pub fn sub(&self, other: &GeometricTensor) -> Result<GeometricTensor> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, alpha: f64) -> GeometricTensor {
        GeometricTensor { spec: self.spec, components: self.components.iter().map(|a| a * alpha).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.components.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Largest absolute componentwise difference; `None` on spec mismatch.
    pub fn max_abs_diff(&self, other: &GeometricTensor) -> Option<f64> {
        if self.spec != other.spec {
            return None;
        }
        Some(self.components.iter().zip(&other.components).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Sign of a sequence viewed as a permutation of `0..len`; zero when any
/// value repeats.
pub(crate) fn permutation_sign(seq: &[usize]) -> i32 {
    let n = seq.len();
    let mut seen = vec![false; n];
    for &v in seq {
        if v >= n || seen[v] {
            return 0;
        }
        seen[v] = true;
    }
    let mut visited = vec![false; n];
    let mut sign = 1;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !visited[j] {
            visited[j] = true;
            j = seq[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

pub(crate) fn validate_permutation(sigma: &[usize], k: usize) -> Result<()> {
    if sigma.len() != k {
        return Err(Error::InvalidPermutation(sigma.to_vec()));
    }
    let mut seen = vec![false; k];
    for &s in sigma {
        if s >= k || seen[s] {
            return Err(Error::InvalidPermutation(sigma.to_vec()));
        }
        seen[s] = true;
    }
    Ok(())
}

fn check_pairs(k: usize, pairs: &[(usize, usize)]) -> Result<()> {
    let mut used = vec![false; k];
    for &(a, b) in pairs {
        if a >= k || b >= k {
            return Err(Error::InvalidIndex(format!("pair ({a}, {b}) out of range for order {k}")));
        }
        if a == b {
            return Err(Error::InvalidIndex(format!("pair ({a}, {b}) contracts an index with itself")));
        }
        for x in [a, b] {
            if used[x] {
                return Err(Error::InvalidIndex(format!("index {x} appears in more than one pair")));
            }
            used[x] = true;
        }
    }
    Ok(())
}

/// Every unordered set of disjoint index pairs that takes an order-`k`
/// tensor down to order `target_k`, in a fixed order: contracted index sets
/// lexicographically, then matchings with the smallest free index paired
/// first.
///
/// There are `C(k, 2p) (2p - 1)!!` of them for `p = (k - target_k) / 2`.
pub fn contraction_pair_sets(k: usize, target_k: usize) -> Vec<Vec<(usize, usize)>> {
    if target_k > k || !(k - target_k).is_multiple_of(2) {
        return Vec::new();
    }
    let chosen_len = k - target_k;
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(chosen_len);
    choose(0, k, chosen_len, &mut chosen, &mut |set| {
        let mut current = Vec::with_capacity(chosen_len / 2);
        matchings(set, &mut current, &mut out);
    });
    out
}

fn choose(start: usize, k: usize, want: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == want {
        visit(chosen);
        return;
    }
    for i in start..k {
        if k - i < want - chosen.len() {
            break;
        }
        chosen.push(i);
        choose(i + 1, k, want, chosen, visit);
        chosen.pop();
    }
}

fn matchings(free: &[usize], current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    let Some((&first, rest)) = free.split_first() else {
        out.push(current.clone());
        return;
    };
    for j in 0..rest.len() {
        current.push((first, rest[j]));
        let remaining: Vec<usize> = rest.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| x).collect();
        matchings(&remaining, current, out);
        current.pop();
    }
}

/// Precomputed gather lists for a multicontraction of order-`k` tensors.
///
/// Output component `o` is the sum of input components `sources[o*w..(o+1)*w]`
/// where `w = d^pairs`.
#[derive(Clone, Debug)]
pub struct ContractionPlan {
    in_len: usize,
    out_k: usize,
    width: usize,
    sources: Vec<usize>,
}

impl ContractionPlan {
    pub fn new(d: usize, k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        check_pairs(k, pairs)?;
        let out_k = k - 2 * pairs.len();
        let in_len = pow(d, k);
        let out_len = pow(d, out_k);
        let width = pow(d, pairs.len());
        let mut contracted = vec![false; k];
        for &(a, b) in pairs {
            contracted[a] = true;
            contracted[b] = true;
        }
        let kept: Vec<usize> = (0..k).filter(|&i| !contracted[i]).collect();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::with_capacity(width); out_len];
        let mut idx = vec![0; k];
        let mut kept_idx = vec![0; out_k];
        for flat in 0..in_len {
            digits_into(flat, d, &mut idx);
            if pairs.iter().all(|&(a, b)| idx[a] == idx[b]) {
                for (slot, &axis) in kept_idx.iter_mut().zip(&kept) {
                    *slot = idx[axis];
                }
                buckets[flatten(&kept_idx, d)].push(flat);
            }
        }
        let sources = buckets.into_iter().flatten().collect();
        Ok(ContractionPlan { in_len, out_k, width, sources })
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.sources.len() / self.width
    }

    pub fn out_k(&self) -> usize {
        self.out_k
    }

    /// Contracts one tensor's components into `out` (overwritten).
    pub fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (o, chunk) in out.iter_mut().zip(self.sources.chunks_exact(self.width)) {
            *o = chunk.iter().map(|&s| input[s]).sum();
        }
    }

    /// Adjoint of [`apply`](Self::apply): scatters `grad_out` back onto `grad_in`
    /// (accumulating).
    pub fn apply_adjoint(&self, grad_out: &[f64], grad_in: &mut [f64]) {
        for (&g, chunk) in grad_out.iter().zip(self.sources.chunks_exact(self.width)) {
            for &s in chunk {
                grad_in[s] += g;
            }
        }
    }
}

/// Precomputed gather/sign list for the action of one group element on
/// tensors of one spec: `out[i] = sign[i] * in[source[i]]`.
#[derive(Clone, Debug)]
pub struct ActionPlan {
    source: Vec<usize>,
    sign: Vec<f64>,
}

impl ActionPlan {
    pub fn new(g: &GroupElement, spec: TensorSpec) -> Self {
        let d = spec.d;
        let k = spec.k;
        let len = spec.len();
        let det_factor = if spec.parity == Parity::Neg { g.det() as f64 } else { 1.0 };
        let perm = g.permutation();
        let signs = g.signs();
        let mut source = Vec::with_capacity(len);
        let mut sign = Vec::with_capacity(len);
        let mut idx = vec![0; k];
        let mut src = vec![0; k];
        for flat in 0..len {
            digits_into(flat, d, &mut idx);
            let mut s = det_factor;
            for m in 0..k {
                src[m] = perm[idx[m]];
                s *= signs[idx[m]] as f64;
            }
            source.push(flatten(&src, d));
            sign.push(s);
        }
        ActionPlan { source, sign }
    }

    pub fn apply(&self, input: &[f64], out: &mut [f64]) {
        for ((o, &s), &sg) in out.iter_mut().zip(&self.source).zip(&self.sign) {
            *o = sg * input[s];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::Group;

    fn tensor(d: usize, k: usize, parity: Parity, seed: u64) -> GeometricTensor {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let comps = (0..pow(d, k))
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 2001) as f64 / 1000.0 - 1.0
            })
            .collect();
        GeometricTensor::new(d, k, parity, comps).unwrap()
    }

    #[test]
    fn kronecker_delta_is_identity() {
        let delta = GeometricTensor::kronecker_delta(2).unwrap();
        assert_eq!(delta.components(), &[1.0, 0.0, 0.0, 1.0]);
        let trace = GeometricTensor::kronecker_delta(3).unwrap().contract(0, 1).unwrap();
        assert_eq!(trace.components(), &[3.0]);
        assert!((delta.frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(delta.scale(3.0).contract(0, 1).unwrap().components(), &[6.0]);
    }

    #[test]
    fn levi_civita_values() {
        let eps = GeometricTensor::levi_civita(2).unwrap();
        assert_eq!(eps.components(), &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(eps.parity(), Parity::Neg);
        let eps3 = GeometricTensor::levi_civita(3).unwrap();
        let nonzero: Vec<f64> = eps3.components().iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nonzero.len(), 6);
        assert!(nonzero.iter().all(|v| v.abs() == 1.0));
        assert_eq!(eps3.get(&[0, 1, 2]), 1.0);
        assert_eq!(eps3.get(&[1, 0, 2]), -1.0);
        assert_eq!(eps3.get(&[2, 0, 1]), 1.0);
        assert!(matches!(GeometricTensor::levi_civita(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn special_tensors_are_fixed_by_the_hyperoctahedral_group() {
        for d in [2, 3] {
            let group = Group::hyperoctahedral(d);
            let delta = GeometricTensor::kronecker_delta(d).unwrap();
            let eps = GeometricTensor::levi_civita(d).unwrap();
            for g in group.elements() {
                assert_eq!(delta.act(g).unwrap(), delta);
                assert_eq!(eps.act(g).unwrap(), eps);
            }
        }
    }

    #[test]
    fn outer_product_layout_and_parity() {
        let e0 = GeometricTensor::vector(Parity::Pos, vec![1.0, 0.0]).unwrap();
        let e1 = GeometricTensor::vector(Parity::Pos, vec![0.0, 1.0]).unwrap();
        assert_eq!(e0.outer(&e1).unwrap().components(), &[0.0, 1.0, 0.0, 0.0]);
        let a = tensor(2, 2, Parity::Pos, 3);
        let one = GeometricTensor::scalar(2, Parity::Pos, 1.0);
        assert_eq!(a.outer(&one).unwrap(), a);
        let pseudo = GeometricTensor::vector(Parity::Neg, vec![1.0, 2.0]).unwrap();
        assert_eq!(e0.outer(&pseudo).unwrap().parity(), Parity::Neg);
        let v3 = GeometricTensor::vector(Parity::Pos, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(e0.outer(&v3).is_err());
    }

    #[test]
    fn contraction_of_outer_is_dot_product() {
        let u = GeometricTensor::vector(Parity::Pos, vec![1.0, -2.0, 0.5]).unwrap();
        let v = GeometricTensor::vector(Parity::Pos, vec![3.0, 1.0, 4.0]).unwrap();
        let dot = u.outer(&v).unwrap().contract(0, 1).unwrap();
        assert_eq!(dot.k(), 0);
        assert!((dot.components()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn contraction_rejects_bad_indices() {
        let a = tensor(2, 3, Parity::Pos, 1);
        assert!(a.contract(0, 0).is_err());
        assert!(a.contract(0, 3).is_err());
        assert!(a.multicontract(&[(0, 1), (1, 2)]).is_err());
        assert_eq!(a.multicontract(&[]).unwrap(), a);
    }

    #[test]
    fn multicontract_uses_original_labels() {
        let a = tensor(2, 4, Parity::Pos, 11);
        let direct = a.multicontract(&[(0, 2), (1, 3)]).unwrap();
        let sequential = a.contract(0, 2).unwrap().contract(0, 1).unwrap();
        assert!(direct.max_abs_diff(&sequential).unwrap() < 1e-12);
        let swapped = a.multicontract(&[(1, 3), (0, 2)]).unwrap();
        assert!(direct.max_abs_diff(&swapped).unwrap() < 1e-12);
    }

    #[test]
    fn levi_civita_contraction_rotates_and_crosses() {
        let v = GeometricTensor::vector(Parity::Pos, vec![2.0, 5.0]).unwrap();
        let rotated = v.levi_civita_contract(&[0]).unwrap();
        assert_eq!(rotated.components(), &[-5.0, 2.0]);
        assert_eq!(rotated.parity(), Parity::Neg);
        let twice = rotated.levi_civita_contract(&[0]).unwrap();
        assert_eq!(twice.components(), &[-2.0, -5.0]);
        assert_eq!(twice.parity(), Parity::Pos);

        let u = GeometricTensor::vector(Parity::Pos, vec![1.0, 2.0, 3.0]).unwrap();
        let w = GeometricTensor::vector(Parity::Pos, vec![-1.0, 0.5, 2.0]).unwrap();
        let cross = u.outer(&w).unwrap().levi_civita_contract(&[0, 1]).unwrap();
        let expected = [2.0 * 2.0 - 3.0 * 0.5, -3.0 - 1.0 * 2.0, 1.0 * 0.5 - -2.0];
        assert_eq!(cross.parity(), Parity::Neg);
        for (a, b) in cross.components().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(u.levi_civita_contract(&[0]).is_err());
        assert!(u.outer(&w).unwrap().levi_civita_contract(&[1, 1]).is_err());
    }

    #[test]
    fn pair_set_counts() {
        assert_eq!(contraction_pair_sets(2, 0), vec![vec![(0, 1)]]);
        assert_eq!(contraction_pair_sets(3, 1).len(), 3);
        assert_eq!(contraction_pair_sets(4, 0).len(), 3);
        assert_eq!(contraction_pair_sets(5, 1).len(), 15);
        assert_eq!(contraction_pair_sets(7, 1).len(), 105);
        assert_eq!(contraction_pair_sets(4, 4), vec![Vec::<(usize, usize)>::new()]);
        assert!(contraction_pair_sets(3, 0).is_empty());
        assert!(contraction_pair_sets(1, 3).is_empty());
        for set in contraction_pair_sets(6, 2) {
            let mut used: Vec<usize> = set.iter().flat_map(|&(a, b)| [a, b]).collect();
            used.sort();
            used.dedup();
            assert_eq!(used.len(), 4);
        }
    }

    #[test]
    fn permutation_of_indices() {
        let a = tensor(2, 2, Parity::Pos, 5);
        assert_eq!(a.permute_indices(&[0, 1]).unwrap(), a);
        let t = a.permute_indices(&[1, 0]).unwrap();
        assert_eq!(t.get(&[0, 1]), a.get(&[1, 0]));
        assert!(a.permute_indices(&[0, 0]).is_err());
        assert!(a.permute_indices(&[0]).is_err());
    }

    #[test]
    fn permutations_compose() {
        // Brute force over all pairs of S_3 on a random order-3 tensor.
        let perms: Vec<Vec<usize>> =
            vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]];
        let a = tensor(2, 3, Parity::Pos, 9);
        for sigma in &perms {
            for tau in &perms {
                let stepwise = a.permute_indices(tau).unwrap().permute_indices(sigma).unwrap();
                let composed: Vec<usize> = (0..3).map(|m| sigma[tau[m]]).collect();
                let once = a.permute_indices(&composed).unwrap();
                assert_eq!(stepwise, once);
            }
        }
    }

    #[test]
    fn rotation_and_pseudovector_reflection() {
        let group = Group::hyperoctahedral(2);
        let rot = group.rotation90(0, 1);
        let e0 = GeometricTensor::vector(Parity::Pos, vec![1.0, 0.0]).unwrap();
        assert_eq!(e0.act(&rot).unwrap().components(), &[0.0, 1.0]);

        let flip = group.elements().iter().find(|g| g.matrix() == [-1, 0, 0, 1]).unwrap();
        let v = GeometricTensor::vector(Parity::Neg, vec![3.0, 4.0]).unwrap();
        assert_eq!(v.act(flip).unwrap().components(), &[3.0, -4.0]);
    }

    #[test]
    fn order_two_action_is_conjugation() {
        let group = Group::hyperoctahedral(3);
        let b = tensor(3, 2, Parity::Pos, 21);
        for g in group.elements() {
            let m = g.matrix();
            let acted = b.act(g).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let mut expect = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            expect += m[i * 3 + p] as f64 * b.get(&[p, q]) * m[j * 3 + q] as f64;
                        }
                    }
                    assert!((acted.get(&[i, j]) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn add_scale_and_norm() {
        let a = tensor(3, 2, Parity::Neg, 2);
        let zero = a.add(&a.scale(-1.0)).unwrap();
        assert!(zero.components().iter().all(|&c| c == 0.0));
        let b = tensor(3, 2, Parity::Pos, 2);
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn order_zero_tensors_are_uniform() {
        let s = GeometricTensor::scalar(2, Parity::Pos, 4.0);
        let group = Group::hyperoctahedral(2);
        for g in group.elements() {
            assert_eq!(s.act(g).unwrap(), s);
        }
        assert_eq!(s.permute_indices(&[]).unwrap(), s);
        let ps = GeometricTensor::scalar(2, Parity::Neg, 4.0);
        let flip = group.elements().iter().find(|g| g.det() == -1).unwrap();
        assert_eq!(ps.act(flip).unwrap().components(), &[-4.0]);
    }

    #[test]
    fn parity_serde_round_trip() {
        assert_eq!(serde_json::to_string(&Parity::Neg).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Parity>("1").unwrap(), Parity::Pos);
        assert!(serde_json::from_str::<Parity>("0").is_err());
    }
}
