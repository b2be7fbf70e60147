//! Dimensions of spaces of `G_{N,2}`-equivariant polynomial maps between
//! vector images (`d = 2`, `k = 1`, positive parity), computed three ways.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{enumerate_invariant_filters, FilterBank};
use crate::image::GeometricImage;
use crate::numerics::series::binomial;
use crate::numerics::{rank, DenseMatrix, IntegerSeries, Prng};
use crate::symmetry::Group;
use crate::tensor::{contraction_pair_sets, ContractionPlan, Parity, TensorSpec};

/// Largest sidelength the Molien sum will enumerate.
pub const MOLIEN_MAX_N: usize = 9;

fn check_odd(n: usize) -> Result<()> {
    if n.is_multiple_of(2) {
        return Err(Error::UnsupportedSidelength(n));
    }
    Ok(())
}

/// `C(n, k)` for a possibly negative top, with `C(n, 0) = 1`.
fn binomial_signed(n: i64, k: u64) -> BigInt {
    if k == 0 {
        BigInt::one()
    } else if n < 0 {
        BigInt::zero()
    } else {
        binomial(n as u64, k)
    }
}

/// `(1/4) [C(2N^2 + l - 1, l) + (-1)^(l+1) sum_j (l - 2j + 1) C(N^2 + j - 2, j)]`.
pub fn dimension_closed_form(n: usize, degree: usize) -> Result<BigInt> {
    check_odd(n)?;
    let n2 = (n * n) as i64;
    let l = degree as i64;
    let mut alternating = BigInt::zero();
    for j in 0..=degree / 2 {
        alternating += BigInt::from(l - 2 * j as i64 + 1) * binomial_signed(n2 + j as i64 - 2, j as u64);
    }
    let sign = if degree % 2 == 1 { BigInt::one() } else { -BigInt::one() };
    let total = binomial_signed(2 * n2 + l - 1, degree as u64) + sign * alternating;
    let four = BigInt::from(4);
    let (q, r): (BigInt, BigInt) = (&total / &four, &total % &four);
    if !r.is_zero() {
        return Err(Error::SpecMismatch(format!("closed form {total} is not divisible by 4")));
    }
    Ok(q)
}

/// Group elements of `G_{N,2}` that share a trace and a signed cycle type on
/// the `2N^2` basis vectors, with their multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MolienClass {
    /// Signed fixed-point count, i.e. the trace of the representation matrix.
    pub trace: i64,
    /// `(length, sign)` for each cycle, sorted.
    pub cycles: Vec<(usize, i32)>,
    pub multiplicity: usize,
}

impl MolienClass {
    /// `det(I - M t)` as a truncated series.
    pub fn denominator(&self, order: usize) -> IntegerSeries {
        let mut s = IntegerSeries::one(order);
        for &(len, sign) in &self.cycles {
            s = s.mul(&IntegerSeries::binomial(order, -(sign as i64), len));
        }
        s
    }

    /// `1 / det(I - M t)` built from closed-form binomial expansions.
    pub fn reciprocal_denominator(&self, order: usize) -> IntegerSeries {
        let mut grouped: BTreeMap<(usize, i32), u32> = BTreeMap::new();
        for &c in &self.cycles {
            *grouped.entry(c).or_default() += 1;
        }
        let mut s = IntegerSeries::one(order);
        for ((len, sign), count) in grouped {
            s = s.mul(&IntegerSeries::reciprocal_binomial_power(order, -(sign as i64), len, count));
        }
        s
    }
}

/// Splits `G_{N,2}` (translations times `B_2`) into classes by trace and
/// signed cycle type of its action on vector images.
pub fn molien_classes(n: usize) -> Result<Vec<MolienClass>> {
    check_odd(n)?;
    if n > MOLIEN_MAX_N {
        return Err(Error::TooLarge(format!("Molien enumeration supports N <= {MOLIEN_MAX_N}, got {n}")));
    }
    let group = Group::hyperoctahedral(2);
    let dim = 2 * n * n;
    let mut classes: BTreeMap<(i64, Vec<(usize, i32)>), usize> = BTreeMap::new();
    for h in group.elements() {
        for tx in 0..n {
            for ty in 0..n {
                // Image of basis vector e^q at pixel (x, y) under translate(h .).
                let mut target = vec![0usize; dim];
                let mut sign = vec![0i32; dim];
                for x in 0..n {
                    for y in 0..n {
                        let moved = h.act_on_pixel_unchecked(&[x, y], n);
                        let px = (moved[0] + tx) % n;
                        let py = (moved[1] + ty) % n;
                        for q in 0..2 {
                            // h e_q = signs[i] e_i where permutation[i] = q.
                            let i = h.permutation().iter().position(|&p| p == q).expect("permutation");
                            target[(x * n + y) * 2 + q] = (px * n + py) * 2 + i;
                            sign[(x * n + y) * 2 + q] = h.signs()[i];
                        }
                    }
                }
                let mut seen = vec![false; dim];
                let mut cycles = Vec::new();
                let mut trace = 0i64;
                for start in 0..dim {
                    if seen[start] {
                        continue;
                    }
                    let mut len = 0;
                    let mut s = 1;
                    let mut cur = start;
                    while !seen[cur] {
                        seen[cur] = true;
                        s *= sign[cur];
                        cur = target[cur];
                        len += 1;
                    }
                    if len == 1 {
                        trace += s as i64;
                    }
                    cycles.push((len, s));
                }
                cycles.sort();
                *classes.entry((trace, cycles)).or_default() += 1;
            }
        }
    }
    Ok(classes.into_iter().map(|((trace, cycles), multiplicity)| MolienClass { trace, cycles, multiplicity }).collect())
}

/// The Molien series `(1/|G|) sum_g tr(M(g^-1)) / det(I - M(g) t)` up to
/// `t^order`.
pub fn molien_series(n: usize, order: usize) -> Result<IntegerSeries> {
    let classes = molien_classes(n)?;
    let group_order: usize = classes.iter().map(|c| c.multiplicity).sum();
    let mut total = IntegerSeries::zero(order);
    for class in &classes {
        // Signed permutation matrices are orthogonal, so tr(M(g^-1)) = tr(M(g)).
        if class.trace == 0 {
            continue;
        }
        let weight = BigRational::from_integer(BigInt::from(class.trace) * BigInt::from(class.multiplicity));
        total = total.add(&class.reciprocal_denominator(order).scale(&weight));
    }
    Ok(total.scale(&BigRational::new(BigInt::one(), BigInt::from(group_order))))
}

pub fn dimension_molien(n: usize, degree: usize) -> Result<BigInt> {
    let series = molien_series(n, degree)?;
    series.integer_coefficient(degree).ok_or_else(|| {
        Error::SpecMismatch(format!("Molien coefficient {} is not an integer", series.coefficient(degree)))
    })
}

/// Knobs for [`count_empirical`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalOptions {
    pub seed: u64,
    /// Random probe images; `None` picks 3 for degree 2, 5 for degree 3 and
    /// raises it when the probes carry too few numbers to reach the target.
    pub probes: Option<usize>,
    /// Candidate maps evaluated before giving up.
    pub max_candidates: usize,
    /// Wall-clock budget.
    pub max_seconds: Option<f64>,
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        EmpiricalOptions { seed: 0, probes: None, max_candidates: 2_000_000, max_seconds: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    /// Rank of the evaluated candidate maps.
    pub found: usize,
    /// Closed-form dimension the search stops at.
    pub target: usize,
    pub candidates_enumerated: usize,
    pub probes: usize,
    /// Whether a candidate or time budget cut the search short.
    pub budget_exhausted: bool,
}

impl EmpiricalReport {
    pub fn complete(&self) -> bool {
        self.found == self.target
    }
}

fn default_probes(degree: usize) -> usize {
    match degree {
        0..=2 => 3,
        _ => 5,
    }
}

/// One equivariant candidate map `A -> contract(conv(g_1(A) (x) ... (x) g_l(A), C_h))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// Indices into the `g` filter list (empty for degree 1, where the
    /// product is `A` itself).
    pub g_filters: Vec<usize>,
    pub h_filter: usize,
    pub pairs: Vec<(usize, usize)>,
}

/// The fixed ingredients of the empirical count at sidelength `N`.
pub struct CandidateFamily {
    pub n: usize,
    pub degree: usize,
    /// Filters with `k' in {1, 2}`, `p' = +1`, `M = N`.
    pub filters: Vec<GeometricImage>,
}

impl CandidateFamily {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        check_odd(n)?;
        if !(1..=3).contains(&degree) {
            return Err(Error::InvalidConfig(format!("empirical counting supports degrees 1..=3, got {degree}")));
        }
        let mut filters = Vec::new();
        for k in [1, 2] {
            let bank: FilterBank = enumerate_invariant_filters(n, 2, k, Parity::Pos)?;
            filters.extend(bank.filters);
        }
        Ok(CandidateFamily { n, degree, filters })
    }

    /// Multisets of `g` filters, smaller total order first.
    fn g_multisets(&self) -> Vec<Vec<usize>> {
        if self.degree == 1 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        let mut current = Vec::new();
        multisets(self.filters.len(), self.degree, 0, &mut current, &mut out);
        let order = |set: &Vec<usize>| set.iter().map(|&i| self.filters[i].k()).sum::<usize>();
        out.sort_by_key(|s| order(s));
        out
    }

    /// Pixelwise product `g_1(A) (x) ... (x) g_l(A)`.
    pub fn product(&self, a: &GeometricImage, g_filters: &[usize]) -> Result<GeometricImage> {
        if g_filters.is_empty() {
            return Ok(a.clone());
        }
        let mut acc: Option<GeometricImage> = None;
        for &i in g_filters {
            let factor = a.convolve(&self.filters[i], 1)?;
            acc = Some(match acc {
                None => factor,
                Some(prev) => prev.pixelwise_outer(&factor)?,
            });
        }
        Ok(acc.expect("nonempty"))
    }

    pub fn evaluate(&self, a: &GeometricImage, candidate: &Candidate) -> Result<GeometricImage> {
        let conv = self.product(a, &candidate.g_filters)?.convolve(&self.filters[candidate.h_filter], 1)?;
        conv.pixelwise_multicontract(&candidate.pairs)
    }

    /// Every candidate in enumeration order.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for g in self.g_multisets() {
            let base = self.degree + g.iter().map(|&i| self.filters[i].k()).sum::<usize>();
            for (h, filter) in self.filters.iter().enumerate() {
                let k = base + filter.k();
                if k.is_multiple_of(2) {
                    continue;
                }
                for pairs in contraction_pair_sets(k, 1) {
                    out.push(Candidate { g_filters: g.clone(), h_filter: h, pairs });
                }
            }
        }
        out
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

/// Incremental orthonormal basis used to keep only rank-increasing rows.
struct RowBasis {
    rows: Vec<Vec<f64>>,
}

impl RowBasis {
    fn try_add(&mut self, row: &[f64]) -> bool {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return false;
        }
        let mut r: Vec<f64> = row.iter().map(|x| x / norm).collect();
        for _ in 0..2 {
            for b in &self.rows {
                let dot: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let residual = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if residual > 1e-6 {
            self.rows.push(r.into_iter().map(|x| x / residual).collect());
            true
        } else {
            false
        }
    }
}

pub fn random_vector_image(n: usize, rng: &mut Prng) -> GeometricImage {
    let spec = TensorSpec::new(2, 1, Parity::Pos);
    let data = (0..2 * n * n).map(|_| rng.standard_normal()).collect();
    GeometricImage::new(n, spec, data).expect("sized to spec")
}

/// Counts independent equivariant maps of the given degree by evaluating
/// candidate maps on random probes and tracking the rank of their outputs.
pub fn count_empirical(n: usize, degree: usize, options: &EmpiricalOptions) -> Result<EmpiricalReport> {
    let family = CandidateFamily::new(n, degree)?;
    let target: usize = dimension_closed_form(n, degree)?
        .try_into()
        .map_err(|_| Error::TooLarge("target dimension does not fit in usize".into()))?;
    let width = 2 * n * n;
    let mut probes = options.probes.unwrap_or_else(|| default_probes(degree));
    if options.probes.is_none() {
        // A map space of dimension `target` cannot show full rank on fewer
        // than `target` output numbers.
        probes = probes.max((target * 5 / 4).div_ceil(width));
    }
    let root = Prng::new(options.seed);
    let inputs: Vec<GeometricImage> = (0..probes).map(|i| random_vector_image(n, &mut root.derive(i as u64))).collect();

    let started = Instant::now();
    let deadline = options.max_seconds.map(Duration::from_secs_f64);
    let mut basis = RowBasis { rows: Vec::new() };
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut enumerated = 0usize;
    let mut exhausted = false;

    'outer: for g in family.g_multisets() {
        let products: Vec<GeometricImage> = inputs.par_iter().map(|a| family.product(a, &g)).collect::<Result<_>>()?;
        let base = degree + g.iter().map(|&i| family.filters[i].k()).sum::<usize>();
        for (h, filter) in family.filters.iter().enumerate() {
            let k = base + filter.k();
            if k.is_multiple_of(2) {
                continue;
            }
            let convolved: Vec<GeometricImage> =
                products.par_iter().map(|p| p.convolve(filter, 1)).collect::<Result<_>>()?;
            let pair_sets = contraction_pair_sets(k, 1);
            let rows: Vec<Vec<f64>> = pair_sets
                .par_iter()
                .map(|pairs| {
                    let plan = ContractionPlan::new(2, k, pairs)?;
                    let mut row = Vec::with_capacity(width * probes);
                    for c in &convolved {
                        let mut out = vec![0.0; 2];
                        for px in c.data().chunks_exact(plan.in_len()) {
                            plan.apply(px, &mut out);
                            row.extend_from_slice(&out);
                        }
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            let _ = h;
            for row in rows {
                enumerated += 1;
                if basis.try_add(&row) {
                    kept.push(row);
                    if kept.len() >= target {
                        break 'outer;
                    }
                }
                if enumerated >= options.max_candidates {
                    exhausted = true;
                    break 'outer;
                }
            }
            if deadline.is_some_and(|limit| started.elapsed() > limit) {
                exhausted = true;
                break 'outer;
            }
        }
    }

    let found = if kept.is_empty() { 0 } else { rank(&DenseMatrix::from_rows(&kept)?)? };
    Ok(EmpiricalReport {
        found,
        target,
        candidates_enumerated: enumerated,
        probes,
        budget_exhausted: exhausted && found < target,
    })
}

/// The JSON report of the `count` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub degree: usize,
    pub closed_form: Option<String>,
    pub molien: Option<String>,
    pub empirical: Option<EmpiricalReport>,
    pub seed: u64,
    /// Whether every computed value agrees with the others.
    pub consistent: bool,
}
