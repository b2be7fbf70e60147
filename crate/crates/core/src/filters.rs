//! Complete orthogonal banks of `B_d`-invariant convolution filters.
//!
//! Each one-hot basis filter is averaged over the group. The averaged
//! vectors are the rows of the orthogonal projector onto the invariant
//! subspace; its SVD gives the dimension, and Gram-Schmidt over the rows in
//! basis order gives a basis made of orbit averages, which are sparse and
//! normalize to entries in `{-1, 0, 1}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::GeometricImage;
use crate::numerics::{svd, DenseMatrix, DEFAULT_RANK_TOLERANCE};
use crate::symmetry::Group;
use crate::tensor::{digits_into, pow, GeometricTensor, Parity, TensorSpec};

/// Invariant filters of one `(M, d, k, parity)` type.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub m: usize,
    pub spec: TensorSpec,
    pub filters: Vec<GeometricImage>,
}

impl FilterBank {
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Builds a bank from already computed filters, checking that they share
    /// the declared type.
    pub fn from_filters(m: usize, spec: TensorSpec, filters: Vec<GeometricImage>) -> Result<Self> {
        if m.is_multiple_of(2) {
            return Err(Error::EvenFilter(m));
        }
        for f in &filters {
            if f.n() != m || f.spec() != spec {
                return Err(Error::SpecMismatch(format!(
                    "filter {} of side {} does not belong to a bank of {} side {}",
                    f.spec(),
                    f.n(),
                    spec,
                    m
                )));
            }
        }
        Ok(FilterBank { m, spec, filters })
    }
}

/// The group average `(1/|G|) sum_g g C`.
pub fn group_average(c: &GeometricImage, group: &Group) -> Result<GeometricImage> {
    let mut acc = GeometricImage::zeros(c.n(), c.spec());
    for g in group.elements() {
        acc.axpy(1.0, &c.act(g)?)?;
    }
    Ok(acc.scale(1.0 / group.len() as f64))
}

/// Largest `|g C - C|` component over the group.
pub fn invariance_defect(c: &GeometricImage, group: &Group) -> Result<f64> {
    let mut worst = 0.0f64;
    for g in group.elements() {
        worst = worst.max(c.act(g)?.max_abs_diff(c)?);
    }
    Ok(worst)
}

pub fn enumerate_invariant_filters(m: usize, d: usize, k: usize, parity: Parity) -> Result<FilterBank> {
    if m.is_multiple_of(2) {
        return Err(Error::EvenFilter(m));
    }
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let spec = TensorSpec::new(d, k, parity);
    let group = Group::hyperoctahedral(d);
    let size = pow(m, d) * spec.len();

    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|i| group_average(&GeometricImage::one_hot(m, spec, i), &group).map(GeometricImage::into_data))
        .collect::<Result<_>>()?;

    let projector = DenseMatrix::from_rows(&rows)?;
    let decomposition = svd(&projector)?;
    let dim = decomposition.rank(DEFAULT_RANK_TOLERANCE);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for row in &rows {
        if basis.len() == dim {
            break;
        }
        let mut r = row.clone();
        let scale = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 * scale {
            basis.push(r.into_iter().map(|x| x / norm).collect());
        }
    }
    if basis.len() != dim {
        return Err(Error::SpecMismatch(format!(
            "invariant subspace has dimension {dim} but only {} orbit averages are independent",
            basis.len()
        )));
    }

    let mut filters =
        basis.into_iter().map(|v| normalize_filter(&GeometricImage::new(m, spec, v)?)).collect::<Result<Vec<_>>>()?;
    // All singular values of a projector tie at 1, so the order is the
    // lexicographic one on components.
    filters.sort_by(|a, b| {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(FilterBank { m, spec, filters })
}

/// Discrete divergence `sum_a <a, C(a + m)>` of a vector filter.
pub fn divergence(c: &GeometricImage) -> f64 {
    let d = c.d();
    let half = (c.n() / 2) as f64;
    let mut idx = vec![0; d];
    let mut total = 0.0;
    for p in 0..c.pixel_count() {
        digits_into(p, c.n(), &mut idx);
        let v = c.pixel_slice(p);
        total += (0..d).map(|j| (idx[j] as f64 - half) * v[j]).sum::<f64>();
    }
    total
}

/// Discrete curl `sum_a (a_x C_y - a_y C_x)` of a two-dimensional vector
/// filter; positive means counterclockwise.
pub fn curl(c: &GeometricImage) -> f64 {
    let half = (c.n() / 2) as f64;
    let mut idx = [0; 2];
    let mut total = 0.0;
    for p in 0..c.pixel_count() {
        digits_into(p, c.n(), &mut idx);
        let v = c.pixel_slice(p);
        let (ax, ay) = (idx[0] as f64 - half, idx[1] as f64 - half);
        total += ax * v[1] - ay * v[0];
    }
    total
}

/// Scales so the largest component magnitude is 1 and fixes the sign.
///
/// Vector filters get positive divergence, or positive curl in two
/// dimensions when the divergence vanishes; everything else gets a positive
/// first nonzero component.
pub fn normalize_filter(c: &GeometricImage) -> Result<GeometricImage> {
    if c.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let max = c.max_abs();
    if max == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let mut out = c.scale(1.0 / max);
    const TOL: f64 = 1e-9;
    let mut sign = 0.0;
    if c.k() == 1 {
        let div = divergence(&out);
        if div.abs() > TOL {
            sign = div.signum();
        } else if c.d() == 2 {
            let rot = curl(&out);
            if rot.abs() > TOL {
                sign = rot.signum();
            }
        }
    }
    if sign == 0.0 {
        sign = out.data().iter().copied().find(|x| x.abs() > TOL).map_or(1.0, f64::signum);
    }
    if sign < 0.0 {
        out = out.scale(-1.0);
    }
    // Orbit averages come out as exact multiples of the maximum; snapping
    // removes the last-bit noise so that banks compare bytewise.
    for x in out.data_mut() {
        let r = x.round();
        if (*x - r).abs() < 1e-12 {
            *x = r;
        }
        if *x == 0.0 {
            *x = 0.0;
        }
    }
    Ok(out)
}

/// `C (x) Delta`, with the Kronecker delta in every pixel.
pub fn pair_by_kron(c: &GeometricImage) -> Result<GeometricImage> {
    let delta = GeometricTensor::kronecker_delta(c.d())?;
    c.pixelwise_outer(&GeometricImage::constant(c.n(), &delta))
}

/// Pixelwise Levi-Civita contraction: order `k - d + 2`, opposite parity.
pub fn pair_by_levi_civita(c: &GeometricImage, mus: &[usize]) -> Result<GeometricImage> {
    c.pixelwise_lc_contract(mus)
}
