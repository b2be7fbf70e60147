//! Geometric images: `N^d` grids of same-spec tensors on the `d`-torus.
//!
//! Storage is a single flat buffer, pixel-major (pixel grid row-major, first
//! pixel coordinate slowest) with each pixel's tensor components contiguous.

use crate::error::{Error, Result};
use crate::symmetry::GroupElement;
use crate::tensor::{digits_into, flatten, pow, ActionPlan, ContractionPlan, GeometricTensor, Parity, TensorSpec};

/// How convolution treats taps that fall outside the pixel grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Indices wrap around the `d`-torus.
    #[default]
    Torus,
    /// Out-of-range taps read zero tensors.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricImage {
    n: usize,
    spec: TensorSpec,
    data: Vec<f64>,
}

impl GeometricImage {
    pub fn new(n: usize, spec: TensorSpec, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::SpecMismatch("sidelength must be positive".into()));
        }
        if spec.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let expected = pow(n, spec.d) * spec.len();
        if data.len() != expected {
            return Err(Error::ComponentCount { expected, found: data.len() });
        }
        Ok(GeometricImage { n, spec, data })
    }

    pub fn zeros(n: usize, spec: TensorSpec) -> Self {
        let len = pow(n, spec.d) * spec.len();
        GeometricImage { n, spec, data: vec![0.0; len] }
    }

    /// Builds an image from per-pixel tensors in row-major pixel order.
    pub fn from_pixels(n: usize, pixels: &[GeometricTensor]) -> Result<Self> {
        let first = pixels.first().ok_or_else(|| Error::SpecMismatch("no pixels".into()))?;
        let spec = first.spec();
        if pixels.len() != pow(n, spec.d) {
            return Err(Error::ComponentCount { expected: pow(n, spec.d), found: pixels.len() });
        }
        let mut data = Vec::with_capacity(pixels.len() * spec.len());
        for p in pixels {
            if p.spec() != spec {
                return Err(Error::SpecMismatch(format!("pixel spec {} differs from {}", p.spec(), spec)));
            }
            data.extend_from_slice(p.components());
        }
        GeometricImage::new(n, spec, data)
    }

    /// The image with `tensor` in every pixel.
    pub fn constant(n: usize, tensor: &GeometricTensor) -> Self {
        let count = pow(n, tensor.d());
        let mut data = Vec::with_capacity(count * tensor.components().len());
        for _ in 0..count {
            data.extend_from_slice(tensor.components());
        }
        GeometricImage { n, spec: tensor.spec(), data }
    }

    /// Basis image with a single 1 at flat offset `index` of the buffer.
    pub fn one_hot(n: usize, spec: TensorSpec, index: usize) -> Self {
        let mut img = GeometricImage::zeros(n, spec);
        img.data[index] = 1.0;
        img
    }

    pub fn n(&self) -> usize {
        self.n
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

    pub fn spec(&self) -> TensorSpec {
        self.spec
    }

    pub fn pixel_count(&self) -> usize {
        pow(self.n, self.spec.d)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel_index(&self, pixel: &[usize]) -> usize {
        flatten(pixel, self.n)
    }

    pub fn pixel_slice(&self, flat: usize) -> &[f64] {
        let w = self.spec.len();
        &self.data[flat * w..(flat + 1) * w]
    }

    pub fn pixel(&self, pixel: &[usize]) -> GeometricTensor {
        let flat = self.pixel_index(pixel);
        GeometricTensor::new(self.d(), self.k(), self.parity(), self.pixel_slice(flat).to_vec())
            .expect("pixel slice has the image spec")
    }

    pub fn set_pixel(&mut self, pixel: &[usize], value: &GeometricTensor) -> Result<()> {
        if value.spec() != self.spec {
            return Err(Error::SpecMismatch(format!("cannot store {} in a {} image", value.spec(), self.spec)));
        }
        let w = self.spec.len();
        let flat = self.pixel_index(pixel);
        self.data[flat * w..(flat + 1) * w].copy_from_slice(value.components());
        Ok(())
    }

    fn check_same_grid(&self, other: &GeometricImage) -> Result<()> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: other.d() });
        }
        if self.n != other.n {
            return Err(Error::SpecMismatch(format!("sidelength {} vs {}", self.n, other.n)));
        }
        Ok(())
    }

    fn check_same_spec(&self, other: &GeometricImage) -> Result<()> {
        self.check_same_grid(other)?;
        if self.spec != other.spec {
            return Err(Error::SpecMismatch(format!("{} vs {}", self.spec, other.spec)));
        }
        Ok(())
    }

    pub fn add(&self, other: &GeometricImage) -> Result<GeometricImage> {
        self.check_same_spec(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(GeometricImage { n: self.n, spec: self.spec, data })
    }

    pub fn sub(&self, other: &GeometricImage) -> Result<GeometricImage> {
        self.check_same_spec(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(GeometricImage { n: self.n, spec: self.spec, data })
    }

    pub fn scale(&self, alpha: f64) -> GeometricImage {
        GeometricImage { n: self.n, spec: self.spec, data: self.data.iter().map(|a| a * alpha).collect() }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &GeometricImage) -> Result<()> {
        self.check_same_spec(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &GeometricImage) -> Result<f64> {
        self.check_same_spec(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// `||self - other|| / max(||self||, ||other||)`, zero when both vanish.
    pub fn relative_diff(&self, other: &GeometricImage) -> Result<f64> {
        self.check_same_spec(other)?;
        let diff = self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale = self.norm().max(other.norm());
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }

    pub fn pixelwise_outer(&self, other: &GeometricImage) -> Result<GeometricImage> {
        self.check_same_grid(other)?;
        let spec = TensorSpec::new(self.d(), self.k() + other.k(), self.parity() * other.parity());
        let wa = self.spec.len();
        let wb = other.spec.len();
        let mut data = Vec::with_capacity(self.pixel_count() * spec.len());
        for p in 0..self.pixel_count() {
            let a = &self.data[p * wa..(p + 1) * wa];
            let b = &other.data[p * wb..(p + 1) * wb];
            for &x in a {
                data.extend(b.iter().map(|&y| x * y));
            }
        }
        Ok(GeometricImage { n: self.n, spec, data })
    }

    pub fn pixelwise_contract(&self, mu: usize, nu: usize) -> Result<GeometricImage> {
        self.pixelwise_multicontract(&[(mu, nu)])
    }

    pub fn pixelwise_multicontract(&self, pairs: &[(usize, usize)]) -> Result<GeometricImage> {
        let plan = ContractionPlan::new(self.d(), self.k(), pairs)?;
        Ok(self.apply_contraction(&plan))
    }

    pub(crate) fn apply_contraction(&self, plan: &ContractionPlan) -> GeometricImage {
        let spec = TensorSpec::new(self.d(), plan.out_k(), self.parity());
        let w_in = plan.in_len();
        let w_out = plan.out_len();
        let mut data = vec![0.0; self.pixel_count() * w_out];
        for (src, dst) in self.data.chunks_exact(w_in).zip(data.chunks_exact_mut(w_out)) {
            plan.apply(src, dst);
        }
        GeometricImage { n: self.n, spec, data }
    }

    pub fn pixelwise_lc_contract(&self, mus: &[usize]) -> Result<GeometricImage> {
        let eps = GeometricTensor::levi_civita(self.d())?;
        let with_eps = self.pixelwise_outer(&GeometricImage::constant(self.n, &eps))?;
        if mus.len() + 1 != self.d() {
            return Err(Error::InvalidIndex(format!("Levi-Civita contraction takes {} indices", self.d() - 1)));
        }
        let pairs: Vec<(usize, usize)> = mus.iter().enumerate().map(|(i, &mu)| (mu, self.k() + i)).collect();
        if mus.iter().any(|&mu| mu >= self.k()) {
            return Err(Error::InvalidIndex(format!("indices {mus:?} out of range for order {}", self.k())));
        }
        with_eps.pixelwise_multicontract(&pairs)
    }

    pub fn pixelwise_permute(&self, sigma: &[usize]) -> Result<GeometricImage> {
        let w = self.spec.len();
        let mut data = Vec::with_capacity(self.data.len());
        for p in 0..self.pixel_count() {
            let t = GeometricTensor::new(self.d(), self.k(), self.parity(), self.data[p * w..(p + 1) * w].to_vec())?;
            data.extend_from_slice(t.permute_indices(sigma)?.components());
        }
        Ok(GeometricImage { n: self.n, spec: self.spec, data })
    }

    /// Geometric convolution on the torus: `(A * C)(i) = sum_a A(i - D a) (x) C(a + m)`
    /// over taps `a` in `[-m, m]^d`, with dilation `D`.
    pub fn convolve(&self, filter: &GeometricImage, dilation: usize) -> Result<GeometricImage> {
        self.convolve_with(filter, dilation, Boundary::Torus)
    }

    pub fn convolve_with(
        &self,
        filter: &GeometricImage,
        dilation: usize,
        boundary: Boundary,
    ) -> Result<GeometricImage> {
        let taps = TapTable::new(self.n, self.d(), filter, dilation, boundary)?;
        let spec = TensorSpec::new(self.d(), self.k() + filter.k(), self.parity() * filter.parity());
        let mut out = GeometricImage::zeros(self.n, spec);
        convolve_accumulate(&self.data, self.spec.len(), filter, &taps, &mut out.data);
        Ok(out)
    }

    /// Translation on the torus: `(L_t A)(i) = A(i - t)`.
    pub fn translate(&self, offset: &[i64]) -> Result<GeometricImage> {
        if offset.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: offset.len() });
        }
        let n = self.n as i64;
        let d = self.d();
        let w = self.spec.len();
        let mut data = vec![0.0; self.data.len()];
        let mut idx = vec![0; d];
        let mut src = vec![0; d];
        for p in 0..self.pixel_count() {
            digits_into(p, self.n, &mut idx);
            for j in 0..d {
                src[j] = (idx[j] as i64 - offset[j]).rem_euclid(n) as usize;
            }
            let s = flatten(&src, self.n);
            data[p * w..(p + 1) * w].copy_from_slice(&self.data[s * w..(s + 1) * w]);
        }
        Ok(GeometricImage { n: self.n, spec: self.spec, data })
    }

    /// The `B_d` action `(g A)(i) = g A(g^-1 i)`.
    pub fn act(&self, g: &GroupElement) -> Result<GeometricImage> {
        if g.d() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: g.d() });
        }
        if self.n.is_multiple_of(2) {
            return Err(Error::UnsupportedSidelength(self.n));
        }
        let inv = g.inverse();
        let plan = ActionPlan::new(g, self.spec);
        let w = self.spec.len();
        let mut data = vec![0.0; self.data.len()];
        let mut idx = vec![0; self.d()];
        for p in 0..self.pixel_count() {
            digits_into(p, self.n, &mut idx);
            let src = flatten(&inv.act_on_pixel_unchecked(&idx, self.n), self.n);
            plan.apply(&self.data[src * w..(src + 1) * w], &mut data[p * w..(p + 1) * w]);
        }
        Ok(GeometricImage { n: self.n, spec: self.spec, data })
    }

    /// Block means over `b^d` pixels.
    pub fn avg_pool(&self, b: usize) -> Result<GeometricImage> {
        if b == 0 || !self.n.is_multiple_of(b) {
            return Err(Error::PoolFactor { factor: b, sidelength: self.n });
        }
        let d = self.d();
        let out_n = self.n / b;
        let w = self.spec.len();
        let mut out = GeometricImage::zeros(out_n, self.spec);
        let block = pow(b, d);
        let inv = 1.0 / block as f64;
        let mut idx = vec![0; d];
        let mut off = vec![0; d];
        let mut src = vec![0; d];
        for p in 0..out.pixel_count() {
            digits_into(p, out_n, &mut idx);
            for a in 0..block {
                digits_into(a, b, &mut off);
                for j in 0..d {
                    src[j] = b * idx[j] + off[j];
                }
                let s = flatten(&src, self.n);
                for c in 0..w {
                    out.data[p * w + c] += inv * self.data[s * w + c];
                }
            }
        }
        Ok(out)
    }

    /// Nearest-neighbour unpooling: `unpool(A, b)(i) = A(floor(i / b))`.
    pub fn unpool(&self, b: usize) -> Result<GeometricImage> {
        if b == 0 {
            return Err(Error::PoolFactor { factor: b, sidelength: self.n });
        }
        let d = self.d();
        let out_n = self.n * b;
        let w = self.spec.len();
        let mut out = GeometricImage::zeros(out_n, self.spec);
        let mut idx = vec![0; d];
        for p in 0..out.pixel_count() {
            digits_into(p, out_n, &mut idx);
            for x in idx.iter_mut() {
                *x /= b;
            }
            let s = flatten(&idx, self.n);
            out.data[p * w..(p + 1) * w].copy_from_slice(&self.data[s * w..(s + 1) * w]);
        }
        Ok(out)
    }
}

/// For each filter tap (lexicographic over `[-m, m]^d`), the source pixel of
/// every output pixel, or `None` when the tap falls off a zero-padded grid.
pub(crate) struct TapTable {
    pub(crate) sources: Vec<Vec<Option<usize>>>,
}

impl TapTable {
    pub(crate) fn new(
        n: usize,
        d: usize,
        filter: &GeometricImage,
        dilation: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        if filter.d() != d {
            return Err(Error::DimensionMismatch { expected: d, found: filter.d() });
        }
        let m_side = filter.n();
        if m_side.is_multiple_of(2) {
            return Err(Error::EvenFilter(m_side));
        }
        if dilation == 0 {
            return Err(Error::InvalidConfig("dilation must be positive".into()));
        }
        let m = (m_side / 2) as i64;
        let taps = pow(m_side, d);
        let pixels = pow(n, d);
        let ni = n as i64;
        let mut tap_idx = vec![0; d];
        let mut idx = vec![0; d];
        let mut src = vec![0; d];
        let mut sources = Vec::with_capacity(taps);
        for t in 0..taps {
            digits_into(t, m_side, &mut tap_idx);
            let mut row = Vec::with_capacity(pixels);
            for p in 0..pixels {
                digits_into(p, n, &mut idx);
                let mut inside = true;
                for j in 0..d {
                    let a = tap_idx[j] as i64 - m;
                    let raw = idx[j] as i64 - dilation as i64 * a;
                    match boundary {
                        Boundary::Torus => src[j] = raw.rem_euclid(ni) as usize,
                        Boundary::Zero => {
                            if raw < 0 || raw >= ni {
                                inside = false;
                            } else {
                                src[j] = raw as usize;
                            }
                        }
                    }
                }
                row.push(if inside { Some(flatten(&src, n)) } else { None });
            }
            sources.push(row);
        }
        Ok(TapTable { sources })
    }
}

/// `out[p] += sum_t input[src(t, p)] (x) filter[t]`, taps outermost.
pub(crate) fn convolve_accumulate(
    input: &[f64],
    w_in: usize,
    filter: &GeometricImage,
    taps: &TapTable,
    out: &mut [f64],
) {
    let w_f = filter.spec.len();
    let w_out = w_in * w_f;
    for (t, row) in taps.sources.iter().enumerate() {
        let f = &filter.data[t * w_f..(t + 1) * w_f];
        if f.iter().all(|&x| x == 0.0) {
            continue;
        }
        for (p, src) in row.iter().enumerate() {
            let Some(s) = *src else { continue };
            let a = &input[s * w_in..(s + 1) * w_in];
            let o = &mut out[p * w_out..(p + 1) * w_out];
            for (ca, &x) in a.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let dst = &mut o[ca * w_f..(ca + 1) * w_f];
                for (y, &c) in dst.iter_mut().zip(f) {
                    *y += x * c;
                }
            }
        }
    }
}

/// Adjoint of [`convolve_accumulate`] with respect to the input image.
pub(crate) fn convolve_input_adjoint(
    grad_out: &[f64],
    w_in: usize,
    filter: &GeometricImage,
    taps: &TapTable,
    grad_in: &mut [f64],
) {
    let w_f = filter.spec.len();
    let w_out = w_in * w_f;
    for (t, row) in taps.sources.iter().enumerate() {
        let f = &filter.data[t * w_f..(t + 1) * w_f];
        if f.iter().all(|&x| x == 0.0) {
            continue;
        }
        for (p, src) in row.iter().enumerate() {
            let Some(s) = *src else { continue };
            let go = &grad_out[p * w_out..(p + 1) * w_out];
            let gi = &mut grad_in[s * w_in..(s + 1) * w_in];
            for (ca, slot) in gi.iter_mut().enumerate() {
                let seg = &go[ca * w_f..(ca + 1) * w_f];
                *slot += seg.iter().zip(f).map(|(g, c)| g * c).sum::<f64>();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::Group;

    fn scalar_spec() -> TensorSpec {
        TensorSpec::new(2, 0, Parity::Pos)
    }

    fn ramp(n: usize, spec: TensorSpec) -> GeometricImage {
        let len = pow(n, spec.d) * spec.len();
        let data = (0..len).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        GeometricImage::new(n, spec, data).unwrap()
    }

    #[test]
    fn arithmetic_basics() {
        let a = ramp(3, TensorSpec::new(2, 1, Parity::Pos));
        let z = a.add(&a.scale(-1.0)).unwrap();
        assert!(z.data().iter().all(|&x| x == 0.0));
        let b = ramp(3, scalar_spec());
        assert!(a.add(&b).is_err());
        let sq = a.pixelwise_outer(&a).unwrap().pixelwise_contract(0, 1).unwrap();
        for p in 0..9 {
            let v = a.pixel_slice(p);
            assert_eq!(sq.pixel_slice(p)[0], v[0] * v[0] + v[1] * v[1]);
        }
        let t = ramp(3, TensorSpec::new(2, 2, Parity::Pos));
        assert_eq!(t.pixelwise_permute(&[0, 1]).unwrap(), t);
    }

    #[test]
    fn identity_filter_reproduces_image() {
        let a = ramp(5, TensorSpec::new(2, 1, Parity::Neg));
        let mut c = GeometricImage::zeros(3, scalar_spec());
        c.data_mut()[4] = 1.0;
        let out = a.convolve(&c, 1).unwrap();
        assert_eq!(out, a);
        assert_eq!(a.convolve(&c, 3).unwrap(), a);
    }

    #[test]
    fn one_hot_convolution_matches_direct_sum() {
        // Oracle: (A*C)(i) = sum_a A(i - a) C(a + m) evaluated by hand on N=5, M=3.
        let n = 5;
        let q = [1usize, 3usize];
        let mut a = GeometricImage::zeros(n, scalar_spec());
        a.data_mut()[q[0] * n + q[1]] = 1.0;
        let c = GeometricImage::new(3, scalar_spec(), (1..=9).map(|x| x as f64).collect()).unwrap();
        let out = a.convolve(&c, 1).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut expect = 0.0;
                for ax in -1i64..=1 {
                    for ay in -1i64..=1 {
                        let si = (i as i64 - ax).rem_euclid(n as i64) as usize;
                        let sj = (j as i64 - ay).rem_euclid(n as i64) as usize;
                        if [si, sj] == q {
                            expect += c.data()[((ax + 1) * 3 + ay + 1) as usize];
                        }
                    }
                }
                assert_eq!(out.data()[i * n + j], expect);
            }
        }
        // pixel q + a carries C(a + m)
        assert_eq!(out.data()[(q[0] + 1) * n + q[1] + 1], c.data()[8]);
        assert_eq!(out.data()[(q[0] - 1) * n + q[1]], c.data()[1]);
    }

    #[test]
    fn convolution_rejects_even_filters_and_mismatched_d() {
        let a = ramp(4, scalar_spec());
        let even = GeometricImage::zeros(2, scalar_spec());
        assert!(matches!(a.convolve(&even, 1), Err(Error::EvenFilter(2))));
        let c3 = GeometricImage::zeros(3, TensorSpec::new(3, 0, Parity::Pos));
        assert!(a.convolve(&c3, 1).is_err());
    }

    #[test]
    fn zero_boundary_drops_wrapped_taps() {
        let n = 4;
        let mut a = GeometricImage::zeros(n, scalar_spec());
        a.data_mut()[0] = 1.0;
        let c = GeometricImage::new(3, scalar_spec(), vec![1.0; 9]).unwrap();
        let torus = a.convolve_with(&c, 1, Boundary::Torus).unwrap();
        let zero = a.convolve_with(&c, 1, Boundary::Zero).unwrap();
        assert_eq!(torus.data()[n * n - 1], 1.0);
        assert_eq!(zero.data()[n * n - 1], 0.0);
        assert_eq!(zero.data()[n + 1], 1.0);
    }

    #[test]
    fn translations() {
        let a = ramp(4, TensorSpec::new(2, 1, Parity::Pos));
        assert_eq!(a.translate(&[0, 0]).unwrap(), a);
        assert_eq!(a.translate(&[4, 0]).unwrap(), a);
        assert_eq!(a.translate(&[1, -2]).unwrap().translate(&[-1, 2]).unwrap(), a);
        let shifted = a.translate(&[1, 0]).unwrap();
        assert_eq!(shifted.pixel(&[1, 2]), a.pixel(&[0, 2]));
    }

    #[test]
    fn group_action_on_images() {
        let group = Group::hyperoctahedral(2);
        let a = ramp(3, TensorSpec::new(2, 1, Parity::Pos));
        assert_eq!(a.act(&GroupElement::identity(2)).unwrap(), a);
        for g in group.elements() {
            for h in group.elements() {
                let stepwise = a.act(h).unwrap().act(g).unwrap();
                let once = a.act(&g.compose(h).unwrap()).unwrap();
                assert!(stepwise.max_abs_diff(&once).unwrap() < 1e-15);
            }
        }
        let s = ramp(3, scalar_spec());
        let mut sorted: Vec<f64> = s.data().to_vec();
        sorted.sort_by(f64::total_cmp);
        for g in group.elements() {
            let mut acted = s.act(g).unwrap().into_data();
            acted.sort_by(f64::total_cmp);
            assert_eq!(acted, sorted);
        }
        let even = ramp(4, scalar_spec());
        assert!(matches!(even.act(&group.elements()[0]), Err(Error::UnsupportedSidelength(4))));
    }

    #[test]
    fn pooling_and_unpooling() {
        let spec = scalar_spec();
        let c = GeometricImage::new(4, spec, vec![2.5; 16]).unwrap();
        assert_eq!(c.avg_pool(2).unwrap(), GeometricImage::new(2, spec, vec![2.5; 4]).unwrap());
        let a = ramp(4, TensorSpec::new(2, 1, Parity::Pos));
        assert_eq!(a.avg_pool(1).unwrap(), a);
        let mut block = GeometricImage::zeros(4, spec);
        block.data_mut()[5] = 4.0;
        assert_eq!(block.avg_pool(2).unwrap().data()[0], 1.0);
        assert!(matches!(a.avg_pool(3), Err(Error::PoolFactor { .. })));

        assert_eq!(a.unpool(1).unwrap(), a);
        let up = a.unpool(2).unwrap();
        assert_eq!(up.n(), 8);
        assert_eq!(up.avg_pool(2).unwrap(), a);
        let first = a.pixel(&[0, 0]);
        let copies = (0..64).filter(|&p| up.pixel_slice(p) == first.components()).count();
        assert!(copies >= 4);
        for p in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(up.pixel(&p), first);
        }
    }

    #[test]
    fn construction_validates_sizes() {
        assert!(GeometricImage::new(3, scalar_spec(), vec![0.0; 8]).is_err());
        let t = GeometricTensor::scalar(2, Parity::Pos, 1.0);
        let v = GeometricTensor::vector(Parity::Pos, vec![1.0, 2.0]).unwrap();
        assert!(GeometricImage::from_pixels(1, std::slice::from_ref(&t)).is_ok());
        assert!(GeometricImage::from_pixels(2, &[t.clone(), t.clone(), t.clone(), v]).is_err());
        assert!(GeometricImage::from_pixels(2, &[t]).is_err());
    }
}
