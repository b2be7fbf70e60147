use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A power series in `t` truncated after `t^order`, with exact rational
/// coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct IntegerSeries {
    coeffs: Vec<BigRational>,
}

impl IntegerSeries {
    pub fn zero(order: usize) -> Self {
        IntegerSeries { coeffs: vec![BigRational::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = IntegerSeries::zero(order);
        s.coeffs[0] = BigRational::one();
        s
    }

    /// Builds a series from integer coefficients, padding or truncating to
    /// `order`.
    pub fn from_integers(order: usize, coeffs: &[i64]) -> Self {
        let mut s = IntegerSeries::zero(order);
        for (slot, &c) in s.coeffs.iter_mut().zip(coeffs) {
            *slot = BigRational::from_integer(BigInt::from(c));
        }
        s
    }

    /// `1 + sign * t^power`.
    pub fn binomial(order: usize, sign: i64, power: usize) -> Self {
        let mut s = IntegerSeries::one(order);
        if power <= order {
            s.coeffs[power] += BigRational::from_integer(BigInt::from(sign));
        }
        s
    }

    /// `1 / (1 + sign * t^power)^exponent`, expanded directly from the
    /// generalized binomial theorem.
    pub fn reciprocal_binomial_power(order: usize, sign: i64, power: usize, exponent: u32) -> Self {
        assert!(power >= 1, "power must be positive");
        let mut s = IntegerSeries::zero(order);
        // 1/(1 - x)^b = sum_j C(b + j - 1, j) x^j with x = -sign * t^power.
        let x_sign = BigInt::from(-sign);
        let mut j = 0usize;
        while j * power <= order {
            let c = if exponent == 0 {
                if j == 0 {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            } else {
                binomial(exponent as u64 + j as u64 - 1, j as u64)
            };
            s.coeffs[j * power] = BigRational::from_integer(c * x_sign.pow(j as u32));
            j += 1;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, power: usize) -> &BigRational {
        &self.coeffs[power]
    }

    /// The coefficient of `t^power` when it is an integer.
    pub fn integer_coefficient(&self, power: usize) -> Option<BigInt> {
        let c = &self.coeffs[power];
        c.is_integer().then(|| c.to_integer())
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> IntegerSeries {
        let mut s = IntegerSeries::zero(order);
        for (slot, c) in s.coeffs.iter_mut().zip(&self.coeffs) {
            *slot = c.clone();
        }
        s
    }

    fn common_order(&self, other: &IntegerSeries) -> usize {
        self.order().min(other.order())
    }

    pub fn add(&self, other: &IntegerSeries) -> IntegerSeries {
        let order = self.common_order(other);
        IntegerSeries { coeffs: (0..=order).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect() }
    }

    pub fn mul(&self, other: &IntegerSeries) -> IntegerSeries {
        let order = self.common_order(other);
        let mut out = IntegerSeries::zero(order);
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> IntegerSeries {
        IntegerSeries { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    /// Multiplicative inverse; fails when the constant term is zero.
    pub fn reciprocal(&self) -> Result<IntegerSeries> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::SeriesNotInvertible);
        }
        let inv0 = a0.recip();
        let order = self.order();
        let mut out = IntegerSeries::zero(order);
        out.coeffs[0] = inv0.clone();
        for n in 1..=order {
            let mut acc = BigRational::zero();
            for i in 1..=n {
                acc += &self.coeffs[i] * &out.coeffs[n - i];
            }
            out.coeffs[n] = -(&inv0 * acc);
        }
        Ok(out)
    }
}

impl fmt::Debug for IntegerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().enumerate().map(|(i, c)| format!("{c}*t^{i}")).collect();
        write!(f, "{} + O(t^{})", terms.join(" + "), self.coeffs.len())
    }
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// Converts a non-negative integer to `u64` when it fits.
pub fn to_u64(x: &BigInt) -> Option<u64> {
    if x.is_negative() {
        None
    } else {
        x.to_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(x: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(x))
    }

    #[test]
    fn stars_and_bars() {
        let s = IntegerSeries::reciprocal_binomial_power(10, -1, 1, 2);
        for l in 0..=10 {
            assert_eq!(s.coefficient(l), &int(l as i64 + 1));
        }
        let direct = IntegerSeries::binomial(10, -1, 1).mul(&IntegerSeries::binomial(10, -1, 1)).reciprocal().unwrap();
        assert_eq!(direct, s);
    }

    #[test]
    fn one_minus_t_times_its_reciprocal() {
        let a = IntegerSeries::binomial(6, -1, 1);
        let prod = a.mul(&a.reciprocal().unwrap());
        assert_eq!(prod, IntegerSeries::one(6));
    }

    #[test]
    fn binomial_identity_for_eighteen_factors() {
        let s = IntegerSeries::reciprocal_binomial_power(4, -1, 1, 18);
        assert_eq!(s.integer_coefficient(2).unwrap(), BigInt::from(171));
        assert_eq!(binomial(19, 2), BigInt::from(171));
    }

    #[test]
    fn reciprocal_of_one_plus_t_squared_power() {
        let direct = IntegerSeries::reciprocal_binomial_power(9, -1, 2, 3);
        let mut base = IntegerSeries::one(9);
        for _ in 0..3 {
            base = base.mul(&IntegerSeries::binomial(9, -1, 2));
        }
        assert_eq!(base.reciprocal().unwrap(), direct);
        let plus = IntegerSeries::reciprocal_binomial_power(9, 1, 1, 2);
        let plus_direct = IntegerSeries::binomial(9, 1, 1).mul(&IntegerSeries::binomial(9, 1, 1)).reciprocal().unwrap();
        assert_eq!(plus, plus_direct);
    }

    #[test]
    fn zero_constant_term_is_not_invertible() {
        let s = IntegerSeries::from_integers(3, &[0, 1, 2]);
        assert!(matches!(s.reciprocal(), Err(Error::SeriesNotInvertible)));
    }

    #[test]
    fn arithmetic_is_exact_and_commutative() {
        let a = IntegerSeries::from_integers(5, &[3, -1, 4, 1, -5, 9]);
        let b = IntegerSeries::from_integers(5, &[2, 7, 1, 8, 2, 8]);
        let c = IntegerSeries::from_integers(5, &[1, 4, 1, 4, 2, 1]);
        assert_eq!(a.mul(&b), b.mul(&a));
        assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        assert_eq!(a.add(&b), b.add(&a));
        assert_eq!(a.truncate(2).order(), 2);
        let half = a.reciprocal().unwrap();
        assert_eq!(half.coefficient(0), &BigRational::new(BigInt::from(1), BigInt::from(3)));
    }
}
