//! Convex piecewise-linear functions of one integer grid variable.

use num_traits::{One, Zero};

use crate::numeric::{int, lcm_of_denominators, Rational};

/// Piecewise-linear function with integer breakpoints and rational slopes.
///
/// `slopes[k]` holds on the segment between `breakpoints[k - 1]` and
/// `breakpoints[k]`; the first and last slopes extend to infinity. The
/// function is pinned by its value at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinearFn {
    breakpoints: Vec<i64>,
    slopes: Vec<Rational>,
    value_at_zero: Rational,
}

impl PiecewiseLinearFn {
    /// Breakpoints must be strictly increasing with one more slope than
    /// breakpoints. Redundant breakpoints are dropped.
    pub fn new(breakpoints: Vec<i64>, slopes: Vec<Rational>, value_at_zero: Rational) -> Self {
        assert_eq!(slopes.len(), breakpoints.len() + 1, "need one more slope than breakpoints");
        assert!(breakpoints.windows(2).all(|w| w[0] < w[1]), "breakpoints must increase");
        let mut f = Self { breakpoints, slopes, value_at_zero };
        f.simplify();
        f
    }

    pub fn constant(value: Rational) -> Self {
        Self::new(vec![], vec![Rational::zero()], value)
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    /// `|z - center|`
    pub fn abs_deviation(center: i64) -> Self {
        Self::new(
            vec![center],
            vec![-Rational::one(), Rational::one()],
            int(center.unsigned_abs() as i128),
        )
    }

    pub fn breakpoints(&self) -> &[i64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[Rational] {
        &self.slopes
    }

    pub fn value_at_zero(&self) -> Rational {
        self.value_at_zero
    }

    pub fn is_convex(&self) -> bool {
        self.slopes.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_constant(&self) -> bool {
        self.breakpoints.is_empty() && self.slopes[0].is_zero()
    }

    /// Slope on the unit interval `[t, t + 1]`.
    fn slope_right_of(&self, t: i64) -> Rational {
        self.slopes[self.breakpoints.partition_point(|&b| b <= t)]
    }

    pub fn eval(&self, z: i64) -> Rational {
        let (lo, hi) = if z >= 0 { (0, z) } else { (z, 0) };
        let mut integral = Rational::zero();
        for (k, slope) in self.slopes.iter().enumerate() {
            let seg_lo = if k == 0 { i64::MIN } else { self.breakpoints[k - 1] };
            let seg_hi = self.breakpoints.get(k).copied().unwrap_or(i64::MAX);
            let overlap = hi.min(seg_hi) - lo.max(seg_lo);
            if overlap > 0 {
                integral += slope * int(overlap as i128);
            }
        }
        if z >= 0 {
            self.value_at_zero + integral
        } else {
            self.value_at_zero - integral
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut merged: Vec<i64> = self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        merged.sort_unstable();
        merged.dedup();
        let mut slopes = Vec::with_capacity(merged.len() + 1);
        slopes.push(self.slopes[0] + other.slopes[0]);
        for &b in &merged {
            slopes.push(self.slope_right_of(b) + other.slope_right_of(b));
        }
        Self::new(merged, slopes, self.value_at_zero + other.value_at_zero)
    }

    pub fn scale(&self, factor: Rational) -> Self {
        Self::new(
            self.breakpoints.clone(),
            self.slopes.iter().map(|s| s * factor).collect(),
            self.value_at_zero * factor,
        )
    }

    /// `z -> f(-z)`
    pub fn mirror(&self) -> Self {
        Self::new(
            self.breakpoints.iter().rev().map(|b| -b).collect(),
            self.slopes.iter().rev().map(|s| -s).collect(),
            self.value_at_zero,
        )
    }

    /// Common denominator of the slopes and the anchor value: multiplying by
    /// it makes the function integer-valued on the integers.
    pub(crate) fn denominator(&self) -> i128 {
        lcm_of_denominators(self.slopes.iter().chain(std::iter::once(&self.value_at_zero)))
    }

    pub(crate) fn to_integer(&self, factor: i128) -> IntegerPwl {
        let factor = int(factor);
        let as_int = |r: Rational| {
            let scaled = r * factor;
            assert!(scaled.is_integer(), "factor does not clear denominators");
            scaled.to_integer()
        };
        IntegerPwl {
            breakpoints: self.breakpoints.clone(),
            slopes: self.slopes.iter().map(|&s| as_int(s)).collect(),
            value_at_zero: as_int(self.value_at_zero),
        }
    }

    fn simplify(&mut self) {
        let mut k = 0;
        while k < self.breakpoints.len() {
            if self.slopes[k] == self.slopes[k + 1] {
                self.breakpoints.remove(k);
                self.slopes.remove(k + 1);
            } else {
                k += 1;
            }
        }
    }
}

/// Integer-scaled copy used inside the solver.
#[derive(Clone, Debug)]
pub(crate) struct IntegerPwl {
    breakpoints: Vec<i64>,
    slopes: Vec<i128>,
    value_at_zero: i128,
}

impl IntegerPwl {
    pub(crate) fn eval(&self, z: i64) -> i128 {
        let (lo, hi) = if z >= 0 { (0, z) } else { (z, 0) };
        let mut integral = 0i128;
        for (k, slope) in self.slopes.iter().enumerate() {
            let seg_lo = if k == 0 { i64::MIN } else { self.breakpoints[k - 1] };
            let seg_hi = self.breakpoints.get(k).copied().unwrap_or(i64::MAX);
            let overlap = hi.min(seg_hi) - lo.max(seg_lo);
            if overlap > 0 {
                integral += slope * overlap as i128;
            }
        }
        if z >= 0 {
            self.value_at_zero + integral
        } else {
            self.value_at_zero - integral
        }
    }
}
