use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Exact half-integer, stored as twice its value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// Iterates `-self, -self+1, ..., self`.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = HalfInt> + Clone {
        let l = self.0;
        (0..=l.max(-1)).map(move |i| HalfInt(2 * i - l))
    }

    /// Number of projections, `2*self + 1`.
    pub fn multiplicity(self) -> usize {
        (self.0 + 1).max(0) as usize
    }

    /// Position of `m` in `projections()`.
    pub fn offset(self, m: HalfInt) -> usize {
        ((m.0 + self.0) / 2) as usize
    }

    /// True if `m` lies in `-self..=self` with matching parity.
    pub fn admits(self, m: HalfInt) -> bool {
        m.0.abs() <= self.0 && (self.0 - m.0) % 2 == 0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl AddAssign for HalfInt {
    fn add_assign(&mut self, rhs: HalfInt) {
        self.0 += rhs.0;
    }
}

impl SubAssign for HalfInt {
    fn sub_assign(&mut self, rhs: HalfInt) {
        self.0 -= rhs.0;
    }
}

impl std::iter::Sum for HalfInt {
    fn sum<I: Iterator<Item = HalfInt>>(iter: I) -> HalfInt {
        HalfInt(iter.map(|h| h.0).sum())
    }
}

impl<'a> std::iter::Sum<&'a HalfInt> for HalfInt {
    fn sum<I: Iterator<Item = &'a HalfInt>>(iter: I) -> HalfInt {
        HalfInt(iter.map(|h| h.0).sum())
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl fmt::Debug for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a half-integer: {0:?}")]
pub struct ParseHalfIntError(pub String);

impl FromStr for HalfInt {
    type Err = ParseHalfIntError;

    /// Accepts `3`, `-1/2`, `3/2` and `1.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let err = || ParseHalfIntError(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| err())?;
            return match den.trim() {
                "1" => Ok(HalfInt::from_int(num)),
                "2" => Ok(HalfInt(num)),
                _ => Err(err()),
            };
        }
        if let Ok(n) = s.parse::<i32>() {
            return Ok(HalfInt::from_int(n));
        }
        let x: f64 = s.parse().map_err(|_| err())?;
        let twice = (2.0 * x).round();
        if (twice - 2.0 * x).abs() > 1e-12 || twice.abs() > i32::MAX as f64 {
            return Err(err());
        }
        Ok(HalfInt(twice as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("3/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(3));
        assert_eq!("1.5".parse::<HalfInt>().unwrap(), HalfInt::from_twice(3));
        assert_eq!("-2".parse::<HalfInt>().unwrap(), HalfInt::from_int(-2));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("0.25".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-3/2");
        assert_eq!(HalfInt::from_int(4).to_string(), "4");
    }

    #[test]
    fn projections_cover_range() {
        let l = HalfInt::from_twice(3);
        let ms: Vec<i32> = l.projections().map(HalfInt::twice).collect();
        assert_eq!(ms, vec![-3, -1, 1, 3]);
        assert_eq!(l.multiplicity(), 4);
        assert_eq!(l.offset(HalfInt::from_twice(1)), 2);
        assert!(l.admits(HalfInt::from_twice(-1)));
        assert!(!l.admits(HalfInt::from_twice(2)));
    }

    #[test]
    fn sum_parity_is_xor() {
        let a = HalfInt::HALF;
        let b = HalfInt::from_twice(3);
        assert!((a + b).is_integer());
        assert!(!(a + HalfInt::ONE).is_integer());
    }
}
