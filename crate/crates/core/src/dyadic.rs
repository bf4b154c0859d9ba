//! Exact dyadic rationals `num / 2^exp`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A dyadic rational kept in lowest terms: `num` is odd unless `exp == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic {
            num: n as i128,
            exp: 0,
        }
    }

    /// `2^{-k}`.
    pub fn inv_pow2(k: u32) -> Self {
        Dyadic { num: 1, exp: k }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn abs(self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn half(self) -> Self {
        Dyadic::new(self.num, self.exp + 1)
    }

    pub fn mul_int(self, k: i64) -> Self {
        Dyadic::new(self.num * k as i128, self.exp)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (-(self.exp as f64)).exp2()
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
    }

    fn aligned(self, other: Self) -> (i128, i128, u32) {
        let exp = self.exp.max(other.exp);
        let a = self.num << (exp - self.exp);
        let b = other.num << (exp - other.exp);
        (a, b, exp)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(rhs);
        Dyadic::new(a + b, exp)
    }
}

impl AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Dyadic) {
        *self = *self + rhs;
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::ZERO, Add::add)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}
