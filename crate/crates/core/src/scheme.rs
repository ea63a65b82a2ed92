//! Boundary sequences `k_1 < k_2 < ...` and the half-open intervals
//! `I_n = [k_n, k_{n+1})` they cut out of the naturals.

use core::fmt;

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::ToPrimitive;

use crate::Error;

/// A strictly increasing boundary sequence with an exact closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntervalScheme {
    /// `k_n = base^n + offset`.
    Geometric { base: u64, offset: u64 },
    /// `k_n = n^exponent`.
    Polynomial { exponent: u32 },
    /// `k_n = n(n+1)/2`.
    Triangular,
    /// `k_n = step * n`.
    Linear { step: u64 },
}

impl IntervalScheme {
    pub fn geometric(base: u64, offset: u64) -> Result<Self, Error> {
        if base < 2 {
            return Err(Error::Range("geometric base must be at least 2"));
        }
        Ok(IntervalScheme::Geometric { base, offset })
    }

    pub fn polynomial(exponent: u32) -> Result<Self, Error> {
        if exponent < 2 {
            return Err(Error::Range("polynomial exponent must be at least 2"));
        }
        Ok(IntervalScheme::Polynomial { exponent })
    }

    pub fn linear(step: u64) -> Result<Self, Error> {
        if step < 1 {
            return Err(Error::Range("linear step must be at least 1"));
        }
        Ok(IntervalScheme::Linear { step })
    }

    /// `I_n = (2^n, 2^{n+1}]`, written half-open as `[2^n + 1, 2^{n+1} + 1)`.
    pub const fn dyadic() -> Self {
        IntervalScheme::Geometric { base: 2, offset: 1 }
    }

    /// True exactly when `k_{n+1} - k_n` tends to infinity.
    pub fn gaps_diverge(&self) -> bool {
        !matches!(self, IntervalScheme::Linear { .. })
    }

    /// `k_n` at arbitrary precision.
    pub fn boundary(&self, n: u64) -> BigUint {
        match *self {
            IntervalScheme::Geometric { base, offset } => {
                BigUint::from(base).pow(n as u32) + BigUint::from(offset)
            }
            IntervalScheme::Polynomial { exponent } => BigUint::from(n).pow(exponent),
            IntervalScheme::Triangular => {
                let n = BigUint::from(n);
                (&n * (&n + 1u32)) >> 1usize
            }
            IntervalScheme::Linear { step } => BigUint::from(step) * n,
        }
    }

    /// `k_n` when it fits in a `u64`.
    pub fn boundary_u64(&self, n: u64) -> Option<u64> {
        match *self {
            IntervalScheme::Geometric { base, offset } => {
                let n = u32::try_from(n).ok()?;
                base.checked_pow(n)?.checked_add(offset)
            }
            IntervalScheme::Polynomial { exponent } => n.checked_pow(exponent),
            IntervalScheme::Triangular => {
                let v = (n as u128) * (n as u128 + 1) / 2;
                u64::try_from(v).ok()
            }
            IntervalScheme::Linear { step } => step.checked_mul(n),
        }
    }

    /// `[k_n, k_{n+1})` as exact bounds.
    pub fn interval_of(&self, n: u64) -> Result<(BigUint, BigUint), Error> {
        if n == 0 {
            return Err(Error::Range("interval index starts at 1"));
        }
        Ok((self.boundary(n), self.boundary(n + 1)))
    }

    /// `|I_n| = k_{n+1} - k_n` when it fits.
    pub fn gap_u64(&self, n: u64) -> Option<u64> {
        let lo = self.boundary_u64(n)?;
        let hi = self.boundary_u64(n + 1)?;
        Some(hi - lo)
    }

    /// `|I_n|` at arbitrary precision.
    pub fn gap(&self, n: u64) -> BigUint {
        self.boundary(n + 1) - self.boundary(n)
    }

    /// The index `n` with `x ∈ I_n`, or `None` when `x < k_1`.
    pub fn locate(&self, x: u64) -> Option<u64> {
        if x < self.boundary_u64(1)? {
            return None;
        }
        let mut n = match *self {
            IntervalScheme::Geometric { base, offset } => {
                let mut n = 0u64;
                let mut p = 1u64;
                while let Some(next) = p.checked_mul(base) {
                    if next.saturating_add(offset) > x {
                        break;
                    }
                    p = next;
                    n += 1;
                }
                return Some(n.max(1));
            }
            IntervalScheme::Polynomial { exponent } => x.nth_root(exponent),
            IntervalScheme::Triangular => {
                // n(n+1)/2 <= x  <=>  n <= (sqrt(8x+1)-1)/2
                let r = (8u128 * x as u128 + 1).sqrt();
                ((r - 1) / 2) as u64
            }
            IntervalScheme::Linear { step } => x / step,
        };
        while self.boundary_u64(n).map_or(true, |k| k > x) {
            n -= 1;
        }
        while self.boundary_u64(n + 1).is_some_and(|k| k <= x) {
            n += 1;
        }
        Some(n)
    }

    /// Arbitrary-precision [`locate`](Self::locate). Fails when the index
    /// itself would not fit in a `u64`.
    pub fn locate_big(&self, x: &BigUint) -> Option<Option<u64>> {
        if let Some(small) = x.to_u64() {
            return Some(self.locate(small));
        }
        let mut n = match *self {
            IntervalScheme::Geometric { base, .. } => {
                let bits = x.bits();
                let per = 64 - u64::from(base.leading_zeros()) - 1;
                (bits / per.max(1)).max(1)
            }
            IntervalScheme::Polynomial { exponent } => x.nth_root(exponent).to_u64()?,
            IntervalScheme::Triangular => ((x << 3usize) + 1u32).sqrt().to_u64()? / 2,
            IntervalScheme::Linear { step } => (x / step).to_u64()?,
        };
        n = n.max(1);
        while n > 1 && self.boundary(n) > *x {
            n -= 1;
        }
        while self.boundary(n + 1) <= *x {
            n += 1;
        }
        Some(Some(n))
    }

    /// `k_n mod modulus` without materialising `k_n`.
    pub fn boundary_mod(&self, n: u64, modulus: u64) -> u64 {
        debug_assert!(modulus > 0);
        let m = modulus as u128;
        match *self {
            IntervalScheme::Geometric { base, offset } => {
                (pow_mod(base, n, modulus) as u128 + offset as u128 % m) as u64 % modulus
            }
            IntervalScheme::Polynomial { exponent } => pow_mod(n % modulus, exponent as u64, modulus),
            IntervalScheme::Triangular => {
                let r = (n as u128) % (2 * m);
                ((r * (r + 1) / 2) % m) as u64
            }
            IntervalScheme::Linear { step } => ((step as u128 % m) * (n as u128 % m) % m) as u64,
        }
    }

    /// Least `N` such that `|I_n| > |k|` for every `n > N`.
    ///
    /// Gaps are non-decreasing for every variant, so this is the largest `n`
    /// with `|I_n| <= |k|`, or 0 when there is none.
    pub fn shift_threshold(&self, k: i64) -> u64 {
        let k = k.unsigned_abs();
        match *self {
            IntervalScheme::Geometric { base, .. } => {
                // (b-1) b^n <= k
                let mut n = 0u64;
                let mut g = base - 1;
                while let Some(next) = g.checked_mul(base) {
                    if next > k {
                        break;
                    }
                    g = next;
                    n += 1;
                }
                n
            }
            IntervalScheme::Triangular => k.saturating_sub(1),
            IntervalScheme::Polynomial { exponent } => {
                // (n+1)^e - n^e >= e n^{e-1}, so n <= (k/e)^{1/(e-1)}.
                let mut n = (k / u64::from(exponent)).nth_root(exponent - 1);
                while n > 0 && self.gap_u64(n).map_or(true, |g| g > k) {
                    n -= 1;
                }
                while self.gap_u64(n + 1).is_some_and(|g| g <= k) {
                    n += 1;
                }
                n
            }
            IntervalScheme::Linear { step } => {
                if step <= k {
                    u64::MAX
                } else {
                    0
                }
            }
        }
    }

    /// The asymptotic growth exponent `e` of `k_n ~ n^e`, for the
    /// polynomial-type schemes.
    pub(crate) fn poly_degree(&self) -> Option<u32> {
        match *self {
            IntervalScheme::Polynomial { exponent } => Some(exponent),
            IntervalScheme::Triangular => Some(2),
            _ => None,
        }
    }

    /// Smallest `n >= 1` with `|I_m| >= len` for every `m >= n`.
    pub(crate) fn first_block_with_gap(&self, len: u64) -> Option<u64> {
        if !self.gaps_diverge() {
            return None;
        }
        let t = self.shift_threshold(len.saturating_sub(1) as i64);
        Some(t + 1)
    }
}

pub(crate) fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

impl fmt::Display for IntervalScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            IntervalScheme::Geometric { base, offset: 0 } => write!(f, "geo({base})"),
            IntervalScheme::Geometric { base, offset } => write!(f, "geo({base},{offset})"),
            IntervalScheme::Polynomial { exponent } => write!(f, "poly({exponent})"),
            IntervalScheme::Triangular => f.write_str("tri"),
            IntervalScheme::Linear { step } => write!(f, "lin({step})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_examples() {
        let geo = IntervalScheme::dyadic();
        assert_eq!(geo.interval_of(2).unwrap(), (5u32.into(), 9u32.into()));
        assert_eq!(
            IntervalScheme::Triangular.interval_of(3).unwrap(),
            (6u32.into(), 10u32.into())
        );
        let lin = IntervalScheme::linear(5).unwrap();
        assert_eq!(lin.interval_of(1).unwrap(), (5u32.into(), 10u32.into()));
        assert!(geo.interval_of(0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(IntervalScheme::geometric(1, 0).is_err());
        assert!(IntervalScheme::polynomial(1).is_err());
        assert!(IntervalScheme::linear(0).is_err());
        assert!(!IntervalScheme::linear(3).unwrap().gaps_diverge());
        assert!(IntervalScheme::Triangular.gaps_diverge());
    }

    fn schemes() -> [IntervalScheme; 6] {
        [
            IntervalScheme::dyadic(),
            IntervalScheme::Geometric { base: 3, offset: 0 },
            IntervalScheme::Polynomial { exponent: 2 },
            IntervalScheme::Polynomial { exponent: 3 },
            IntervalScheme::Triangular,
            IntervalScheme::Linear { step: 7 },
        ]
    }

    #[test]
    fn locate_agrees_with_boundaries() {
        for s in schemes() {
            let k1 = s.boundary_u64(1).unwrap();
            for x in 1..5000u64 {
                match s.locate(x) {
                    None => assert!(x < k1, "{s} {x}"),
                    Some(n) => {
                        assert!(s.boundary_u64(n).unwrap() <= x, "{s} {x}");
                        assert!(s.boundary_u64(n + 1).unwrap() > x, "{s} {x}");
                    }
                }
            }
        }
    }

    #[test]
    fn locate_big_matches_small_and_scales() {
        let s = IntervalScheme::dyadic();
        let k = s.boundary(300);
        assert_eq!(s.locate_big(&k), Some(Some(300)));
        assert_eq!(s.locate_big(&(&k - 1u32)), Some(Some(299)));
        let t = IntervalScheme::Triangular;
        let k = t.boundary(1u64 << 40);
        assert_eq!(t.locate_big(&(k << 8usize)).map(|n| n.is_some()), Some(true));
    }

    #[test]
    fn intervals_tile() {
        for s in schemes() {
            for n in 1..40 {
                let (_, hi) = s.interval_of(n).unwrap();
                let (lo, _) = s.interval_of(n + 1).unwrap();
                assert_eq!(hi, lo);
            }
        }
    }

    #[test]
    fn boundary_mod_matches() {
        for s in schemes() {
            for n in 1..30 {
                for m in [1u64, 2, 6, 7, 64] {
                    let exact = s.boundary(n) % m;
                    assert_eq!(BigUint::from(s.boundary_mod(n, m)), exact, "{s} {n} {m}");
                }
            }
        }
    }

    #[test]
    fn shift_threshold_is_least() {
        assert_eq!(IntervalScheme::dyadic().shift_threshold(5), 2);
        assert_eq!(IntervalScheme::dyadic().shift_threshold(0), 0);
        for s in &schemes()[..5] {
            for k in -40i64..40 {
                let n = s.shift_threshold(k);
                for m in n + 1..n + 30 {
                    assert!(s.gap_u64(m).unwrap() > k.unsigned_abs());
                }
                if n > 0 {
                    assert!(s.gap_u64(n).unwrap() <= k.unsigned_abs());
                }
            }
        }
    }
}
