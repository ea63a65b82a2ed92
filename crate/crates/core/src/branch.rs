//! Eventually periodic infinite binary sequences and their prefix codes.
//!
//! A branch `x` is read left to right, `x_1 x_2 x_3 ...`. The code of the
//! length-`n` prefix `s` is `2^n + val(s)`, i.e. the binary numeral `1s`,
//! so codes of distinct finite strings never collide and the codes of a
//! branch form a set with exactly one element in every dyadic range
//! `[2^n, 2^{n+1})`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;

use crate::Error;

/// An eventually periodic bit sequence `head cycle cycle cycle ...` kept in
/// canonical form (shortest head, primitive cycle).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Branch {
    head: Vec<bool>,
    cycle: Vec<bool>,
}

impl Branch {
    pub fn new(head: Vec<bool>, cycle: Vec<bool>) -> Result<Self, Error> {
        if cycle.is_empty() {
            return Err(Error::InvalidBranch("cycle must be non-empty"));
        }
        let mut b = Branch { head, cycle };
        b.canonicalize();
        Ok(b)
    }

    pub fn constant(bit: bool) -> Self {
        Branch {
            head: Vec::new(),
            cycle: alloc::vec![bit],
        }
    }

    fn canonicalize(&mut self) {
        let len = self.cycle.len();
        if let Some(p) = (1..=len)
            .find(|&p| len % p == 0 && (p..len).all(|i| self.cycle[i] == self.cycle[i - p]))
        {
            self.cycle.truncate(p);
        }
        while let Some(&last) = self.head.last() {
            if last != *self.cycle.last().unwrap() {
                break;
            }
            self.head.pop();
            self.cycle.rotate_right(1);
        }
    }

    pub fn head(&self) -> &[bool] {
        &self.head
    }

    pub fn cycle(&self) -> &[bool] {
        &self.cycle
    }

    /// Bit at 1-based position `i`.
    pub fn bit(&self, i: u64) -> bool {
        debug_assert!(i >= 1);
        let h = self.head.len() as u64;
        if i <= h {
            self.head[(i - 1) as usize]
        } else {
            self.cycle[((i - h - 1) % self.cycle.len() as u64) as usize]
        }
    }

    /// Code of the length-`len` prefix, when it fits in a `u64`.
    pub fn code(&self, len: u64) -> Option<u64> {
        if len > 63 {
            return None;
        }
        let mut c = 1u64;
        for i in 1..=len {
            c = 2 * c + self.bit(i) as u64;
        }
        Some(c)
    }

    pub fn code_big(&self, len: u64) -> BigUint {
        let mut c = BigUint::from(1u32);
        for i in 1..=len {
            c <<= 1usize;
            if self.bit(i) {
                c += 1u32;
            }
        }
        c
    }

    /// True when `m` is the code of some non-empty prefix.
    pub fn is_code(&self, m: u64) -> bool {
        if m < 2 {
            return false;
        }
        let len = 63 - u64::from(m.leading_zeros());
        self.code(len) == Some(m)
    }

    /// Smallest code `>= m`, if one fits in a `u64`.
    pub fn next_code(&self, m: u64) -> Option<u64> {
        let m = m.max(2);
        let len = 63 - u64::from(m.leading_zeros());
        let c = self.code(len)?;
        if c >= m {
            Some(c)
        } else {
            self.code(len + 1)
        }
    }

    /// Length of the longest common prefix, or `None` for equal branches.
    pub fn common_prefix_len(&self, other: &Branch) -> Option<u64> {
        if self == other {
            return None;
        }
        // Distinct eventually periodic sequences differ before this bound.
        let bound = (self.head.len().max(other.head.len())
            + self.cycle.len() * other.cycle.len()) as u64
            + 1;
        (1..=bound).find(|&i| self.bit(i) != other.bit(i)).map(|i| i - 1)
    }

    /// Every canonical branch with `|head| + |cycle| <= max_len`, in a fixed
    /// deterministic order (by total length, then head length, then bits).
    pub fn canonical_up_to(max_len: usize) -> Vec<Branch> {
        let mut out = Vec::new();
        for total in 1..=max_len {
            for h in 0..total {
                for bits in 0u64..(1u64 << total) {
                    let seq: Vec<bool> = (0..total).map(|i| bits >> (total - 1 - i) & 1 == 1).collect();
                    let head = seq[..h].to_vec();
                    let cycle = seq[h..].to_vec();
                    let b = Branch::new(head.clone(), cycle.clone()).unwrap();
                    if b.head == head && b.cycle == cycle {
                        out.push(b);
                    }
                }
            }
        }
        out
    }
}

fn bits_to_str(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", bits_to_str(&self.head), bits_to_str(&self.cycle))
    }
}

impl FromStr for Branch {
    type Err = Error;

    /// Parses `head|cycle`, e.g. `01|101`; the head may be empty.
    fn from_str(s: &str) -> Result<Self, Error> {
        let (head, cycle) = s
            .split_once('|')
            .ok_or(Error::InvalidBranch("expected head|cycle"))?;
        let parse = |t: &str| -> Result<Vec<bool>, Error> {
            t.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::InvalidBranch("bits must be 0 or 1")),
                })
                .collect()
        };
        Branch::new(parse(head)?, parse(cycle)?)
    }
}
