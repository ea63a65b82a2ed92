//! Run-length traversal: from any position, how far does membership stay
//! constant. Gives enumeration and a counting fallback that agrees with
//! `member` by construction.

use alloc::vec::Vec;

use crate::{Error, Node, SetExpr};

/// Work limits for procedures that may enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of elements (or runs) an enumeration may visit.
    pub elements: u64,
}

impl Budget {
    pub const DEFAULT_ELEMENTS: u64 = 1_000_000;

    pub const fn new(elements: u64) -> Self {
        Budget { elements }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(Self::DEFAULT_ELEMENTS)
    }
}

/// Membership at `n >= 1` and an `end > n` such that membership is constant
/// on `[n, end)`. `None` means constant forever.
pub(crate) fn run_at(e: &SetExpr, n: u64) -> (bool, Option<u64>) {
    debug_assert!(n >= 1);
    match e.node() {
        Node::Empty => (false, None),
        Node::Full => (true, None),
        Node::Finite(v) => match v.binary_search(&n) {
            Ok(i) => {
                let mut j = i;
                while j + 1 < v.len() && v[j + 1] == v[j] + 1 {
                    j += 1;
                }
                (true, Some(v[j] + 1))
            }
            Err(i) => (false, v.get(i).copied()),
        },
        Node::Ap { a, d } => {
            if n < *a {
                (false, Some(*a))
            } else if *d == 1 {
                (true, None)
            } else {
                let r = (n - a) % d;
                if r == 0 {
                    (true, Some(n + 1))
                } else {
                    (false, n.checked_add(d - r))
                }
            }
        }
        Node::Blocks { scheme, index } => match scheme.locate(n) {
            None => (false, scheme.boundary_u64(1)),
            Some(m) => {
                let (b, end) = run_at(index, m);
                (b, end.and_then(|m2| scheme.boundary_u64(m2)))
            }
        },
        Node::Codes { branch, stride } => {
            if n % stride == 0 && branch.is_code(n / stride) {
                return (true, Some(n + 1));
            }
            let q = n.div_ceil(*stride);
            let next = branch.next_code(q).and_then(|c| c.checked_mul(*stride));
            match next {
                Some(x) if x == n => (false, Some(n + 1)),
                other => (false, other),
            }
        }
        Node::Union(a, b) => {
            let ra = run_at(a, n);
            let rb = run_at(b, n);
            combine_or(ra, rb)
        }
        Node::Inter(a, b) => {
            let (va, ea) = run_at(a, n);
            let (vb, eb) = run_at(b, n);
            let (v, e) = combine_or((!va, ea), (!vb, eb));
            (!v, e)
        }
        Node::Diff(a, b) => {
            let (va, ea) = run_at(a, n);
            let (vb, eb) = run_at(b, n);
            let (v, e) = combine_or((!va, ea), (vb, eb));
            (!v, e)
        }
        Node::Complement(a) => {
            let (v, e) = run_at(a, n);
            (!v, e)
        }
        Node::Translate(inner, k) => {
            let m = n as i128 - *k as i128;
            if m < 1 {
                return (false, Some((*k as u64) + 1));
            }
            if m > u64::MAX as i128 {
                return (false, None);
            }
            let (v, e) = run_at(inner, m as u64);
            let e = e.and_then(|x| {
                let y = x as i128 + *k as i128;
                u64::try_from(y).ok()
            });
            (v, e)
        }
    }
}

fn combine_or(a: (bool, Option<u64>), b: (bool, Option<u64>)) -> (bool, Option<u64>) {
    let max = |x: Option<u64>, y: Option<u64>| match (x, y) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    };
    let min = |x: Option<u64>, y: Option<u64>| match (x, y) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    };
    match (a.0, b.0) {
        (true, true) => (true, max(a.1, b.1)),
        (true, false) => (true, a.1),
        (false, true) => (true, b.1),
        (false, false) => (false, min(a.1, b.1)),
    }
}

/// Calls `f(start, end, member)` for consecutive runs covering `[lo, hi]`,
/// clipped to that range. Fails once more than `budget.elements` runs
/// have been visited.
pub fn for_each_run(
    e: &SetExpr,
    lo: u64,
    hi: u64,
    budget: Budget,
    mut f: impl FnMut(u64, u64, bool),
) -> Result<(), Error> {
    let mut n = lo.max(1);
    let mut steps = 0u64;
    while n <= hi {
        steps += 1;
        if steps > budget.elements {
            return Err(Error::Budget {
                limit: budget.elements,
            });
        }
        let (v, end) = run_at(e, n);
        let stop = end.map_or(hi, |x| (x - 1).min(hi));
        f(n, stop, v);
        if stop == u64::MAX {
            break;
        }
        n = stop + 1;
    }
    Ok(())
}

/// All members `<= limit` in increasing order.
pub fn enumerate(e: &SetExpr, limit: u64, budget: Budget) -> Result<Vec<u64>, Error> {
    let mut out = Vec::new();
    let mut over = false;
    for_each_run(e, 1, limit, budget, |a, b, v| {
        if v && !over {
            if (out.len() as u64).saturating_add(b - a + 1) > budget.elements {
                over = true;
            } else {
                out.extend(a..=b);
            }
        }
    })?;
    if over {
        return Err(Error::Budget {
            limit: budget.elements,
        });
    }
    Ok(out)
}
