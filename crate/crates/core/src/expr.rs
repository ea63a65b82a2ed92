//! Set expressions and pointwise membership.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::{Branch, Error, IntervalScheme};

/// A symbolic subset of `{1, 2, 3, ...}`.
///
/// Cheap to clone. Values are only built through the validating
/// constructors, so every tree satisfies the invariants listed on [`Node`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetExpr(Arc<Node>);

/// One level of a [`SetExpr`] tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Empty,
    Full,
    /// Strictly increasing, all elements `>= 1`.
    Finite(Vec<u64>),
    /// `{a, a+d, a+2d, ...}` with `a, d >= 1`.
    Ap { a: u64, d: u64 },
    /// Union of the scheme intervals `I_m` for `m` in `index`.
    Blocks { scheme: IntervalScheme, index: SetExpr },
    /// `{stride * code(x|n) : n >= 1}`, see [`Branch::code`].
    Codes { branch: Branch, stride: u64 },
    Union(SetExpr, SetExpr),
    Inter(SetExpr, SetExpr),
    Diff(SetExpr, SetExpr),
    Complement(SetExpr),
    /// `(inner + k) ∩ ℕ`.
    Translate(SetExpr, i64),
}

impl SetExpr {
    fn wrap(n: Node) -> Self {
        SetExpr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn empty() -> Self {
        Self::wrap(Node::Empty)
    }

    pub fn full() -> Self {
        Self::wrap(Node::Full)
    }

    pub fn finite(elements: Vec<u64>) -> Result<Self, Error> {
        if elements.first() == Some(&0) || elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Unsorted);
        }
        Ok(Self::wrap(Node::Finite(elements)))
    }

    /// `{lo, ..., hi}`; empty when `hi < lo`.
    pub fn range(lo: u64, hi: u64) -> Result<Self, Error> {
        if lo == 0 {
            return Err(Error::Range("elements start at 1"));
        }
        Self::finite((lo..=hi).collect())
    }

    pub fn ap(a: u64, d: u64) -> Result<Self, Error> {
        if a < 1 {
            return Err(Error::Range("progression start must be at least 1"));
        }
        if d < 1 {
            return Err(Error::Range("progression step must be at least 1"));
        }
        Ok(Self::wrap(Node::Ap { a, d }))
    }

    pub fn blocks(scheme: IntervalScheme, index: SetExpr) -> Self {
        Self::wrap(Node::Blocks { scheme, index })
    }

    pub fn codes(branch: Branch, stride: u64) -> Result<Self, Error> {
        if stride < 1 {
            return Err(Error::Range("code stride must be at least 1"));
        }
        Ok(Self::wrap(Node::Codes { branch, stride }))
    }

    pub fn union(a: SetExpr, b: SetExpr) -> Self {
        Self::wrap(Node::Union(a, b))
    }

    pub fn inter(a: SetExpr, b: SetExpr) -> Self {
        Self::wrap(Node::Inter(a, b))
    }

    pub fn diff(a: SetExpr, b: SetExpr) -> Self {
        Self::wrap(Node::Diff(a, b))
    }

    pub fn complement(a: SetExpr) -> Self {
        Self::wrap(Node::Complement(a))
    }

    /// `(inner + k) ∩ ℕ`, kept exactly as written.
    pub fn translate(inner: SetExpr, k: i64) -> Self {
        Self::wrap(Node::Translate(inner, k))
    }

    /// Like [`translate`](Self::translate) but fuses nested translates when
    /// that is exact (the inner shift is non-negative) and drops `k = 0`.
    pub fn shift(inner: SetExpr, k: i64) -> Self {
        if k == 0 {
            return inner;
        }
        if let Node::Translate(e, a) = inner.node() {
            if *a >= 0 {
                if let Some(s) = a.checked_add(k) {
                    return Self::shift(e.clone(), s);
                }
            }
        }
        Self::translate(inner, k)
    }

    /// Union of a non-empty list, left to right; the empty list gives `empty`.
    pub fn union_all<I: IntoIterator<Item = SetExpr>>(parts: I) -> Self {
        parts
            .into_iter()
            .reduce(SetExpr::union)
            .unwrap_or_else(SetExpr::empty)
    }

    /// Membership of `n`; always false for `n = 0`.
    pub fn member(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match self.node() {
            Node::Empty => false,
            Node::Full => true,
            Node::Finite(v) => v.binary_search(&n).is_ok(),
            Node::Ap { a, d } => n >= *a && (n - a) % d == 0,
            Node::Blocks { scheme, index } => scheme.locate(n).is_some_and(|m| index.member(m)),
            Node::Codes { branch, stride } => n % stride == 0 && branch.is_code(n / stride),
            Node::Union(a, b) => a.member(n) || b.member(n),
            Node::Inter(a, b) => a.member(n) && b.member(n),
            Node::Diff(a, b) => a.member(n) && !b.member(n),
            Node::Complement(a) => !a.member(n),
            Node::Translate(e, k) => {
                let m = n as i128 - *k as i128;
                m >= 1 && m <= u64::MAX as i128 && e.member(m as u64)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Blocks { index, .. } => index.size(),
            Node::Union(a, b) | Node::Inter(a, b) | Node::Diff(a, b) => a.size() + b.size(),
            Node::Complement(a) | Node::Translate(a, _) => a.size(),
            _ => 0,
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Empty => f.write_str("empty"),
            Node::Full => f.write_str("full"),
            Node::Finite(v) => {
                f.write_str("fin{")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("}")
            }
            Node::Ap { a, d } => write!(f, "ap({a},{d})"),
            Node::Blocks { scheme, index } => write!(f, "blocks({scheme}, {index})"),
            Node::Codes { branch, stride } => write!(f, "codes(\"{branch}\", {stride})"),
            Node::Union(a, b) => write!(f, "union({a}, {b})"),
            Node::Inter(a, b) => write!(f, "inter({a}, {b})"),
            Node::Diff(a, b) => write!(f, "diff({a}, {b})"),
            Node::Complement(a) => write!(f, "compl({a})"),
            Node::Translate(a, k) => write!(f, "shift({a}, {k})"),
        }
    }
}

impl fmt::Debug for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
