//! Numeric abstract domains: intervals and convex polyhedra over integer
//! dimensions, behind one interface.

mod dim;
mod fm;
mod interval;
mod linear;
mod lp;
mod polyhedra;
mod scalar;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug};

pub use dim::{DimKey, Dimension, Frame, Name};
pub use interval::Intervals;
pub use linear::{Bounds, Canon, CmpOp, Constraint, Guard, LinExpr, NumExpr, Rel};
pub use polyhedra::Polyhedron;
pub use scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("unknown dimension {0}")]
    UnknownDim(String),
    #[error("dimension {0} present in both operands")]
    Overlap(String),
    #[error("operands have different dimensions")]
    DimMismatch,
    #[error("right-hand side of a strong update mentions {0}")]
    SelfReference(String),
    #[error("duplicating update needs a dimension on the right-hand side")]
    DupNeedsDim,
}

pub type DResult<T> = Result<T, DomainError>;

/// The domain a state belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainKind {
    Int,
    Pol,
}

/// Result of reading a guard in a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Interpreted<K, T> {
    /// No concrete state satisfies the guard.
    Unsat,
    /// Representable consequences of the guard (possibly none).
    Constraints(Vec<Constraint<K, T>>),
}

/// How [`update`] writes a dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    /// Replace the value.
    Strong,
    /// Join old and new values.
    Weak,
    /// Replace the value by an independent copy of another dimension.
    StrongDup,
    /// Join the old value with an independent copy of another dimension.
    WeakDup,
}

/// Direction of [`project`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectMode {
    /// Remove the listed dimensions.
    Away,
    /// Keep only the listed dimensions.
    To,
}

/// Operations every numeric domain provides. States are immutable values.
pub trait NumericDomain: Clone + Debug + PartialEq + Send + Sync + Sized + 'static {
    type Dim: DimKey;
    type Scalar: Scalar;

    const KIND: DomainKind;

    /// Unconstrained state over `dims`.
    fn top(dims: impl IntoIterator<Item = Self::Dim>) -> Self;
    /// Empty state over `dims`.
    fn bottom(dims: impl IntoIterator<Item = Self::Dim>) -> Self;
    fn is_bottom(&self) -> bool;
    fn dims(&self) -> BTreeSet<Self::Dim>;
    fn has_dim(&self, d: &Self::Dim) -> bool;
    /// Stored constraints in canonical sorted form. Empty for bottom.
    fn constraints(&self) -> Vec<Constraint<Self::Dim, Self::Scalar>>;

    /// Representable consequences of `g` in the current state.
    fn interp(&self, g: &Guard<Self::Dim, Self::Scalar>) -> DResult<Interpreted<Self::Dim, Self::Scalar>>;
    /// Conjoins constraints. Multi-dimensional constraints on intervals are
    /// reduced to per-dimension bounds.
    fn add_constraints(&self, cs: &[Constraint<Self::Dim, Self::Scalar>]) -> DResult<Self>;
    fn project_away(&self, ds: &[Self::Dim]) -> DResult<Self>;
    fn project_to(&self, keep: &BTreeSet<Self::Dim>) -> Self;
    /// Adds unconstrained dimensions; present ones are left alone.
    fn extend(&self, ds: impl IntoIterator<Item = Self::Dim>) -> Self;
    fn concat(&self, other: &Self) -> DResult<Self>;
    fn join(&self, other: &Self) -> DResult<Self>;
    fn widen(&self, next: &Self) -> DResult<Self>;
    fn entails(&self, c: &Constraint<Self::Dim, Self::Scalar>) -> DResult<bool>;
    /// Tightest bounds of `d`; `None` when the state is bottom.
    fn bounds(&self, d: &Self::Dim) -> DResult<Option<Bounds<Self::Scalar>>>;
    /// Whether no stored constraint mentions `d`.
    fn is_unconstrained(&self, d: &Self::Dim) -> DResult<bool>;
    /// Renames dimensions; the map must be injective on the result.
    fn rename(&self, map: &BTreeMap<Self::Dim, Self::Dim>) -> DResult<Self>;
    /// Strong assignment `p := e`; `e` must not mention `p`.
    fn assign(&self, p: &Self::Dim, e: &NumExpr<Self::Dim, Self::Scalar>) -> DResult<Self>;
    /// Overwrites `dst` with an independent copy of `src`: every constraint
    /// on `src` is duplicated for `dst`, with no constraint linking the two.
    fn expand(&self, src: &Self::Dim, dst: &Self::Dim) -> DResult<Self>;

    /// Conjoins a guard.
    fn assume(&self, g: &Guard<Self::Dim, Self::Scalar>) -> DResult<Self> {
        if self.is_bottom() {
            return Ok(self.clone());
        }
        match self.interp(g)? {
            Interpreted::Unsat => Ok(Self::bottom(self.dims())),
            Interpreted::Constraints(cs) => self.add_constraints(&cs),
        }
    }

    /// Drops all information about `d` while keeping it as a dimension.
    fn forget(&self, d: &Self::Dim) -> DResult<Self> {
        Ok(self.project_away(std::slice::from_ref(d))?.extend([d.clone()]))
    }

    /// Inclusion: every point of `self` is a point of `other`.
    fn leq(&self, other: &Self) -> DResult<bool> {
        if self.dims() != other.dims() {
            return Err(DomainError::DimMismatch);
        }
        if self.is_bottom() {
            return Ok(true);
        }
        if other.is_bottom() {
            return Ok(false);
        }
        for c in other.constraints() {
            if !self.entails(&c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Semantic equality by mutual inclusion.
    fn sem_eq(&self, other: &Self) -> DResult<bool> {
        Ok(self.leq(other)? && other.leq(self)?)
    }

    /// Sorted constraint text, one per line.
    fn render(&self) -> String {
        if self.is_bottom() {
            return "bottom\n".to_string();
        }
        let cs = self.constraints();
        if cs.is_empty() {
            return "top\n".to_string();
        }
        let mut lines: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
        lines.sort();
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

/// Projects `paths` away from `c`, or everything except `paths`.
pub fn project<D: NumericDomain>(c: &D, paths: &BTreeSet<D::Dim>, mode: ProjectMode) -> DResult<D> {
    match mode {
        ProjectMode::Away => {
            let ds: Vec<D::Dim> = paths.iter().cloned().collect();
            c.project_away(&ds)
        }
        ProjectMode::To => Ok(c.project_to(paths)),
    }
}

/// Writes `p` from `rhs`. Weak modes join with the previous state, except
/// that a weak write to an unconstrained dimension acts as a strong one.
pub fn update<D: NumericDomain>(
    c: &D,
    p: &D::Dim,
    rhs: &NumExpr<D::Dim, D::Scalar>,
    mode: UpdateMode,
) -> DResult<D> {
    if !c.has_dim(p) {
        return Err(DomainError::UnknownDim(p.to_string()));
    }
    let dup_src = || match rhs {
        NumExpr::Dim(q) => Ok(q),
        _ => Err(DomainError::DupNeedsDim),
    };
    match mode {
        UpdateMode::Strong => c.assign(p, rhs),
        UpdateMode::StrongDup => c.expand(dup_src()?, p),
        UpdateMode::Weak => {
            let strong = if rhs.mentions(p) { weak_self_assign(c, p, rhs)? } else { c.assign(p, rhs)? };
            if c.is_unconstrained(p)? {
                Ok(strong)
            } else {
                c.join(&strong)
            }
        }
        UpdateMode::WeakDup => {
            let strong = c.expand(dup_src()?, p)?;
            if c.is_unconstrained(p)? {
                Ok(strong)
            } else {
                c.join(&strong)
            }
        }
    }
}

/// `p := e` where `e` mentions `p`, through a scratch dimension.
fn weak_self_assign<D: NumericDomain>(c: &D, p: &D::Dim, rhs: &NumExpr<D::Dim, D::Scalar>) -> DResult<D> {
    let t = D::Dim::scratch();
    let s = c.extend([t.clone()]).assign(&t, rhs)?.project_away(std::slice::from_ref(p))?;
    let map: BTreeMap<D::Dim, D::Dim> = [(t, p.clone())].into_iter().collect();
    s.rename(&map)
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Int => "INT",
            DomainKind::Pol => "POL",
        })
    }
}

pub(crate) fn check_dims<K: DimKey>(have: &BTreeSet<K>, ds: impl IntoIterator<Item = K>) -> DResult<()> {
    for d in ds {
        if !have.contains(&d) {
            return Err(DomainError::UnknownDim(d.to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
