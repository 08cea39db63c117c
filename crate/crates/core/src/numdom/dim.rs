use std::fmt;
use std::sync::Arc;

/// Interned-by-refcount identifier used in dimensions.
pub type Name = Arc<str>;

/// Keys usable as dimensions of a numeric state.
pub trait DimKey: Ord + Clone + std::hash::Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// A key reserved for internal scratch work; never a dimension of a state.
    fn scratch() -> Self;
}

impl DimKey for String {
    fn scratch() -> Self {
        "\u{0}scratch".to_string()
    }
}

/// Frames tag heap dimensions with the method-in-context that owns them
/// during summary-based analysis. The value is a call-graph node index.
pub type Frame = u32;

/// A named axis of an abstract state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    /// A numeric local variable or parameter.
    Local(Name),
    /// `x.f` for an object variable `x`.
    AccessPath(Name, Name),
    /// `o.f`, covering every runtime object abstracted by `o`.
    SummaryObject { obj: Name, field: Name, frame: Option<Frame> },
    /// The unknown entry value of `o.f`, one per creation point.
    InitialPath { obj: Name, field: Name, index: u32, frame: Option<Frame> },
    /// The return value of a method-in-context.
    Ret(Frame),
    /// Positional argument binding used while entering a callee.
    Formal(Frame, u32),
    /// Scratch dimension for intermediate values.
    Temp(u32),
}

impl Dimension {
    pub fn local(n: &str) -> Self {
        Dimension::Local(n.into())
    }

    pub fn path(x: &str, f: &str) -> Self {
        Dimension::AccessPath(x.into(), f.into())
    }

    pub fn summary(obj: &str, field: &str, frame: Option<Frame>) -> Self {
        Dimension::SummaryObject { obj: obj.into(), field: field.into(), frame }
    }

    pub fn is_heap(&self) -> bool {
        matches!(self, Dimension::AccessPath(..) | Dimension::SummaryObject { .. } | Dimension::InitialPath { .. })
    }

    pub fn frame(&self) -> Option<Frame> {
        match self {
            Dimension::SummaryObject { frame, .. } | Dimension::InitialPath { frame, .. } => *frame,
            _ => None,
        }
    }
}

impl DimKey for Dimension {
    fn scratch() -> Self {
        Dimension::Temp(u32::MAX)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let frame = |f: &mut fmt::Formatter<'_>, fr: &Option<Frame>| match fr {
            Some(n) => write!(f, "@{n}"),
            None => Ok(()),
        };
        match self {
            Dimension::Local(x) => write!(f, "{x}"),
            Dimension::AccessPath(x, g) => write!(f, "{x}.{g}"),
            Dimension::SummaryObject { obj, field, frame: fr } => {
                write!(f, "<{obj}>.{field}")?;
                frame(f, fr)
            }
            Dimension::InitialPath { obj, field, index, frame: fr } => {
                write!(f, "<{obj}>.{field}_{index}")?;
                frame(f, fr)
            }
            Dimension::Ret(n) => write!(f, "ret@{n}"),
            Dimension::Formal(n, k) => write!(f, "arg{k}@{n}"),
            Dimension::Temp(n) => write!(f, "#t{n}"),
        }
    }
}
