//! Graph optimization operators.

pub mod balance;
pub mod cuts;
pub mod fraig;
pub mod library;
mod network;
pub mod npn;
pub mod refactor;
pub mod resub;
pub mod rewrite;
pub mod sop;
pub mod structure;
pub mod truth;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("NPN library unavailable: {0}")]
    LibraryMissing(String),
    #[error("operator `{0}` already registered")]
    Duplicate(String),
}

use crate::aig::Aig;
use library::NpnLibrary;
use std::fmt;
use std::sync::Arc;

/// Built-in operators. The first seven form the core action space, in index
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorId {
    Balance,
    Rewrite,
    RewriteZ,
    Refactor,
    RefactorZ,
    Resub,
    ResubZ,
    FraigLite,
}

impl OperatorId {
    pub const CORE: [OperatorId; 7] = [
        OperatorId::Balance,
        OperatorId::Rewrite,
        OperatorId::RewriteZ,
        OperatorId::Refactor,
        OperatorId::RefactorZ,
        OperatorId::Resub,
        OperatorId::ResubZ,
    ];
    pub const ALL: [OperatorId; 8] = [
        OperatorId::Balance,
        OperatorId::Rewrite,
        OperatorId::RewriteZ,
        OperatorId::Refactor,
        OperatorId::RefactorZ,
        OperatorId::Resub,
        OperatorId::ResubZ,
        OperatorId::FraigLite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Balance => "balance",
            OperatorId::Rewrite => "rewrite",
            OperatorId::RewriteZ => "rewrite -z",
            OperatorId::Refactor => "refactor",
            OperatorId::RefactorZ => "refactor -z",
            OperatorId::Resub => "resub",
            OperatorId::ResubZ => "resub -z",
            OperatorId::FraigLite => "fraig-lite",
        }
    }

    pub fn from_name(name: &str) -> Option<OperatorId> {
        OperatorId::ALL.into_iter().find(|o| o.name() == name)
    }

    /// Whether the operator accepts zero-gain replacements.
    pub fn is_zero_cost(self) -> bool {
        matches!(self, OperatorId::RewriteZ | OperatorId::RefactorZ | OperatorId::ResubZ)
    }

    fn run(self, aig: &Aig, lib: Option<&NpnLibrary>) -> Result<Aig, OpError> {
        Ok(match self {
            OperatorId::Balance => balance::balance(aig),
            OperatorId::Rewrite | OperatorId::RewriteZ => {
                let lib = lib.ok_or_else(|| OpError::LibraryMissing("no NPN library attached".into()))?;
                rewrite::rewrite(aig, self.is_zero_cost(), lib)
            }
            OperatorId::Refactor | OperatorId::RefactorZ => refactor::refactor(aig, self.is_zero_cost()),
            OperatorId::Resub | OperatorId::ResubZ => resub::resub(aig, self.is_zero_cost()),
            OperatorId::FraigLite => fraig::fraig_lite(aig),
        })
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Applies a built-in operator using the shared NPN library.
pub fn apply(aig: &Aig, op: OperatorId) -> Result<Aig, OpError> {
    let lib = matches!(op, OperatorId::Rewrite | OperatorId::RewriteZ).then(NpnLibrary::global);
    op.run(aig, lib)
}

/// A named graph transformation usable as an action.
pub trait Operator: Send + Sync {
    fn name(&self) -> &str;
    fn apply(&self, aig: &Aig) -> Result<Aig, OpError>;
}

#[derive(Clone)]
enum LibrarySource {
    Global,
    Fixed(Arc<NpnLibrary>),
    Missing,
}

struct Builtin {
    id: OperatorId,
    lib: LibrarySource,
}

impl Operator for Builtin {
    fn name(&self) -> &str {
        self.id.name()
    }

    fn apply(&self, aig: &Aig) -> Result<Aig, OpError> {
        match &self.lib {
            LibrarySource::Global => apply(aig, self.id),
            LibrarySource::Fixed(l) => self.id.run(aig, Some(l)),
            LibrarySource::Missing => self.id.run(aig, None),
        }
    }
}

/// Ordered set of operators; an operator's position is its action index.
pub struct Registry {
    ops: Vec<Box<dyn Operator>>,
}

impl Registry {
    fn builtins(ids: &[OperatorId], lib: LibrarySource) -> Self {
        Registry { ops: ids.iter().map(|&id| Box::new(Builtin { id, lib: lib.clone() }) as Box<dyn Operator>).collect() }
    }

    /// The seven core operators.
    pub fn core() -> Self {
        Self::builtins(&OperatorId::CORE, LibrarySource::Global)
    }

    /// Core operators followed by fraig-lite.
    pub fn extended() -> Self {
        Self::builtins(&OperatorId::ALL, LibrarySource::Global)
    }

    /// Registry over `ids` with rewriting bound to `lib`; `None` makes the
    /// rewrite operators fail with [`OpError::LibraryMissing`].
    pub fn with_library(ids: &[OperatorId], lib: Option<Arc<NpnLibrary>>) -> Self {
        Self::builtins(ids, lib.map_or(LibrarySource::Missing, LibrarySource::Fixed))
    }

    /// Appends `op`; fails if its name is taken.
    pub fn register(&mut self, op: Box<dyn Operator>) -> Result<usize, OpError> {
        if self.index_of(op.name()).is_some() {
            return Err(OpError::Duplicate(op.name().to_string()));
        }
        self.ops.push(op);
        Ok(self.ops.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.ops.iter().map(|o| o.name()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.name() == name)
    }

    pub fn get(&self, name: &str) -> Result<&dyn Operator, OpError> {
        self.index_of(name).map(|i| self.ops[i].as_ref()).ok_or_else(|| OpError::UnknownOperator(name.to_string()))
    }

    pub fn by_index(&self, i: usize) -> Option<&dyn Operator> {
        self.ops.get(i).map(|o| o.as_ref())
    }

    pub fn apply(&self, name: &str, aig: &Aig) -> Result<Aig, OpError> {
        self.get(name)?.apply(aig)
    }

    pub fn apply_index(&self, i: usize, aig: &Aig) -> Result<Aig, OpError> {
        self.by_index(i).ok_or_else(|| OpError::UnknownOperator(format!("#{i}")))?.apply(aig)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for op in OperatorId::ALL {
            assert_eq!(OperatorId::from_name(op.name()), Some(op));
        }
        assert_eq!(OperatorId::from_name("rewrite-z"), None);
        assert_eq!(Registry::core().names(), ["balance", "rewrite", "rewrite -z", "refactor", "refactor -z", "resub", "resub -z"]);
        assert_eq!(Registry::extended().index_of("fraig-lite"), Some(7));
    }

    #[test]
    fn misses_are_errors() {
        let r = Registry::core();
        assert!(matches!(r.apply("fraig-lite", &Aig::empty(2)), Err(OpError::UnknownOperator(_))));
        let bare = Registry::with_library(&OperatorId::CORE, None);
        assert!(matches!(bare.apply("rewrite", &Aig::empty(2)), Err(OpError::LibraryMissing(_))));
        assert!(bare.apply("balance", &Aig::empty(2)).is_ok());
    }

    #[test]
    fn custom_operator_extends_registry() {
        struct Identity;
        impl Operator for Identity {
            fn name(&self) -> &str {
                "identity"
            }
            fn apply(&self, aig: &Aig) -> Result<Aig, OpError> {
                Ok(aig.clone())
            }
        }
        let mut r = Registry::core();
        assert_eq!(r.register(Box::new(Identity)).unwrap(), 7);
        assert!(r.register(Box::new(Identity)).is_err());
        assert_eq!(r.len(), 8);
    }

    #[test]
    fn empty_graph_passes_through() {
        let lib = Arc::new(library::build_with_limit(3));
        let r = Registry::with_library(&OperatorId::ALL, Some(lib));
        for name in r.names() {
            let out = r.apply(name, &Aig::empty(3)).unwrap();
            assert_eq!(out, Aig::empty(3), "{name}");
        }
    }
}
