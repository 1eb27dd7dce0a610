use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::hierarchy::{MachineId, RegionId};
use crate::syntax::Type;

/// What a location points into: a heap allocation or a variable cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    Alloc(u64),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loc {
    pub machine: MachineId,
    /// Set in sliced runs and in projections; absent in original runs.
    pub region: Option<RegionId>,
    pub base: Base,
    /// Field labels selected inside the base cell.
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Null,
    Loc(Loc),
    Struct(Vec<(String, Value)>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn field(&self, label: &str) -> Option<&Value> {
        match self {
            Value::Struct(fs) => fs.iter().find(|(l, _)| l == label).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn field_mut(&mut self, label: &str) -> Option<&mut Value> {
        match self {
            Value::Struct(fs) => fs.iter_mut().find(|(l, _)| l == label).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Calls `f` on every location inside the value.
    pub fn for_each_loc<'a>(&'a self, f: &mut impl FnMut(&'a Loc)) {
        match self {
            Value::Loc(l) => f(l),
            Value::Struct(fs) => fs.iter().for_each(|(_, v)| v.for_each_loc(f)),
            Value::Int(_) | Value::Null => {}
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Null => f.write_str("null"),
            Value::Loc(l) => {
                write!(f, "&{}", l.machine)?;
                if let Some(r) = l.region {
                    write!(f, "@{r}")?;
                }
                match &l.base {
                    Base::Alloc(id) => write!(f, ":alloc{id}")?,
                    Base::Var(x) => write!(f, ":{x}")?,
                }
                for p in &l.path {
                    write!(f, ".{p}")?;
                }
                Ok(())
            }
            Value::Struct(fs) => {
                f.write_str("{")?;
                for (i, (l, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A heap allocation and the type it was created with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub ty: Type,
    pub value: Value,
}

/// One simulated machine: private variables and a heap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Memory {
    pub env: BTreeMap<String, Value>,
    pub heap: BTreeMap<u64, Cell>,
}

/// State of a whole run. For a sliced run `region` names the slice's region
/// and every location carries it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub machines: BTreeMap<MachineId, Memory>,
    pub current: MachineId,
    pub region: Option<RegionId>,
}

/// State of a sliced run, or of an original run projected onto one coordinate.
pub type RegionState = MachineState;

impl MachineState {
    pub fn memory(&self, m: &MachineId) -> Option<&Memory> {
        self.machines.get(m)
    }

    pub fn var(&self, m: &MachineId, x: &str) -> Option<&Value> {
        self.machines.get(m).and_then(|mem| mem.env.get(x))
    }

    /// Follows a location to the value it designates.
    pub fn load(&self, loc: &Loc) -> Option<&Value> {
        let mem = self.machines.get(&loc.machine)?;
        let mut v = match &loc.base {
            Base::Alloc(id) => &mem.heap.get(id)?.value,
            Base::Var(x) => mem.env.get(x)?,
        };
        for label in &loc.path {
            v = v.field(label)?;
        }
        Some(v)
    }
}
