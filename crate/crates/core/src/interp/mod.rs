//! Reference interpreter for original and sliced programs.
//!
//! All machines are simulated in one process and `compute … at m` runs
//! inline on machine `m`. Every declared variable exists, zero-initialised,
//! on every machine. `new τ` allocates a zero value of `τ` on the machine
//! currently executing; allocation ids come from one counter shared by all
//! machines.

mod canon;
mod project;
mod value;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::hierarchy::{MachineHierarchy, MachineId};
use crate::slicer::SliceCoord;
use crate::syntax::{BinOp, Expr, LExpr, Program, Span, Stmt, Type};
use crate::typecheck::{check_program, TypeContext, TypeError};

pub use canon::{canonical, equivalent};
pub use project::project;
pub use value::{Base, Cell, Loc, MachineState, Memory, RegionState, Value};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("program is not well-typed ({} error(s))", .0.len())]
    IllTyped(Vec<TypeError>),
    #[error("step budget exhausted")]
    FuelExhausted,
    #[error("dereference of null")]
    NullDeref,
    #[error("dangling location {0}")]
    Dangling(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot cast the address of variable `{0}` to an integer")]
    VariableAddressCast(String),
    #[error("region confinement violated: {0}")]
    RegionViolation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// A runtime failure and the statement that raised it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct RunFailure {
    pub kind: RunError,
    pub span: Span,
}

impl From<RunError> for RunFailure {
    fn from(kind: RunError) -> Self {
        RunFailure {
            kind,
            span: Span::default(),
        }
    }
}

/// Zero value of a type: integers 0, pointers null, structs field-wise.
pub fn zero_value(ty: &Type, ctx: &TypeContext) -> Result<Value, RunError> {
    match ctx.unfold(ty).map_err(|e| RunError::Internal(e.to_string()))? {
        Type::Int { .. } => Ok(Value::Int(BigInt::zero())),
        Type::Ptr { .. } => Ok(Value::Null),
        Type::Struct(fields) => fields
            .iter()
            .map(|(l, t)| Ok((l.clone(), zero_value(t, ctx)?)))
            .collect::<Result<_, _>>()
            .map(Value::Struct),
        Type::Named(_) => unreachable!("unfold stops at a structural type"),
    }
}

struct Place {
    machine: MachineId,
    base: Base,
    path: Vec<String>,
}

struct Interp<'a> {
    ctx: TypeContext,
    coord: Option<&'a SliceCoord>,
    state: MachineState,
    next_alloc: u64,
    fuel: u64,
}

/// Runs an unsliced program from the initial state.
pub fn run_original(p: &Program, h: &MachineHierarchy, fuel: u64) -> Result<MachineState, RunFailure> {
    run(p, h, None, fuel)
}

/// Runs a slice at `c`. Variables must be qualified with `c` and every
/// location created carries `c`'s region.
pub fn run_slice(p: &Program, c: &SliceCoord, h: &MachineHierarchy, fuel: u64) -> Result<RegionState, RunFailure> {
    run(p, h, Some(c), fuel)
}

fn run(p: &Program, h: &MachineHierarchy, coord: Option<&SliceCoord>, fuel: u64) -> Result<MachineState, RunFailure> {
    let ctx = check_program(p, h).map_err(RunError::IllTyped)?;
    let mut machines = BTreeMap::new();
    for m in h.machines() {
        let mut mem = Memory::default();
        for v in &p.vars {
            mem.env.insert(v.name.clone(), zero_value(&v.ty, &ctx)?);
        }
        machines.insert(m.clone(), mem);
    }
    let mut it = Interp {
        ctx,
        coord,
        state: MachineState {
            machines,
            current: h.first_machine().clone(),
            region: coord.map(|c| c.region),
        },
        next_alloc: 1,
        fuel,
    };
    it.exec(&p.body)?;
    Ok(it.state)
}

impl Interp<'_> {
    fn tick(&mut self) -> Result<(), RunError> {
        if self.fuel == 0 {
            return Err(RunError::FuelExhausted);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn exec(&mut self, s: &Stmt) -> Result<(), RunFailure> {
        let at = |span: Span| move |kind: RunError| RunFailure { kind, span };
        match s {
            Stmt::Skip => Ok(()),
            Stmt::Assign { lhs, rhs, span } => {
                self.tick().map_err(at(*span))?;
                let v = self.eval(rhs).map_err(at(*span))?;
                let place = self.place(lhs).map_err(at(*span))?;
                self.store(&place, v).map_err(at(*span))
            }
            Stmt::ComputeAt { body, machine, .. } => {
                let saved = std::mem::replace(&mut self.state.current, machine.clone());
                let r = self.exec(body);
                self.state.current = saved;
                r
            }
            Stmt::Seq(a, b) => {
                self.exec(a)?;
                self.exec(b)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => {
                self.tick().map_err(at(*span))?;
                if self.truth(cond).map_err(at(*span))? {
                    self.exec(then_branch)
                } else {
                    self.exec(else_branch)
                }
            }
            Stmt::While { cond, body, span } => loop {
                self.tick().map_err(at(*span))?;
                if !self.truth(cond).map_err(at(*span))? {
                    return Ok(());
                }
                self.exec(body)?;
            },
        }
    }

    fn truth(&mut self, cond: &Expr) -> Result<bool, RunError> {
        match self.eval(cond)? {
            Value::Int(n) => Ok(!n.is_zero()),
            other => Err(RunError::Internal(format!("guard evaluated to {other}"))),
        }
    }

    fn place(&mut self, l: &LExpr) -> Result<Place, RunError> {
        match l {
            LExpr::Var(x) => {
                if let Some(c) = self.coord {
                    return Err(RunError::RegionViolation(format!("unqualified variable `{x}` in a slice at {c}")));
                }
                Ok(Place {
                    machine: self.state.current.clone(),
                    base: Base::Var(x.clone()),
                    path: Vec::new(),
                })
            }
            LExpr::RegionVar { name, region, machine } => match self.coord {
                Some(c) if c.region == *region && c.machine == *machine => Ok(Place {
                    machine: self.state.current.clone(),
                    base: Base::Var(name.clone()),
                    path: Vec::new(),
                }),
                Some(c) => Err(RunError::RegionViolation(format!(
                    "`{l}` accessed by the slice at {c}"
                ))),
                None => Err(RunError::RegionViolation(format!("`{l}` in an unsliced run"))),
            },
            LExpr::Field(base, label) => {
                let mut p = self.place(base)?;
                p.path.push(label.clone());
                Ok(p)
            }
            LExpr::Deref(e) => match self.eval(e)? {
                Value::Loc(loc) => Ok(Place {
                    machine: loc.machine,
                    base: loc.base,
                    path: loc.path,
                }),
                Value::Null => Err(RunError::NullDeref),
                other => Err(RunError::Internal(format!("dereference of {other}"))),
            },
        }
    }

    fn describe(p: &Place) -> String {
        let base = match &p.base {
            Base::Alloc(id) => format!("alloc{id}"),
            Base::Var(x) => x.clone(),
        };
        format!("{}:{}{}", p.machine, base, p.path.iter().map(|l| format!(".{l}")).collect::<String>())
    }

    fn slot(&mut self, p: &Place) -> Result<&mut Value, RunError> {
        let missing = || RunError::Dangling(Self::describe(p));
        let mem = self.state.machines.get_mut(&p.machine).ok_or_else(missing)?;
        let mut v = match &p.base {
            Base::Alloc(id) => &mut mem.heap.get_mut(id).ok_or_else(missing)?.value,
            Base::Var(x) => mem.env.get_mut(x).ok_or_else(missing)?,
        };
        for label in &p.path {
            v = v.field_mut(label).ok_or_else(missing)?;
        }
        Ok(v)
    }

    fn store(&mut self, p: &Place, v: Value) -> Result<(), RunError> {
        if let Some(c) = self.coord {
            let mut bad = None;
            v.for_each_loc(&mut |l| {
                if l.region != Some(c.region) {
                    bad = Some(format!("stored location {} in the slice at {c}", Value::Loc(l.clone())));
                }
            });
            if let Some(msg) = bad {
                return Err(RunError::RegionViolation(msg));
            }
        }
        let slot = self.slot(p)?;
        *slot = coerce(slot, v);
        Ok(())
    }

    fn loc(&self, machine: MachineId, base: Base, path: Vec<String>) -> Value {
        Value::Loc(Loc {
            machine,
            region: self.coord.map(|c| c.region),
            base,
            path,
        })
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, RunError> {
        match e {
            Expr::LVal(l) => {
                let p = self.place(l)?;
                Ok(self.slot(&p)?.clone())
            }
            Expr::Lit(n) => Ok(Value::Int(n.clone())),
            Expr::BinOp(op, a, b) => {
                let x = self.int(a)?;
                let y = self.int(b)?;
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.is_zero() {
                            return Err(RunError::DivisionByZero);
                        }
                        x / y
                    }
                    BinOp::Eq => BigInt::from((x == y) as u8),
                    BinOp::Lt => BigInt::from((x < y) as u8),
                };
                Ok(Value::Int(r))
            }
            Expr::AddrOf(l) => {
                let p = self.place(l)?;
                Ok(self.loc(p.machine, p.base, p.path))
            }
            Expr::New(t) => {
                let value = zero_value(t, &self.ctx)?;
                let id = self.next_alloc;
                self.next_alloc += 1;
                let m = self.state.current.clone();
                let mem = self.state.machines.get_mut(&m).expect("current machine exists");
                mem.heap.insert(id, Cell { ty: t.clone(), value });
                Ok(self.loc(m, Base::Alloc(id), Vec::new()))
            }
            Expr::ModifyW(inner, m) => match self.eval(inner)? {
                Value::Loc(mut l) => {
                    l.machine = m.clone();
                    Ok(Value::Loc(l))
                }
                Value::Null => Ok(Value::Null),
                other => Err(RunError::Internal(format!("modify_w of {other}"))),
            },
            Expr::ComputeAt(inner, m) => {
                let saved = std::mem::replace(&mut self.state.current, m.clone());
                let r = self.eval(inner);
                self.state.current = saved;
                r
            }
            Expr::CastIntInt { expr, .. } => self.eval(expr),
            Expr::CastPtrInt { expr, .. } => match self.eval(expr)? {
                Value::Loc(Loc { base: Base::Alloc(id), .. }) => Ok(Value::Int(BigInt::from(id))),
                Value::Loc(Loc { base: Base::Var(x), .. }) => Err(RunError::VariableAddressCast(x)),
                Value::Null => Ok(Value::Int(BigInt::zero())),
                other => Err(RunError::Internal(format!("pointer cast of {other}"))),
            },
        }
    }

    fn int(&mut self, e: &Expr) -> Result<BigInt, RunError> {
        match self.eval(e)? {
            Value::Int(n) => Ok(n),
            other => Err(RunError::Internal(format!("arithmetic on {other}"))),
        }
    }
}

/// A struct stored into a narrower struct keeps only the target's fields.
fn coerce(old: &Value, new: Value) -> Value {
    match (old, new) {
        (Value::Struct(old_fields), Value::Struct(new_fields)) => Value::Struct(
            old_fields
                .iter()
                .map(|(l, ov)| {
                    let nv = new_fields
                        .iter()
                        .find(|(nl, _)| nl == l)
                        .map(|(_, v)| coerce(ov, v.clone()))
                        .unwrap_or_else(|| ov.clone());
                    (l.clone(), nv)
                })
                .collect(),
        ),
        (_, new) => new,
    }
}

/// Locations in a sliced-run state that carry a region other than `c`'s.
pub fn confinement_violations(s: &MachineState, c: &SliceCoord) -> Vec<String> {
    let mut out = Vec::new();
    for (m, mem) in &s.machines {
        let mut check = |what: String, v: &Value| {
            v.for_each_loc(&mut |l| {
                if l.region != Some(c.region) {
                    out.push(format!("{what} holds {}", Value::Loc(l.clone())));
                }
            })
        };
        for (x, v) in &mem.env {
            check(format!("{m}.{x}"), v);
        }
        for (id, cell) in &mem.heap {
            check(format!("{m}:alloc{id}"), &cell.value);
        }
    }
    out
}

/// Integer value of a variable on a machine, if it holds one that fits.
pub fn int_var(s: &MachineState, m: &MachineId, x: &str) -> Option<i64> {
    match s.var(m, x)? {
        Value::Int(n) => n.to_i64(),
        _ => None,
    }
}

#[cfg(test)]
mod tests;
