//! Hierarchy-aware type system for DLang.
//!
//! Expressions are checked bidirectionally. Synthesis follows the inference
//! rules directly; checking against an expected type is used where a rule
//! leaves a choice open (the machine of `new τ` and `&l`, the annotation of
//! an integer literal) and for struct subsumption on assignment.

mod context;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::hierarchy::{MachineHierarchy, MachineId, RegionId};
use crate::syntax::{Def, Expr, LExpr, Program, Span, Stmt, Type};

pub use context::TypeContext;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeErrorKind {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound type name `{0}`")]
    UnboundType(String),
    #[error("type `{0}` is defined more than once")]
    DuplicateType(String),
    #[error("variable `{0}` is declared more than once")]
    DuplicateVariable(String),
    #[error("field `{0}` appears more than once in a struct")]
    DuplicateField(String),
    #[error("type `{0}` expands to itself without passing through a pointer")]
    CyclicType(String),
    #[error("unknown machine `{0}`")]
    UnknownMachine(MachineId),
    #[error("region `{0}` does not exist in this hierarchy")]
    UnknownRegion(RegionId),
    #[error("integer annotation has an empty machine set")]
    EmptyMachineSet,
    #[error("definition of `{0}` does not match its binding in the context")]
    DefinitionMismatch(String),
    #[error("no field `{0}` in this struct")]
    MissingField(String),
    #[error("field selection `.{0}` on a non-struct value")]
    NotAStruct(String),
    #[error("dereference of a non-pointer")]
    DerefNonPointer,
    #[error("operands of `{0}` must carry the same integer annotation")]
    OperandMismatch(&'static str),
    #[error("arithmetic operand is not an integer")]
    NonIntegerOperand,
    #[error("modify_w applied to a non-pointer")]
    ModifyNonPointer,
    #[error("cast operand does not match the cast's source annotation")]
    CastSourceMismatch,
    #[error("malformed cast annotation")]
    MalformedCast,
    #[error("cast target is not reachable from the pointer's target type")]
    UnreachableIntCast,
    #[error("assignment type mismatch")]
    AssignMismatch,
    #[error("guard is not an integer")]
    NonIntegerGuard,
}

/// One checker diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub expected: Option<Type>,
    pub found: Option<Type>,
}

impl TypeError {
    pub fn new(kind: TypeErrorKind, span: Span) -> Self {
        TypeError {
            kind,
            span,
            expected: None,
            found: None,
        }
    }

    pub(crate) fn bare(kind: TypeErrorKind) -> Self {
        TypeError::new(kind, Span::default())
    }

    fn mismatch(kind: TypeErrorKind, expected: &Type, found: &Type) -> Self {
        TypeError {
            kind,
            span: Span::default(),
            expected: Some(expected.clone()),
            found: Some(found.clone()),
        }
    }

    /// Sets the location unless one is already known.
    pub fn at(mut self, span: Span) -> Self {
        if self.span.line == 0 {
            self.span = span;
        }
        self
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match (&self.expected, &self.found) {
            (Some(e), Some(g)) => write!(f, " (expected `{e}`, found `{g}`)"),
            (None, Some(g)) => write!(f, " (found `{g}`)"),
            _ => Ok(()),
        }
    }
}

impl std::error::Error for TypeError {}

/// Result of synthesizing an expression's type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprType {
    Known(Type),
    /// Built only from literals: fits any `int(r_i, M)`.
    AnyInt,
}

impl ExprType {
    pub fn known(&self) -> Option<&Type> {
        match self {
            ExprType::Known(t) => Some(t),
            ExprType::AnyInt => None,
        }
    }
}

/// Width subtyping on structs: `sub` carries every field of `sup` with an
/// identical type. Any other pair is related only when syntactically equal.
pub fn subtype(sub: &Type, sup: &Type) -> bool {
    if sub == sup {
        return true;
    }
    match (sub, sup) {
        (Type::Struct(_), Type::Struct(sup_fields)) => {
            sup_fields.iter().all(|(label, t)| sub.field(label) == Some(t))
        }
        _ => false,
    }
}

/// Whether an integer annotated exactly like `target` occurs in `ty` or in
/// anything reachable from it through fields, named types and pointers.
pub fn reachable_int(ctx: &TypeContext, ty: &Type, target: &Type) -> Result<bool, TypeError> {
    fn walk(ctx: &TypeContext, ty: &Type, target: &Type, visited: &mut BTreeSet<String>) -> Result<bool, TypeError> {
        match ty {
            Type::Int { .. } => Ok(ty == target),
            Type::Ptr { target: inner, .. } => walk(ctx, inner, target, visited),
            Type::Struct(fields) => {
                for (_, f) in fields {
                    if walk(ctx, f, target, visited)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Type::Named(n) => {
                if !visited.insert(n.clone()) {
                    return Ok(false);
                }
                let body = ctx
                    .type_name(n)
                    .ok_or_else(|| TypeError::bare(TypeErrorKind::UnboundType(n.clone())))?;
                walk(ctx, body, target, visited)
            }
        }
    }
    walk(ctx, ty, target, &mut BTreeSet::new())
}

/// Applies the typing rules under a fixed Γ and hierarchy.
pub struct Checker<'a> {
    h: &'a MachineHierarchy,
    ctx: &'a TypeContext,
}

impl<'a> Checker<'a> {
    pub fn new(h: &'a MachineHierarchy, ctx: &'a TypeContext) -> Self {
        Checker { h, ctx }
    }

    pub fn context(&self) -> &TypeContext {
        self.ctx
    }

    fn machine(&self, m: &MachineId) -> Result<(), TypeError> {
        if self.h.contains(m) {
            Ok(())
        } else {
            Err(TypeError::bare(TypeErrorKind::UnknownMachine(m.clone())))
        }
    }

    fn unfold<'t>(&'t self, t: &'t Type) -> Result<&'t Type, TypeError> {
        self.ctx.unfold(t)
    }

    fn unfold_int(&self, t: &Type) -> Result<Option<Type>, TypeError> {
        match self.unfold(t)? {
            i @ Type::Int { .. } => Ok(Some(i.clone())),
            _ => Ok(None),
        }
    }

    /// `found` may stand where `expected` is required: equal up to named
    /// types, or a struct subtype of it.
    pub fn assignable(&self, found: &Type, expected: &Type) -> Result<bool, TypeError> {
        if self.ctx.equiv(found, expected) {
            return Ok(true);
        }
        let (f, e) = (self.unfold(found)?, self.unfold(expected)?);
        Ok(matches!((f, e), (Type::Struct(_), Type::Struct(_))) && subtype(f, e))
    }

    pub fn type_of_lexpr(&self, l: &LExpr, at: &MachineId) -> Result<Type, TypeError> {
        match l {
            LExpr::Var(x) => self
                .ctx
                .var(x)
                .cloned()
                .ok_or_else(|| TypeError::bare(TypeErrorKind::UnboundVariable(x.clone()))),
            LExpr::RegionVar { name, region, machine } => {
                if !self.h.has_region(*region) {
                    return Err(TypeError::bare(TypeErrorKind::UnknownRegion(*region)));
                }
                self.machine(machine)?;
                self.ctx
                    .var(name)
                    .cloned()
                    .ok_or_else(|| TypeError::bare(TypeErrorKind::UnboundVariable(name.clone())))
            }
            LExpr::Field(base, label) => {
                let bt = self.type_of_lexpr(base, at)?;
                match self.unfold(&bt)? {
                    s @ Type::Struct(_) => s
                        .field(label)
                        .cloned()
                        .ok_or_else(|| {
                            let mut e = TypeError::bare(TypeErrorKind::MissingField(label.clone()));
                            e.found = Some(bt.clone());
                            e
                        }),
                    other => {
                        let mut e = TypeError::bare(TypeErrorKind::NotAStruct(label.clone()));
                        e.found = Some(other.clone());
                        Err(e)
                    }
                }
            }
            LExpr::Deref(e) => match self.type_of_expr(e, at)? {
                ExprType::Known(t) => match self.unfold(&t)? {
                    Type::Ptr { target, .. } => Ok((**target).clone()),
                    other => {
                        let mut err = TypeError::bare(TypeErrorKind::DerefNonPointer);
                        err.found = Some(other.clone());
                        Err(err)
                    }
                },
                ExprType::AnyInt => Err(TypeError::bare(TypeErrorKind::DerefNonPointer)),
            },
        }
    }

    pub fn type_of_expr(&self, e: &Expr, at: &MachineId) -> Result<ExprType, TypeError> {
        match e {
            Expr::LVal(l) => self.type_of_lexpr(l, at).map(ExprType::Known),
            Expr::Lit(_) => Ok(ExprType::AnyInt),
            Expr::BinOp(op, a, b) => {
                let ta = self.type_of_expr(a, at)?;
                let tb = self.type_of_expr(b, at)?;
                let as_int = |t: &Type| -> Result<Type, TypeError> {
                    match self.unfold_int(t)? {
                        Some(i) => Ok(i),
                        None => {
                            let mut err = TypeError::bare(TypeErrorKind::NonIntegerOperand);
                            err.found = Some(t.clone());
                            Err(err)
                        }
                    }
                };
                match (ta, tb) {
                    (ExprType::AnyInt, ExprType::AnyInt) => Ok(ExprType::AnyInt),
                    (ExprType::Known(t), ExprType::AnyInt) | (ExprType::AnyInt, ExprType::Known(t)) => {
                        as_int(&t).map(ExprType::Known)
                    }
                    (ExprType::Known(x), ExprType::Known(y)) => {
                        let (ix, iy) = (as_int(&x)?, as_int(&y)?);
                        if ix == iy {
                            Ok(ExprType::Known(ix))
                        } else {
                            Err(TypeError::mismatch(TypeErrorKind::OperandMismatch(op.symbol()), &ix, &iy))
                        }
                    }
                }
            }
            Expr::AddrOf(l) => {
                let t = self.type_of_lexpr(l, at)?;
                Ok(ExprType::Known(Type::ptr(at.clone(), t)))
            }
            Expr::New(t) => {
                self.ctx.well_formed(t, self.h)?;
                Ok(ExprType::Known(Type::ptr(at.clone(), t.clone())))
            }
            Expr::ModifyW(inner, m) => {
                self.machine(m)?;
                let t = match self.type_of_expr(inner, at)? {
                    ExprType::Known(t) => t,
                    ExprType::AnyInt => return Err(TypeError::bare(TypeErrorKind::ModifyNonPointer)),
                };
                match self.unfold(&t)? {
                    Type::Ptr { target, .. } => Ok(ExprType::Known(Type::Ptr {
                        machine: m.clone(),
                        target: target.clone(),
                    })),
                    other => {
                        let mut err = TypeError::bare(TypeErrorKind::ModifyNonPointer);
                        err.found = Some(other.clone());
                        Err(err)
                    }
                }
            }
            Expr::ComputeAt(inner, m) => {
                self.machine(m)?;
                self.type_of_expr(inner, m)
            }
            Expr::CastIntInt { src, dst, expr } => {
                if !matches!(src, Type::Int { .. }) || !matches!(dst, Type::Int { .. }) {
                    return Err(TypeError::bare(TypeErrorKind::MalformedCast));
                }
                self.ctx.well_formed(src, self.h)?;
                self.ctx.well_formed(dst, self.h)?;
                self.check_cast_operand(expr, src, at)?;
                Ok(ExprType::Known(dst.clone()))
            }
            Expr::CastPtrInt { src, dst, expr } => {
                let target = match src {
                    Type::Ptr { target, .. } if matches!(dst, Type::Int { .. }) => target,
                    _ => return Err(TypeError::bare(TypeErrorKind::MalformedCast)),
                };
                self.ctx.well_formed(src, self.h)?;
                self.ctx.well_formed(dst, self.h)?;
                self.check_cast_operand(expr, src, at)?;
                if !reachable_int(self.ctx, target, dst)? {
                    return Err(TypeError::mismatch(TypeErrorKind::UnreachableIntCast, dst, src));
                }
                Ok(ExprType::Known(dst.clone()))
            }
        }
    }

    fn check_cast_operand(&self, e: &Expr, src: &Type, at: &MachineId) -> Result<(), TypeError> {
        self.check_expr(e, src, at).map_err(|err| match err.kind {
            TypeErrorKind::AssignMismatch => TypeError {
                kind: TypeErrorKind::CastSourceMismatch,
                ..err
            },
            _ => err,
        })
    }

    /// Checks `e` against an expected type.
    pub fn check_expr(&self, e: &Expr, expected: &Type, at: &MachineId) -> Result<(), TypeError> {
        let exp = self.unfold(expected)?.clone();
        match (e, &exp) {
            (Expr::Lit(_), Type::Int { .. }) => return Ok(()),
            (Expr::BinOp(..), Type::Int { .. }) => {
                if let ExprType::Known(t) = self.type_of_expr(e, at)? {
                    if !self.ctx.equiv(&t, &exp) {
                        return Err(TypeError::mismatch(TypeErrorKind::AssignMismatch, expected, &t));
                    }
                }
                return Ok(());
            }
            (Expr::New(t), Type::Ptr { target, .. }) => {
                self.ctx.well_formed(t, self.h)?;
                if self.ctx.equiv(t, target) {
                    return Ok(());
                }
            }
            (Expr::AddrOf(l), Type::Ptr { target, .. }) => {
                let t = self.type_of_lexpr(l, at)?;
                if self.ctx.equiv(&t, target) {
                    return Ok(());
                }
            }
            (Expr::ComputeAt(inner, m), _) => {
                self.machine(m)?;
                return self.check_expr(inner, expected, m);
            }
            _ => {}
        }
        match self.type_of_expr(e, at)? {
            ExprType::AnyInt => {
                if matches!(exp, Type::Int { .. }) {
                    Ok(())
                } else {
                    let mut err = TypeError::bare(TypeErrorKind::AssignMismatch);
                    err.expected = Some(expected.clone());
                    Err(err)
                }
            }
            ExprType::Known(t) => {
                if self.assignable(&t, expected)? {
                    Ok(())
                } else {
                    Err(TypeError::mismatch(TypeErrorKind::AssignMismatch, expected, &t))
                }
            }
        }
    }

    pub fn check_defs(&self, d: &Def) -> Result<(), TypeError> {
        match d {
            Def::Empty => Ok(()),
            Def::TypeDef { name, body, span } => match self.ctx.type_name(name) {
                Some(bound) if bound == body => Ok(()),
                Some(bound) => Err(TypeError {
                    kind: TypeErrorKind::DefinitionMismatch(name.clone()),
                    span: *span,
                    expected: Some(bound.clone()),
                    found: Some(body.clone()),
                }),
                None => Err(TypeError::new(TypeErrorKind::UnboundType(name.clone()), *span)),
            },
            Def::Seq(a, b) => {
                self.check_defs(a)?;
                self.check_defs(b)
            }
        }
    }

    /// Checks a statement, collecting every diagnostic rather than stopping
    /// at the first.
    pub fn check_stmt(&self, s: &Stmt, at: &MachineId, errors: &mut Vec<TypeError>) {
        match s {
            Stmt::Skip => {}
            Stmt::Assign { lhs, rhs, span } => {
                let result = self
                    .type_of_lexpr(lhs, at)
                    .and_then(|t| self.check_expr(rhs, &t, at));
                if let Err(e) = result {
                    errors.push(e.at(*span));
                }
            }
            Stmt::ComputeAt { body, machine, span } => {
                if let Err(e) = self.machine(machine) {
                    errors.push(e.at(*span));
                    return;
                }
                self.check_stmt(body, machine, errors);
            }
            Stmt::Seq(a, b) => {
                self.check_stmt(a, at, errors);
                self.check_stmt(b, at, errors);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => {
                if let Err(e) = self.check_guard(cond, at) {
                    errors.push(e.at(*span));
                }
                self.check_stmt(then_branch, at, errors);
                self.check_stmt(else_branch, at, errors);
            }
            Stmt::While { cond, body, span } => {
                if let Err(e) = self.check_guard(cond, at) {
                    errors.push(e.at(*span));
                }
                self.check_stmt(body, at, errors);
            }
        }
    }

    fn check_guard(&self, cond: &Expr, at: &MachineId) -> Result<(), TypeError> {
        match self.type_of_expr(cond, at)? {
            ExprType::AnyInt => Ok(()),
            ExprType::Known(t) => match self.unfold_int(&t)? {
                Some(_) => Ok(()),
                None => {
                    let mut e = TypeError::bare(TypeErrorKind::NonIntegerGuard);
                    e.found = Some(t);
                    Err(e)
                }
            },
        }
    }
}

pub fn type_of_lexpr(h: &MachineHierarchy, ctx: &TypeContext, l: &LExpr, at: &MachineId) -> Result<Type, TypeError> {
    Checker::new(h, ctx).type_of_lexpr(l, at)
}

pub fn type_of_expr(h: &MachineHierarchy, ctx: &TypeContext, e: &Expr, at: &MachineId) -> Result<ExprType, TypeError> {
    Checker::new(h, ctx).type_of_expr(e, at)
}

pub fn check_defs(h: &MachineHierarchy, ctx: &TypeContext, d: &Def) -> Result<(), TypeError> {
    Checker::new(h, ctx).check_defs(d)
}

pub fn check_stmt(h: &MachineHierarchy, ctx: &TypeContext, s: &Stmt, at: &MachineId) -> Result<(), Vec<TypeError>> {
    let mut errors = Vec::new();
    Checker::new(h, ctx).check_stmt(s, at, &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Type-checks a whole program. On success returns Γ_f.
pub fn check_program(p: &Program, h: &MachineHierarchy) -> Result<TypeContext, Vec<TypeError>> {
    let ctx = TypeContext::from_program(p, h)?;
    let checker = Checker::new(h, &ctx);
    let mut errors = Vec::new();
    if let Err(e) = checker.check_defs(&p.defs) {
        errors.push(e);
    }
    checker.check_stmt(&p.body, h.first_machine(), &mut errors);
    if errors.is_empty() {
        Ok(ctx)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests;
