//! Data and program slicing over (machine, region) coordinates.
//!
//! A slice at `(m, r_i)` keeps exactly the integers annotated for region
//! `r_i` on machine `m`, plus the pointers and struct shells needed to reach
//! them. Named types are re-emitted under mangled names `t@m@ri`, variables
//! become region-qualified `x.(r_i, m)`, and assignments to data that does
//! not live at the coordinate turn into `skip`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::hierarchy::{MachineHierarchy, MachineId, RegionId};
use crate::syntax::{Def, Expr, LExpr, Program, Span, Stmt, Type, VarDecl};
use crate::typecheck::{Checker, ExprType, TypeContext, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SliceCoord {
    pub machine: MachineId,
    pub region: RegionId,
}

impl SliceCoord {
    pub fn new(machine: MachineId, region: RegionId) -> Self {
        SliceCoord { machine, region }
    }

    /// Suffix appended to type names sliced at this coordinate.
    pub fn suffix(&self) -> String {
        format!("@{}@{}", self.machine, self.region)
    }
}

impl fmt::Display for SliceCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.machine, self.region)
    }
}

/// Every coordinate of a hierarchy, machines in tree order, regions ascending.
pub fn all_coords(h: &MachineHierarchy) -> Vec<SliceCoord> {
    h.machines()
        .iter()
        .flat_map(|m| h.regions().map(move |r| SliceCoord::new(m.clone(), r)))
        .collect()
}

/// Name under which `name` is re-defined at `c`. Already-mangled names for
/// the same coordinate are left alone so that re-slicing is the identity.
pub fn mangle(name: &str, c: &SliceCoord) -> String {
    let suffix = c.suffix();
    if name.ends_with(&suffix) {
        name.to_string()
    } else {
        format!("{name}{suffix}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("`new {ty}` allocates nothing that lives at {coord}")]
    VoidNew { ty: Type, coord: SliceCoord, span: Span },
    #[error("{what} reads data that does not live at {coord}")]
    ForeignRead { what: String, coord: SliceCoord, span: Span },
    #[error("unbound type name `{0}`")]
    UnboundType(String),
    #[error("{0}")]
    Type(TypeError),
    #[error("program is not well-typed ({} error(s))", .0.len())]
    IllTyped(Vec<TypeError>),
}

impl SliceError {
    pub fn span(&self) -> Span {
        match self {
            SliceError::VoidNew { span, .. } | SliceError::ForeignRead { span, .. } => *span,
            SliceError::Type(e) => e.span,
            SliceError::IllTyped(errs) => errs.first().map(|e| e.span).unwrap_or_default(),
            SliceError::UnboundType(_) => Span::default(),
        }
    }

    fn with_span(self, at: Span) -> Self {
        match self {
            SliceError::VoidNew { ty, coord, span } if span.line == 0 => SliceError::VoidNew { ty, coord, span: at },
            SliceError::ForeignRead { what, coord, span } if span.line == 0 => {
                SliceError::ForeignRead { what, coord, span: at }
            }
            SliceError::Type(e) => SliceError::Type(e.at(at)),
            other => other,
        }
    }
}

/// For each (type name, coordinate): the mangled name of the sliced
/// definition, or `None` when the definition slices to `void` there.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlicedDefTable {
    entries: BTreeMap<(String, SliceCoord), Option<String>>,
}

impl SlicedDefTable {
    /// Computes voidness of every named type in `ctx` at each coordinate.
    /// Voidness of recursive names is the least fixpoint: a name is
    /// non-void only if some finite unfolding reaches a kept integer.
    pub fn build<'c>(ctx: &TypeContext, coords: impl IntoIterator<Item = &'c SliceCoord>) -> Self {
        let mut entries = BTreeMap::new();
        for c in coords {
            let mut live: BTreeSet<&str> = BTreeSet::new();
            loop {
                let mut changed = false;
                for (name, body) in &ctx.type_names {
                    if !live.contains(name.as_str()) && survives(body, c, &live) {
                        live.insert(name);
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            for name in ctx.type_names.keys() {
                let entry = live.contains(name.as_str()).then(|| mangle(name, c));
                entries.insert((name.clone(), c.clone()), entry);
            }
        }
        SlicedDefTable { entries }
    }

    pub fn for_hierarchy(ctx: &TypeContext, h: &MachineHierarchy) -> Self {
        Self::build(ctx, &all_coords(h))
    }

    /// `None` if the name is unknown; `Some(None)` if it slices to void.
    pub fn lookup(&self, name: &str, c: &SliceCoord) -> Option<Option<&str>> {
        self.entries
            .get(&(name.to_string(), c.clone()))
            .map(|e| e.as_deref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SliceCoord, Option<&str>)> {
        self.entries
            .iter()
            .map(|((n, c), e)| (n.as_str(), c, e.as_deref()))
    }
}

fn survives(ty: &Type, c: &SliceCoord, live: &BTreeSet<&str>) -> bool {
    match ty {
        Type::Int { region, machines } => *region == c.region && machines.contains(&c.machine),
        Type::Ptr { target, .. } => survives(target, c, live),
        Type::Struct(fields) => fields.iter().any(|(_, f)| survives(f, c, live)),
        Type::Named(n) => live.contains(n.as_str()),
    }
}

/// Slices a type at `c`. `void` means nothing of the type lives there.
pub fn slice_type(ty: &Type, c: &SliceCoord, tbl: &SlicedDefTable) -> Result<Type, SliceError> {
    match ty {
        Type::Int { region, machines } => {
            if *region == c.region && machines.contains(&c.machine) {
                Ok(ty.clone())
            } else {
                Ok(Type::void())
            }
        }
        Type::Ptr { machine, target } => {
            let t = slice_type(target, c, tbl)?;
            if t.is_void() {
                Ok(Type::void())
            } else {
                Ok(Type::ptr(machine.clone(), t))
            }
        }
        Type::Struct(fields) => {
            let mut kept = Vec::new();
            for (label, f) in fields {
                let s = slice_type(f, c, tbl)?;
                if !s.is_void() {
                    kept.push((label.clone(), s));
                }
            }
            Ok(Type::Struct(kept))
        }
        Type::Named(n) => match tbl.lookup(n, c) {
            None => Err(SliceError::UnboundType(n.clone())),
            Some(None) => Ok(Type::void()),
            Some(Some(m)) => Ok(Type::named(m)),
        },
    }
}

/// Slices definitions over all regions of `machine`: each definition with
/// a non-void slice becomes one mangled definition per region.
pub fn slice_defs(
    d: &Def,
    machine: &MachineId,
    h: &MachineHierarchy,
    tbl: &SlicedDefTable,
) -> Result<Def, SliceError> {
    let coords: Vec<SliceCoord> = h.regions().map(|r| SliceCoord::new(machine.clone(), r)).collect();
    slice_defs_at(d, &coords, tbl)
}

fn slice_defs_at(d: &Def, coords: &[SliceCoord], tbl: &SlicedDefTable) -> Result<Def, SliceError> {
    match d {
        Def::Empty => Ok(Def::Empty),
        Def::TypeDef { name, body, span } => {
            let mut out = Vec::new();
            for c in coords {
                let sliced = slice_type(body, c, tbl)?;
                if sliced.is_void() {
                    continue;
                }
                out.push(Def::TypeDef {
                    name: mangle(name, c),
                    body: sliced,
                    span: *span,
                });
            }
            Ok(Def::from_list(out))
        }
        Def::Seq(a, b) => {
            let a = slice_defs_at(a, coords, tbl)?;
            let b = slice_defs_at(b, coords, tbl)?;
            Ok(match (a, b) {
                (Def::Empty, x) | (x, Def::Empty) => x,
                (a, b) => Def::Seq(Box::new(a), Box::new(b)),
            })
        }
    }
}

/// Slices a left expression: variables become region-qualified.
pub fn slice_lexpr(l: &LExpr, c: &SliceCoord, tbl: &SlicedDefTable) -> Result<LExpr, SliceError> {
    match l {
        LExpr::Var(x) => Ok(LExpr::RegionVar {
            name: x.clone(),
            region: c.region,
            machine: c.machine.clone(),
        }),
        LExpr::RegionVar { .. } => Ok(l.clone()),
        LExpr::Field(base, label) => Ok(LExpr::Field(Box::new(slice_lexpr(base, c, tbl)?), label.clone())),
        LExpr::Deref(e) => Ok(LExpr::Deref(Box::new(slice_expr(e, c, tbl)?))),
    }
}

/// Slices an expression. Machine parameters and integer annotations are
/// kept; types under `new` and the pointer cast's source are sliced.
pub fn slice_expr(e: &Expr, c: &SliceCoord, tbl: &SlicedDefTable) -> Result<Expr, SliceError> {
    match e {
        Expr::LVal(l) => Ok(Expr::LVal(slice_lexpr(l, c, tbl)?)),
        Expr::Lit(_) => Ok(e.clone()),
        Expr::BinOp(op, a, b) => Ok(Expr::BinOp(
            *op,
            Box::new(slice_expr(a, c, tbl)?),
            Box::new(slice_expr(b, c, tbl)?),
        )),
        Expr::AddrOf(l) => Ok(Expr::AddrOf(slice_lexpr(l, c, tbl)?)),
        Expr::New(t) => {
            let s = slice_type(t, c, tbl)?;
            if s.is_void() {
                return Err(SliceError::VoidNew {
                    ty: t.clone(),
                    coord: c.clone(),
                    span: Span::default(),
                });
            }
            Ok(Expr::New(s))
        }
        Expr::ModifyW(inner, m) => Ok(Expr::ModifyW(Box::new(slice_expr(inner, c, tbl)?), m.clone())),
        Expr::ComputeAt(inner, m) => Ok(Expr::ComputeAt(Box::new(slice_expr(inner, c, tbl)?), m.clone())),
        Expr::CastIntInt { src, dst, expr } => {
            if slice_type(src, c, tbl)?.is_void() {
                return Err(SliceError::ForeignRead {
                    what: format!("cast from `{src}`"),
                    coord: c.clone(),
                    span: Span::default(),
                });
            }
            Ok(Expr::CastIntInt {
                src: src.clone(),
                dst: dst.clone(),
                expr: Box::new(slice_expr(expr, c, tbl)?),
            })
        }
        Expr::CastPtrInt { src, dst, expr } => {
            let s = slice_type(src, c, tbl)?;
            if s.is_void() {
                return Err(SliceError::ForeignRead {
                    what: format!("cast from `{src}`"),
                    coord: c.clone(),
                    span: Span::default(),
                });
            }
            Ok(Expr::CastPtrInt {
                src: s,
                dst: dst.clone(),
                expr: Box::new(slice_expr(expr, c, tbl)?),
            })
        }
    }
}

/// Statement slicing at one coordinate. Needs the original Γ to read the
/// static types of assignment targets and guards.
pub struct StmtSlicer<'a> {
    checker: Checker<'a>,
    tbl: &'a SlicedDefTable,
    coord: &'a SliceCoord,
}

impl<'a> StmtSlicer<'a> {
    pub fn new(h: &'a MachineHierarchy, ctx: &'a TypeContext, tbl: &'a SlicedDefTable, coord: &'a SliceCoord) -> Self {
        StmtSlicer {
            checker: Checker::new(h, ctx),
            tbl,
            coord,
        }
    }

    fn is_void_here(&self, ty: &Type) -> Result<bool, SliceError> {
        Ok(slice_type(ty, self.coord, self.tbl)?.is_void())
    }

    pub fn slice(&self, s: &Stmt, at: &MachineId) -> Result<Stmt, SliceError> {
        match s {
            Stmt::Skip => Ok(Stmt::Skip),
            Stmt::Assign { lhs, rhs, span } => {
                let lhs_ty = self
                    .checker
                    .type_of_lexpr(lhs, at)
                    .map_err(|e| SliceError::Type(e.at(*span)))?;
                if self.is_void_here(&lhs_ty)? {
                    return Ok(Stmt::Skip);
                }
                let lhs = slice_lexpr(lhs, self.coord, self.tbl).map_err(|e| e.with_span(*span))?;
                let rhs = slice_expr(rhs, self.coord, self.tbl).map_err(|e| e.with_span(*span))?;
                Ok(Stmt::Assign { lhs, rhs, span: *span })
            }
            Stmt::ComputeAt { body, machine, span } => Ok(Stmt::ComputeAt {
                body: Box::new(self.slice(body, machine)?),
                machine: machine.clone(),
                span: *span,
            }),
            Stmt::Seq(a, b) => Ok(Stmt::seq(self.slice(a, at)?, self.slice(b, at)?)),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => {
                let t = self.slice(then_branch, at)?;
                let f = self.slice(else_branch, at)?;
                match self.guard(cond, at, *span, t.is_noop() && f.is_noop())? {
                    None => Ok(Stmt::Skip),
                    Some(cond) => Ok(Stmt::If {
                        cond,
                        then_branch: Box::new(t),
                        else_branch: Box::new(f),
                        span: *span,
                    }),
                }
            }
            Stmt::While { cond, body, span } => {
                let b = self.slice(body, at)?;
                match self.guard(cond, at, *span, b.is_noop())? {
                    None => Ok(Stmt::Skip),
                    Some(cond) => Ok(Stmt::While {
                        cond,
                        body: Box::new(b),
                        span: *span,
                    }),
                }
            }
        }
    }

    /// Sliced guard, or `None` when the guard's data lives elsewhere and the
    /// branches do nothing here either.
    fn guard(&self, cond: &Expr, at: &MachineId, span: Span, branches_noop: bool) -> Result<Option<Expr>, SliceError> {
        let ty = self
            .checker
            .type_of_expr(cond, at)
            .map_err(|e| SliceError::Type(e.at(span)))?;
        let void = match &ty {
            ExprType::AnyInt => false,
            ExprType::Known(t) => self.is_void_here(t)?,
        };
        if void {
            if branches_noop {
                return Ok(None);
            }
            return Err(SliceError::ForeignRead {
                what: format!("guard `{cond}`"),
                coord: self.coord.clone(),
                span,
            });
        }
        slice_expr(cond, self.coord, self.tbl)
            .map(Some)
            .map_err(|e| e.with_span(span))
    }
}

/// Slices a statement under Γ at `c`, starting on the hierarchy's first machine.
pub fn slice_stmt(
    s: &Stmt,
    c: &SliceCoord,
    h: &MachineHierarchy,
    ctx: &TypeContext,
    tbl: &SlicedDefTable,
) -> Result<Stmt, SliceError> {
    StmtSlicer::new(h, ctx, tbl, c).slice(s, h.first_machine())
}

/// Slices a whole well-typed program at `c`: the region's mangled
/// definitions, the surviving variable declarations, and the sliced body.
pub fn slice_program(p: &Program, c: &SliceCoord, h: &MachineHierarchy) -> Result<Program, SliceError> {
    let ctx = crate::typecheck::check_program(p, h).map_err(SliceError::IllTyped)?;
    let tbl = SlicedDefTable::build(&ctx, [c]);
    slice_checked(p, c, h, &ctx, &tbl)
}

fn slice_checked(
    p: &Program,
    c: &SliceCoord,
    h: &MachineHierarchy,
    ctx: &TypeContext,
    tbl: &SlicedDefTable,
) -> Result<Program, SliceError> {
    let defs = slice_defs_at(&p.defs, std::slice::from_ref(c), tbl)?;
    let mut vars = Vec::new();
    for v in &p.vars {
        let t = slice_type(&v.ty, c, tbl)?;
        if !t.is_void() {
            vars.push(VarDecl {
                name: v.name.clone(),
                ty: t,
                span: v.span,
            });
        }
    }
    let body = slice_stmt(&p.body, c, h, ctx, tbl)?;
    Ok(Program::new(defs, vars, body))
}

/// One slice per coordinate, in [`all_coords`] order.
pub fn slice_all(p: &Program, h: &MachineHierarchy) -> Result<Vec<(SliceCoord, Program)>, SliceError> {
    let ctx = crate::typecheck::check_program(p, h).map_err(SliceError::IllTyped)?;
    let coords = all_coords(h);
    let tbl = SlicedDefTable::build(&ctx, &coords);
    coords
        .into_iter()
        .map(|c| {
            let s = slice_checked(p, &c, h, &ctx, &tbl)?;
            Ok((c, s))
        })
        .collect()
}

/// Descriptions of every region-qualified variable or mangled type name in
/// `p` that belongs to a coordinate other than `c`.
pub fn foreign_references(p: &Program, c: &SliceCoord) -> Vec<String> {
    let mut out = Vec::new();
    let suffix = c.suffix();
    let ty = |t: &Type, out: &mut Vec<String>| visit_type_names(t, &mut |n| {
        if n.contains('@') && !n.ends_with(&suffix) {
            out.push(format!("type `{n}`"));
        }
    });
    for (name, body, _) in p.defs.type_defs() {
        if name.contains('@') && !name.ends_with(&suffix) {
            out.push(format!("definition `{name}`"));
        }
        ty(body, &mut out);
    }
    for v in &p.vars {
        ty(&v.ty, &mut out);
    }
    let mut refs = Vec::new();
    collect_stmt(&p.body, &mut refs);
    for r in refs {
        match r {
            Ref::Var(name, region, machine) => {
                if region != c.region || machine != c.machine {
                    out.push(format!("variable `{name}.({region}, {machine})`"));
                }
            }
            Ref::Type(t) => ty(&t, &mut out),
        }
    }
    out
}

enum Ref {
    Var(String, RegionId, MachineId),
    Type(Type),
}

fn visit_type_names(t: &Type, f: &mut impl FnMut(&str)) {
    match t {
        Type::Int { .. } => {}
        Type::Ptr { target, .. } => visit_type_names(target, f),
        Type::Named(n) => f(n),
        Type::Struct(fields) => fields.iter().for_each(|(_, t)| visit_type_names(t, f)),
    }
}

fn collect_lexpr(l: &LExpr, out: &mut Vec<Ref>) {
    match l {
        LExpr::Var(_) => {}
        LExpr::RegionVar { name, region, machine } => out.push(Ref::Var(name.clone(), *region, machine.clone())),
        LExpr::Field(b, _) => collect_lexpr(b, out),
        LExpr::Deref(e) => collect_expr(e, out),
    }
}

fn collect_expr(e: &Expr, out: &mut Vec<Ref>) {
    match e {
        Expr::LVal(l) | Expr::AddrOf(l) => collect_lexpr(l, out),
        Expr::Lit(_) => {}
        Expr::BinOp(_, a, b) => {
            collect_expr(a, out);
            collect_expr(b, out);
        }
        Expr::New(t) => out.push(Ref::Type(t.clone())),
        Expr::ModifyW(e, _) | Expr::ComputeAt(e, _) => collect_expr(e, out),
        Expr::CastPtrInt { src, dst, expr } | Expr::CastIntInt { src, dst, expr } => {
            out.push(Ref::Type(src.clone()));
            out.push(Ref::Type(dst.clone()));
            collect_expr(expr, out);
        }
    }
}

fn collect_stmt(s: &Stmt, out: &mut Vec<Ref>) {
    match s {
        Stmt::Skip => {}
        Stmt::Assign { lhs, rhs, .. } => {
            collect_lexpr(lhs, out);
            collect_expr(rhs, out);
        }
        Stmt::ComputeAt { body, .. } => collect_stmt(body, out),
        Stmt::Seq(a, b) => {
            collect_stmt(a, out);
            collect_stmt(b, out);
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            collect_expr(cond, out);
            collect_stmt(then_branch, out);
            collect_stmt(else_branch, out);
        }
        Stmt::While { cond, body, .. } => {
            collect_expr(cond, out);
            collect_stmt(body, out);
        }
    }
}
