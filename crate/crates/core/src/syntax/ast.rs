use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

use crate::hierarchy::{MachineId, RegionId};

/// Source position (1-based line and column).
///
/// Spans never take part in equality: two ASTs that differ only in where
/// their nodes came from compare equal.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    /// `int(r_i, M)`: an integer living in region `r_i` of every machine in `M`.
    Int {
        region: RegionId,
        machines: BTreeSet<MachineId>,
    },
    /// `ptr<m> T`: a pointer to a `T` hosted on machine `m`.
    Ptr { machine: MachineId, target: Box<Type> },
    Named(String),
    /// Field order is significant; labels are distinct.
    Struct(Vec<(String, Type)>),
}

impl Type {
    pub fn void() -> Type {
        Type::Struct(Vec::new())
    }

    pub fn is_void(&self) -> bool {
        matches!(self, Type::Struct(fields) if fields.is_empty())
    }

    pub fn int(region: RegionId, machines: impl IntoIterator<Item = MachineId>) -> Type {
        Type::Int {
            region,
            machines: machines.into_iter().collect(),
        }
    }

    pub fn ptr(machine: MachineId, target: Type) -> Type {
        Type::Ptr {
            machine,
            target: Box::new(target),
        }
    }

    pub fn named(name: &str) -> Type {
        Type::Named(name.to_string())
    }

    pub fn structure<S: Into<String>>(fields: impl IntoIterator<Item = (S, Type)>) -> Type {
        Type::Struct(fields.into_iter().map(|(l, t)| (l.into(), t)).collect())
    }

    pub fn field(&self, label: &str) -> Option<&Type> {
        match self {
            Type::Struct(fields) => fields.iter().find(|(l, _)| l == label).map(|(_, t)| t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Def {
    Empty,
    TypeDef { name: String, body: Type, span: Span },
    Seq(Box<Def>, Box<Def>),
}

impl Def {
    pub fn type_def(name: &str, body: Type) -> Def {
        Def::TypeDef {
            name: name.to_string(),
            body,
            span: Span::default(),
        }
    }

    /// Right-nested sequence of the given definitions (`Empty` when none).
    pub fn from_list(defs: Vec<Def>) -> Def {
        let mut iter = defs.into_iter().rev();
        match iter.next() {
            None => Def::Empty,
            Some(last) => iter.fold(last, |acc, d| Def::Seq(Box::new(d), Box::new(acc))),
        }
    }

    /// The `type t = τ` leaves in source order.
    pub fn type_defs(&self) -> Vec<(&str, &Type, Span)> {
        fn walk<'a>(d: &'a Def, out: &mut Vec<(&'a str, &'a Type, Span)>) {
            match d {
                Def::Empty => {}
                Def::TypeDef { name, body, span } => out.push((name, body, *span)),
                Def::Seq(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LExpr {
    Var(String),
    /// `x.(r_i, m)`: the cell of `x` that belongs to region `r_i` of machine `m`.
    RegionVar {
        name: String,
        region: RegionId,
        machine: MachineId,
    },
    Field(Box<LExpr>, String),
    Deref(Box<Expr>),
}

impl LExpr {
    pub fn var(name: &str) -> LExpr {
        LExpr::Var(name.to_string())
    }

    pub fn field(self, label: &str) -> LExpr {
        LExpr::Field(Box::new(self), label.to_string())
    }

    pub fn deref(e: Expr) -> LExpr {
        LExpr::Deref(Box::new(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Lt,
}

impl BinOp {
    pub const ALL: [BinOp; 6] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Eq, BinOp::Lt];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Lt => "<",
        }
    }

    /// Higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Lt => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    LVal(LExpr),
    /// Integer constant; adopts whatever integer annotation its context expects.
    Lit(BigInt),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    AddrOf(LExpr),
    New(Type),
    ModifyW(Box<Expr>, MachineId),
    ComputeAt(Box<Expr>, MachineId),
    /// `cast<ptr<m> T -> int(r_i, M)>(e)`; `src` is always a `Type::Ptr`, `dst` a `Type::Int`.
    CastPtrInt { src: Type, dst: Type, expr: Box<Expr> },
    /// `cast<int(r_j, M_j) -> int(r_i, M_i)>(e)`; both annotations are `Type::Int`.
    CastIntInt { src: Type, dst: Type, expr: Box<Expr> },
}

impl Expr {
    pub fn lval(l: LExpr) -> Expr {
        Expr::LVal(l)
    }

    pub fn var(name: &str) -> Expr {
        Expr::LVal(LExpr::var(name))
    }

    pub fn lit(n: i64) -> Expr {
        Expr::Lit(BigInt::from(n))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::BinOp(op, Box::new(a), Box::new(b))
    }

    pub fn compute_at(e: Expr, m: MachineId) -> Expr {
        Expr::ComputeAt(Box::new(e), m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Assign { lhs: LExpr, rhs: Expr, span: Span },
    ComputeAt { body: Box<Stmt>, machine: MachineId, span: Span },
    Seq(Box<Stmt>, Box<Stmt>),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Box<Stmt>, span: Span },
    While { cond: Expr, body: Box<Stmt>, span: Span },
}

impl Stmt {
    pub fn assign(lhs: LExpr, rhs: Expr) -> Stmt {
        Stmt::Assign {
            lhs,
            rhs,
            span: Span::default(),
        }
    }

    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence; `Skip` when empty.
    pub fn seq_list(stmts: Vec<Stmt>) -> Stmt {
        let mut iter = stmts.into_iter().rev();
        match iter.next() {
            None => Stmt::Skip,
            Some(last) => iter.fold(last, |acc, s| Stmt::seq(s, acc)),
        }
    }

    pub fn if_then_else(cond: Expr, t: Stmt, f: Stmt) -> Stmt {
        Stmt::If {
            cond,
            then_branch: Box::new(t),
            else_branch: Box::new(f),
            span: Span::default(),
        }
    }

    pub fn while_do(cond: Expr, body: Stmt) -> Stmt {
        Stmt::While {
            cond,
            body: Box::new(body),
            span: Span::default(),
        }
    }

    pub fn compute_at(body: Stmt, machine: MachineId) -> Stmt {
        Stmt::ComputeAt {
            body: Box::new(body),
            machine,
            span: Span::default(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Stmt::Skip => Span::default(),
            Stmt::Seq(a, _) => a.span(),
            Stmt::Assign { span, .. }
            | Stmt::ComputeAt { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. } => *span,
        }
    }

    /// True when a terminating execution of the statement writes no
    /// variable and no heap cell reachable from one. Guards can only
    /// allocate, so conditionals and loops over no-ops are no-ops too.
    pub fn is_noop(&self) -> bool {
        match self {
            Stmt::Skip => true,
            Stmt::Seq(a, b) => a.is_noop() && b.is_noop(),
            Stmt::ComputeAt { body, .. } => body.is_noop(),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => then_branch.is_noop() && else_branch.is_noop(),
            Stmt::While { body, .. } => body.is_noop(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

impl VarDecl {
    pub fn new(name: &str, ty: Type) -> Self {
        VarDecl {
            name: name.to_string(),
            ty,
            span: Span::default(),
        }
    }
}

/// `d S` plus the `var x : T;` declarations that seed the variable context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub defs: Def,
    pub vars: Vec<VarDecl>,
    pub body: Stmt,
}

impl Program {
    pub fn new(defs: Def, vars: Vec<VarDecl>, body: Stmt) -> Self {
        Program { defs, vars, body }
    }
}

/// Structural equality ignoring source positions.
///
/// Definition sequencing is associative with `ε` as its unit, so definition
/// trees are compared as flat lists.
pub fn ast_equal(a: &Program, b: &Program) -> bool {
    let da: Vec<_> = a.defs.type_defs().into_iter().map(|(n, t, _)| (n, t)).collect();
    let db: Vec<_> = b.defs.type_defs().into_iter().map(|(n, t, _)| (n, t)).collect();
    da == db && a.vars == b.vars && a.body == b.body
}
