//! Seeded generator of well-typed DLang programs for property testing.
//!
//! Programs use 2 or 3 machines and a configurable number of regions. In
//! sliceable mode every guard either is a literal or covers every
//! coordinate its branches write to, and integer casts keep the region and
//! only narrow the machine set, so every slice at every coordinate exists.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hierarchy::{MachineHierarchy, MachineId, RegionId};
use crate::slicer::{all_coords, slice_type, SliceCoord, SlicedDefTable};
use crate::syntax::{BinOp, Def, Expr, LExpr, Program, Stmt, Type, VarDecl};
use crate::typecheck::{reachable_int, subtype, TypeContext};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub machines: usize,
    pub regions: u32,
    /// Bound on expression nesting.
    pub max_depth: u32,
    /// Bound on top-level statements.
    pub max_stmts: usize,
    pub sliceable: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            machines: 2,
            regions: 2,
            max_depth: 3,
            max_stmts: 6,
            sliceable: true,
        }
    }
}

/// `m1..mN` under one root; with three or more machines the first two share
/// a subgroup so distances differ.
pub fn hierarchy(machines: usize, regions: u32) -> MachineHierarchy {
    let leaves: Vec<String> = (1..=machines).map(|i| format!("(m{i})")).collect();
    let tree = if machines >= 3 {
        format!("(root (g {} {}) {})", leaves[0], leaves[1], leaves[2..].join(" "))
    } else {
        format!("(root {})", leaves.join(" "))
    };
    MachineHierarchy::parse(&format!("regions {regions}; {tree}")).expect("generated hierarchy is valid")
}

/// Program for a seed; the machine count alternates between 2 and 3.
pub fn generate(seed: u64, cfg: &GenConfig) -> (MachineHierarchy, Program) {
    let cfg = GenConfig {
        machines: if seed % 2 == 0 { cfg.machines.max(2) } else { 3 },
        ..cfg.clone()
    };
    let mut g = Generator::new(ChaCha8Rng::seed_from_u64(seed), cfg);
    let p = g.program();
    (g.hierarchy().clone(), p)
}

pub struct Generator<R: Rng> {
    rng: R,
    cfg: GenConfig,
    h: MachineHierarchy,
    machines: Vec<MachineId>,
    defs: Vec<(String, Type)>,
    vars: Vec<(String, Type)>,
    ctx: TypeContext,
    coords: Vec<SliceCoord>,
    tbl: SlicedDefTable,
}

impl<R: Rng> Generator<R> {
    /// Picks type definitions and variable declarations up front.
    pub fn new(rng: R, cfg: GenConfig) -> Self {
        let h = hierarchy(cfg.machines, cfg.regions);
        let machines = h.machines().to_vec();
        let mut g = Generator {
            rng,
            cfg,
            coords: all_coords(&h),
            h,
            machines,
            defs: Vec::new(),
            vars: Vec::new(),
            ctx: TypeContext::new(),
            tbl: SlicedDefTable::default(),
        };
        let n_types = g.rng.gen_range(1..=3);
        for i in 0..n_types {
            let n_fields = g.rng.gen_range(1..=3);
            let mut fields = Vec::new();
            for f in 0..n_fields {
                let t = match g.rng.gen_range(0..4) {
                    0 | 1 => g.int_type(),
                    2 => {
                        let target = if g.rng.gen_bool(0.5) {
                            Type::named(&format!("t{}", g.rng.gen_range(0..n_types)))
                        } else {
                            g.int_type()
                        };
                        Type::ptr(g.machine(), target)
                    }
                    _ if i > 0 => Type::named(&format!("t{}", g.rng.gen_range(0..i))),
                    _ => g.int_type(),
                };
                fields.push((format!("f{f}"), t));
            }
            g.defs.push((format!("t{i}"), Type::Struct(fields)));
        }
        for (n, t) in &g.defs {
            g.ctx.type_names.insert(n.clone(), t.clone());
        }
        let n_vars = g.rng.gen_range(2..=5);
        for i in 0..n_vars {
            let t = match g.rng.gen_range(0..4) {
                0 => g.int_type(),
                1 => Type::ptr(g.machine(), g.int_type()),
                2 => Type::ptr(g.machine(), g.named_type()),
                _ => g.named_type(),
            };
            g.vars.push((format!("v{i}"), t));
        }
        for (n, t) in &g.vars {
            g.ctx.vars.insert(n.clone(), t.clone());
        }
        g.tbl = SlicedDefTable::build(&g.ctx, &g.coords);
        g
    }

    pub fn hierarchy(&self) -> &MachineHierarchy {
        &self.h
    }

    pub fn context(&self) -> &TypeContext {
        &self.ctx
    }

    fn machine(&mut self) -> MachineId {
        self.machines.choose(&mut self.rng).expect("at least one machine").clone()
    }

    pub fn int_type(&mut self) -> Type {
        let region = RegionId::new(self.rng.gen_range(1..=self.cfg.regions));
        let mut set: Vec<MachineId> = self
            .machines
            .clone()
            .into_iter()
            .filter(|_| self.rng.gen_bool(0.5))
            .collect();
        if set.is_empty() {
            set.push(self.machine());
        }
        Type::int(region, set)
    }

    fn named_type(&mut self) -> Type {
        let i = self.rng.gen_range(0..self.defs.len());
        Type::named(&self.defs[i].0)
    }

    /// A random pointer type over the program's types.
    pub fn pointer_type(&mut self) -> Type {
        let target = if self.rng.gen_bool(0.5) {
            self.int_type()
        } else {
            self.named_type()
        };
        Type::ptr(self.machine(), target)
    }

    /// Coordinates at which something of type `ty` lives.
    fn live(&self, ty: &Type) -> BTreeSet<SliceCoord> {
        self.coords
            .iter()
            .filter(|c| slice_type(ty, c, &self.tbl).map(|t| !t.is_void()).unwrap_or(false))
            .cloned()
            .collect()
    }

    fn unfold(&self, ty: &Type) -> Type {
        self.ctx.unfold(ty).expect("generated names are bound").clone()
    }

    /// Access paths from variables, with their types, up to two selections
    /// or dereferences deep.
    fn paths(&self) -> Vec<(LExpr, Type)> {
        let mut out: Vec<(LExpr, Type)> = self.vars.iter().map(|(x, t)| (LExpr::var(x), t.clone())).collect();
        let mut frontier = out.clone();
        for _ in 0..2 {
            let mut next = Vec::new();
            for (l, t) in &frontier {
                match self.unfold(t) {
                    Type::Struct(fields) => {
                        for (label, ft) in fields {
                            next.push((l.clone().field(&label), ft));
                        }
                    }
                    Type::Ptr { target, .. } => next.push((LExpr::deref(Expr::lval(l.clone())), *target)),
                    _ => {}
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    fn fits(&self, found: &Type, expected: &Type) -> bool {
        if self.ctx.equiv(found, expected) {
            return true;
        }
        let (f, e) = (self.unfold(found), self.unfold(expected));
        matches!((&f, &e), (Type::Struct(_), Type::Struct(_))) && subtype(&f, &e)
    }

    fn lval_of(&mut self, ty: &Type) -> Option<LExpr> {
        let cands: Vec<LExpr> = self
            .paths()
            .into_iter()
            .filter(|(_, t)| self.fits(t, ty))
            .map(|(l, _)| l)
            .collect();
        cands.choose(&mut self.rng).cloned()
    }

    fn lit(&mut self) -> Expr {
        Expr::Lit(BigInt::from(self.rng.gen_range(-3i64..=9)))
    }

    /// An expression that checks against `ty`.
    pub fn expr(&mut self, ty: &Type, depth: u32) -> Expr {
        let unfolded = self.unfold(ty);
        if depth > 0 && self.rng.gen_ratio(1, 8) {
            let m = self.machine();
            return Expr::ComputeAt(Box::new(self.expr(ty, depth - 1)), m);
        }
        match &unfolded {
            Type::Int { region, machines } => {
                let choice = if depth == 0 { self.rng.gen_range(0..2) } else { self.rng.gen_range(0..6) };
                match choice {
                    1 => match self.lval_of(ty) {
                        Some(l) => Expr::LVal(l),
                        None => self.lit(),
                    },
                    2 => {
                        let op = *BinOp::ALL.choose(&mut self.rng).expect("operators");
                        let a = self.expr(ty, depth - 1);
                        let b = self.expr(ty, depth - 1);
                        Expr::BinOp(op, Box::new(a), Box::new(b))
                    }
                    3 => {
                        let src = if self.cfg.sliceable {
                            let mut ms = machines.clone();
                            for m in &self.machines {
                                if self.rng.gen_bool(0.3) {
                                    ms.insert(m.clone());
                                }
                            }
                            Type::Int {
                                region: *region,
                                machines: ms,
                            }
                        } else {
                            self.int_type()
                        };
                        let inner = self.expr(&src, depth - 1);
                        Expr::CastIntInt {
                            src,
                            dst: unfolded.clone(),
                            expr: Box::new(inner),
                        }
                    }
                    4 => {
                        let mut targets: Vec<Type> = vec![unfolded.clone()];
                        for (n, _) in &self.defs {
                            let t = Type::named(n);
                            if reachable_int(&self.ctx, &t, &unfolded).unwrap_or(false) {
                                targets.push(t);
                            }
                        }
                        let target = targets.choose(&mut self.rng).expect("non-empty").clone();
                        let src = Type::ptr(self.machine(), target);
                        let inner = self.expr(&src, depth - 1);
                        Expr::CastPtrInt {
                            src,
                            dst: unfolded.clone(),
                            expr: Box::new(inner),
                        }
                    }
                    5 => {
                        let src = Type::ptr(self.machine(), ty.clone());
                        Expr::LVal(LExpr::deref(self.expr(&src, depth - 1)))
                    }
                    _ => self.lit(),
                }
            }
            Type::Ptr { target, .. } => {
                let choice = if depth == 0 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..5) };
                match choice {
                    1 => match self.lval_of(ty) {
                        Some(l) => Expr::LVal(l),
                        None => Expr::New((**target).clone()),
                    },
                    2 => match self.lval_of(target) {
                        Some(l) if self.ctx.equiv(&self.type_of_path(&l), target) => Expr::AddrOf(l),
                        _ => Expr::New((**target).clone()),
                    },
                    3 | 4 => {
                        let from = Type::ptr(self.machine(), (**target).clone());
                        let inner = self.expr(&from, depth - 1);
                        let Type::Ptr { machine, .. } = &unfolded else { unreachable!() };
                        Expr::ModifyW(Box::new(inner), machine.clone())
                    }
                    _ => Expr::New((**target).clone()),
                }
            }
            Type::Struct(_) => {
                if self.rng.gen_bool(0.6) {
                    if let Some(l) = self.lval_of(ty) {
                        return Expr::LVal(l);
                    }
                }
                let src = Type::ptr(self.machine(), ty.clone());
                let inner = if depth == 0 { Expr::New(ty.clone()) } else { self.expr(&src, depth - 1) };
                Expr::LVal(LExpr::deref(inner))
            }
            Type::Named(_) => unreachable!("unfolded"),
        }
    }

    fn type_of_path(&self, l: &LExpr) -> Type {
        self.paths()
            .into_iter()
            .find(|(p, _)| p == l)
            .map(|(_, t)| t)
            .expect("path was generated from the same table")
    }

    fn assign(&mut self, allowed: Option<&BTreeSet<SliceCoord>>) -> Stmt {
        let paths = self.paths();
        for _ in 0..10 {
            let (l, t) = paths.choose(&mut self.rng).expect("variables exist").clone();
            if let Some(a) = allowed {
                if !self.live(&t).is_subset(a) {
                    continue;
                }
            }
            let depth = self.rng.gen_range(0..=self.cfg.max_depth);
            let rhs = self.expr(&t, depth);
            return Stmt::assign(l, rhs);
        }
        Stmt::Skip
    }

    fn guard(&mut self, allowed: Option<&BTreeSet<SliceCoord>>) -> (Expr, Option<BTreeSet<SliceCoord>>) {
        if self.rng.gen_bool(0.3) {
            return (self.lit(), allowed.cloned());
        }
        let ty = self.int_type();
        let e = self.expr(&ty, 2);
        if !self.cfg.sliceable {
            return (e, None);
        }
        let live = self.live(&ty);
        let inner = match allowed {
            Some(a) => a.intersection(&live).cloned().collect(),
            None => live,
        };
        (e, Some(inner))
    }

    fn stmt(&mut self, depth: u32, allowed: Option<&BTreeSet<SliceCoord>>) -> Stmt {
        let choice = if depth == 0 { 0 } else { self.rng.gen_range(0..8) };
        match choice {
            5 => {
                let m = self.machine();
                Stmt::compute_at(self.block(depth - 1, allowed), m)
            }
            6 => {
                let (g, inner) = self.guard(allowed);
                let t = self.block(depth - 1, inner.as_ref());
                let f = self.block(depth - 1, inner.as_ref());
                Stmt::if_then_else(g, t, f)
            }
            7 => {
                let (g, inner) = self.guard(allowed);
                let b = self.block(depth - 1, inner.as_ref());
                Stmt::while_do(g, b)
            }
            _ => self.assign(allowed),
        }
    }

    fn block(&mut self, depth: u32, allowed: Option<&BTreeSet<SliceCoord>>) -> Stmt {
        let n = self.rng.gen_range(1..=3);
        let stmts = (0..n).map(|_| self.stmt(depth, allowed)).collect();
        Stmt::seq_list(stmts)
    }

    pub fn program(&mut self) -> Program {
        let n = self.rng.gen_range(1..=self.cfg.max_stmts);
        let body = Stmt::seq_list((0..n).map(|_| self.stmt(2, None)).collect());
        let defs = Def::from_list(self.defs.iter().map(|(n, t)| Def::type_def(n, t.clone())).collect());
        let vars = self.vars.iter().map(|(n, t)| VarDecl::new(n, t.clone())).collect();
        Program::new(defs, vars, body)
    }
}
