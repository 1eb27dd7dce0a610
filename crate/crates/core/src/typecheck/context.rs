use std::collections::{BTreeMap, BTreeSet};

use crate::hierarchy::MachineHierarchy;
use crate::syntax::{Program, Type};

use super::{TypeError, TypeErrorKind};

/// Γ: variable types and named-type bodies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeContext {
    pub vars: BTreeMap<String, Type>,
    pub type_names: BTreeMap<String, Type>,
}

impl TypeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_var(mut self, name: &str, ty: Type) -> Self {
        self.vars.insert(name.to_string(), ty);
        self
    }

    pub fn with_type(mut self, name: &str, body: Type) -> Self {
        self.type_names.insert(name.to_string(), body);
        self
    }

    pub fn var(&self, name: &str) -> Option<&Type> {
        self.vars.get(name)
    }

    pub fn type_name(&self, name: &str) -> Option<&Type> {
        self.type_names.get(name)
    }

    /// Builds Γ_f from a program's definitions and declaration preamble,
    /// rejecting duplicates, ill-formed types and non-productive name cycles.
    pub fn from_program(p: &Program, h: &MachineHierarchy) -> Result<TypeContext, Vec<TypeError>> {
        let mut errors = Vec::new();
        let mut ctx = TypeContext::new();
        let mut def_spans = BTreeMap::new();
        for (name, body, span) in p.defs.type_defs() {
            if ctx.type_names.contains_key(name) {
                errors.push(TypeError::new(TypeErrorKind::DuplicateType(name.to_string()), span));
                continue;
            }
            ctx.type_names.insert(name.to_string(), body.clone());
            def_spans.insert(name.to_string(), span);
        }
        for v in &p.vars {
            if ctx.vars.contains_key(&v.name) {
                errors.push(TypeError::new(TypeErrorKind::DuplicateVariable(v.name.clone()), v.span));
                continue;
            }
            ctx.vars.insert(v.name.clone(), v.ty.clone());
        }
        for (name, body) in &ctx.type_names {
            let span = def_spans.get(name).copied().unwrap_or_default();
            if let Err(e) = ctx.well_formed(body, h) {
                errors.push(e.at(span));
            }
        }
        for v in &p.vars {
            if let Err(e) = ctx.well_formed(&v.ty, h) {
                errors.push(e.at(v.span));
            }
        }
        if errors.is_empty() {
            for (name, span) in &def_spans {
                if ctx.names_cycle(name) {
                    errors.push(TypeError::new(TypeErrorKind::CyclicType(name.clone()), *span));
                }
            }
        }
        if errors.is_empty() {
            Ok(ctx)
        } else {
            Err(errors)
        }
    }

    /// Checks machines, regions, field labels and name bindings inside `ty`.
    pub fn well_formed(&self, ty: &Type, h: &MachineHierarchy) -> Result<(), TypeError> {
        match ty {
            Type::Int { region, machines } => {
                if !h.has_region(*region) {
                    return Err(TypeError::bare(TypeErrorKind::UnknownRegion(*region)));
                }
                if machines.is_empty() {
                    return Err(TypeError::bare(TypeErrorKind::EmptyMachineSet));
                }
                for m in machines {
                    if !h.contains(m) {
                        return Err(TypeError::bare(TypeErrorKind::UnknownMachine(m.clone())));
                    }
                }
                Ok(())
            }
            Type::Ptr { machine, target } => {
                if !h.contains(machine) {
                    return Err(TypeError::bare(TypeErrorKind::UnknownMachine(machine.clone())));
                }
                self.well_formed(target, h)
            }
            Type::Named(n) => {
                if self.type_names.contains_key(n) {
                    Ok(())
                } else {
                    Err(TypeError::bare(TypeErrorKind::UnboundType(n.clone())))
                }
            }
            Type::Struct(fields) => {
                let mut seen = BTreeSet::new();
                for (label, t) in fields {
                    if !seen.insert(label.as_str()) {
                        return Err(TypeError::bare(TypeErrorKind::DuplicateField(label.clone())));
                    }
                    self.well_formed(t, h)?;
                }
                Ok(())
            }
        }
    }

    /// True when `name` reaches itself through struct fields or name
    /// expansion without crossing a pointer.
    fn names_cycle(&self, name: &str) -> bool {
        fn walk<'a>(ctx: &'a TypeContext, t: &'a Type, start: &str, seen: &mut BTreeSet<&'a str>) -> bool {
            match t {
                Type::Named(n) => {
                    if n == start {
                        return true;
                    }
                    if !seen.insert(n) {
                        return false;
                    }
                    match ctx.type_names.get(n) {
                        Some(body) => walk(ctx, body, start, seen),
                        None => false,
                    }
                }
                Type::Struct(fields) => fields.iter().any(|(_, f)| walk(ctx, f, start, seen)),
                Type::Int { .. } | Type::Ptr { .. } => false,
            }
        }
        match self.type_names.get(name) {
            Some(body) => walk(self, body, name, &mut BTreeSet::new()),
            None => false,
        }
    }

    /// Expands named types at the head until a structural constructor appears.
    pub fn unfold<'a>(&'a self, mut ty: &'a Type) -> Result<&'a Type, TypeError> {
        let mut steps = 0;
        while let Type::Named(n) = ty {
            ty = self
                .type_names
                .get(n)
                .ok_or_else(|| TypeError::bare(TypeErrorKind::UnboundType(n.clone())))?;
            steps += 1;
            if steps > self.type_names.len() {
                return Err(TypeError::bare(TypeErrorKind::CyclicType(n.clone())));
            }
        }
        Ok(ty)
    }

    /// Type equality up to expansion of named types (coinductive, so
    /// recursive types through pointers compare without looping).
    pub fn equiv(&self, a: &Type, b: &Type) -> bool {
        let mut assumed = Vec::new();
        self.equiv_in(a, b, &mut assumed)
    }

    fn equiv_in(&self, a: &Type, b: &Type, assumed: &mut Vec<(Type, Type)>) -> bool {
        if a == b {
            return true;
        }
        if matches!(a, Type::Named(_)) || matches!(b, Type::Named(_)) {
            if assumed.iter().any(|(x, y)| x == a && y == b) {
                return true;
            }
            assumed.push((a.clone(), b.clone()));
            let (ua, ub) = match (self.unfold(a), self.unfold(b)) {
                (Ok(x), Ok(y)) => (x.clone(), y.clone()),
                _ => return false,
            };
            return self.equiv_in(&ua, &ub, assumed);
        }
        match (a, b) {
            (Type::Ptr { machine: ma, target: ta }, Type::Ptr { machine: mb, target: tb }) => {
                ma == mb && self.equiv_in(ta, tb, assumed)
            }
            (Type::Struct(fa), Type::Struct(fb)) => {
                fa.len() == fb.len()
                    && fa
                        .iter()
                        .zip(fb)
                        .all(|((la, ta), (lb, tb))| la == lb && self.equiv_in(ta, tb, assumed))
            }
            _ => false,
        }
    }
}
