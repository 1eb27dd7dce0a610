use std::collections::BTreeMap;

use super::value::{Cell, Loc, MachineState, Memory, RegionState, Value};
use crate::slicer::{slice_type, SliceCoord, SlicedDefTable};
use crate::syntax::Type;
use crate::typecheck::TypeContext;

/// Restricts an original-run state to what lives at `c`. Every variable is
/// typed by its declaration in `ctx`, every heap cell by the type it was
/// allocated with; components whose type slices to `void` are dropped.
pub fn project(s: &MachineState, c: &SliceCoord, ctx: &TypeContext) -> RegionState {
    let tbl = SlicedDefTable::build(ctx, [c]);
    let keep = |t: &Type| slice_type(t, c, &tbl).map(|t| !t.is_void()).unwrap_or(false);
    let mut machines = BTreeMap::new();
    for (m, mem) in &s.machines {
        let mut out = Memory::default();
        for (x, v) in &mem.env {
            let Some(ty) = ctx.var(x) else { continue };
            if keep(ty) {
                out.env.insert(x.clone(), value(v, ty, c, ctx, &keep));
            }
        }
        for (id, cell) in &mem.heap {
            if keep(&cell.ty) {
                out.heap.insert(
                    *id,
                    Cell {
                        ty: cell.ty.clone(),
                        value: value(&cell.value, &cell.ty, c, ctx, &keep),
                    },
                );
            }
        }
        machines.insert(m.clone(), out);
    }
    MachineState {
        machines,
        current: s.current.clone(),
        region: Some(c.region),
    }
}

fn value(v: &Value, ty: &Type, c: &SliceCoord, ctx: &TypeContext, keep: &impl Fn(&Type) -> bool) -> Value {
    let Ok(ty) = ctx.unfold(ty) else { return v.clone() };
    match (v, ty) {
        (Value::Loc(l), Type::Ptr { .. }) => Value::Loc(Loc {
            region: Some(c.region),
            ..l.clone()
        }),
        (Value::Struct(fields), Type::Struct(ftys)) => Value::Struct(
            ftys.iter()
                .filter(|(_, t)| keep(t))
                .filter_map(|(label, t)| {
                    fields
                        .iter()
                        .find(|(l, _)| l == label)
                        .map(|(_, fv)| (label.clone(), value(fv, t, c, ctx, keep)))
                })
                .collect(),
        ),
        _ => v.clone(),
    }
}
