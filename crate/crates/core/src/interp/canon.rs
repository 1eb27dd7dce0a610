use std::collections::BTreeMap;
use std::fmt::Write;

use super::value::{Base, MachineState, Value};
use crate::hierarchy::MachineId;

/// Deterministic text form of a state. Only allocations reachable from
/// variables appear, numbered `#1, #2, …` in depth-first order from the
/// variables (machines and variables sorted by name), so states that differ
/// only by allocation ids serialize identically.
pub fn canonical(s: &MachineState) -> String {
    let mut numbering: BTreeMap<(MachineId, u64), usize> = BTreeMap::new();
    let mut order: Vec<(MachineId, u64)> = Vec::new();

    fn visit(s: &MachineState, v: &Value, numbering: &mut BTreeMap<(MachineId, u64), usize>, order: &mut Vec<(MachineId, u64)>) {
        let mut targets = Vec::new();
        v.for_each_loc(&mut |l| {
            if let Base::Alloc(id) = l.base {
                targets.push((l.machine.clone(), id));
            }
        });
        for key in targets {
            if numbering.contains_key(&key) {
                continue;
            }
            let Some(cell) = s.machines.get(&key.0).and_then(|m| m.heap.get(&key.1)) else {
                continue;
            };
            numbering.insert(key.clone(), order.len() + 1);
            order.push(key);
            visit(s, &cell.value, numbering, order);
        }
    }

    for mem in s.machines.values() {
        for v in mem.env.values() {
            visit(s, v, &mut numbering, &mut order);
        }
    }

    let mut out = String::new();
    for (m, mem) in &s.machines {
        for (x, v) in &mem.env {
            let _ = writeln!(out, "{m}.{x} = {}", render(v, s, &numbering));
        }
    }
    for (i, (m, id)) in order.iter().enumerate() {
        let cell = &s.machines[m].heap[id];
        let _ = writeln!(out, "#{} @{m} = {}", i + 1, render(&cell.value, s, &numbering));
    }
    out
}

fn render(v: &Value, s: &MachineState, numbering: &BTreeMap<(MachineId, u64), usize>) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Null => "null".into(),
        Value::Loc(l) => {
            let mut out = String::from("&");
            match &l.base {
                Base::Alloc(id) => match numbering.get(&(l.machine.clone(), *id)) {
                    Some(k) => {
                        let _ = write!(out, "#{k}");
                    }
                    None => {
                        let _ = write!(out, "dangling@{}", l.machine);
                    }
                },
                Base::Var(x) => {
                    let known = s.var(&l.machine, x).is_some();
                    if known {
                        let _ = write!(out, "{}.{x}", l.machine);
                    } else {
                        let _ = write!(out, "dangling@{}", l.machine);
                    }
                }
            }
            if let Some(r) = l.region {
                let _ = write!(out, "@{r}");
            }
            for p in &l.path {
                let _ = write!(out, ".{p}");
            }
            out
        }
        Value::Struct(fields) => {
            let inner: Vec<String> = fields
                .iter()
                .map(|(l, v)| format!("{l}: {}", render(v, s, numbering)))
                .collect();
            format!("{{{}}}", inner.join(", "))
        }
    }
}

/// Equality of canonical forms: same data, locations compared up to renaming.
pub fn equivalent(a: &MachineState, b: &MachineState) -> bool {
    canonical(a) == canonical(b)
}
