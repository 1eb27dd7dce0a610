use std::collections::BTreeSet;
use std::fmt::Write;

use dslice_core::interp::{project, Base, Loc, MachineState, Memory, Value};
use dslice_core::slicer::SliceCoord;
use dslice_core::TypeContext;

struct Graph {
    out: String,
    edges: Vec<(String, String, String)>,
    nodes: BTreeSet<String>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn label(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Null => "null".into(),
        Value::Loc(_) => "*".into(),
        Value::Struct(fields) => {
            let inner: Vec<String> = fields.iter().map(|(l, v)| format!("{l}: {}", label(v))).collect();
            format!("{{{}}}", inner.join(", "))
        }
    }
}

fn pointers<'a>(v: &'a Value, path: &mut Vec<&'a str>, out: &mut Vec<(String, &'a Loc)>) {
    match v {
        Value::Loc(l) => out.push((path.join("."), l)),
        Value::Struct(fields) => {
            for (l, fv) in fields {
                path.push(l);
                pointers(fv, path, out);
                path.pop();
            }
        }
        _ => {}
    }
}

fn target_id(prefix: &dyn Fn(&str) -> String, l: &Loc) -> String {
    match &l.base {
        Base::Alloc(id) => prefix(&format!("{}#{id}", l.machine)),
        Base::Var(x) => prefix(&format!("{}.{x}", l.machine)),
    }
}

impl Graph {
    fn new() -> Self {
        Graph {
            out: "digraph heap {\n  node [shape=box];\n".into(),
            edges: Vec::new(),
            nodes: BTreeSet::new(),
        }
    }

    fn node(&mut self, id: String, text: &str, v: &Value, prefix: &dyn Fn(&str) -> String) {
        let _ = writeln!(self.out, "    {} [label={}];", quote(&id), quote(&format!("{text} = {}", label(v))));
        let mut ptrs = Vec::new();
        pointers(v, &mut Vec::new(), &mut ptrs);
        for (path, l) in ptrs {
            self.edges.push((id.clone(), target_id(prefix, l), path));
        }
        self.nodes.insert(id);
    }

    fn cluster(&mut self, name: &str, mem: &Memory, prefix: &dyn Fn(&str) -> String, machine: &str) {
        let _ = writeln!(self.out, "  subgraph {} {{\n    label={};", quote(&format!("cluster_{name}")), quote(name));
        if mem.env.is_empty() && mem.heap.is_empty() {
            let _ = writeln!(self.out, "    {} [style=invis, label=\"\"];", quote(&format!("{name}_empty")));
        }
        for (x, v) in &mem.env {
            self.node(prefix(&format!("{machine}.{x}")), x, v, prefix);
        }
        for (id, cell) in &mem.heap {
            self.node(prefix(&format!("{machine}#{id}")), &format!("#{id}: {}", cell.ty), &cell.value, prefix);
        }
        self.out.push_str("  }\n");
    }

    fn finish(mut self) -> String {
        for (from, to, path) in &self.edges {
            if !self.nodes.contains(to) {
                continue;
            }
            if path.is_empty() {
                let _ = writeln!(self.out, "  {} -> {};", quote(from), quote(to));
            } else {
                let _ = writeln!(self.out, "  {} -> {} [label={}];", quote(from), quote(to), quote(path));
            }
        }
        self.out.push_str("}\n");
        self.out
    }
}

/// One cluster per machine.
pub fn before(s: &MachineState) -> String {
    let mut g = Graph::new();
    let plain = |id: &str| id.to_string();
    for (m, mem) in &s.machines {
        g.cluster(m.as_str(), mem, &plain, m.as_str());
    }
    g.finish()
}

/// One cluster per coordinate, holding that machine's share of the
/// projected state for the coordinate's region.
pub fn after(s: &MachineState, coords: &[SliceCoord], ctx: &TypeContext) -> String {
    let mut g = Graph::new();
    for c in coords {
        let projected = project(s, c, ctx);
        let Some(mem) = projected.machines.get(&c.machine) else { continue };
        let region = c.region;
        let prefix = move |id: &str| format!("{region}:{id}");
        g.cluster(&format!("{}_{}", c.machine, c.region), mem, &prefix, c.machine.as_str());
    }
    g.finish()
}
