//! Workloads shared by the pipeline benchmarks.

use dslice_core::generate::{generate, GenConfig};
use dslice_core::syntax::pretty;
use dslice_core::MachineHierarchy;

pub const MOTIVATING: &str = include_str!("../../core/tests/corpus/motivating.dl");
pub const LIST: &str = include_str!("../../core/tests/corpus/list.dl");

pub fn two_machines() -> MachineHierarchy {
    MachineHierarchy::parse("regions 2; (root (m1) (m2))").unwrap()
}

/// A named source text with the hierarchy it checks against.
pub struct Workload {
    pub name: String,
    pub source: String,
    pub hierarchy: MachineHierarchy,
}

pub fn workloads() -> Vec<Workload> {
    let mut out = vec![
        Workload { name: "motivating".into(), source: MOTIVATING.into(), hierarchy: two_machines() },
        Workload { name: "list".into(), source: LIST.into(), hierarchy: two_machines() },
    ];
    let cfg = GenConfig { max_depth: 4, max_stmts: 24, ..GenConfig::default() };
    let (h, p) = generate(7, &cfg);
    out.push(Workload { name: "generated".into(), source: pretty(&p), hierarchy: h });
    out
}
