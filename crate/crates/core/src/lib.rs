//! Parsing, type checking, slicing and interpretation for DLang, a small
//! distributed language whose data is partitioned over machines and regions.

pub mod generate;
pub mod hierarchy;
pub mod interp;
pub mod syntax;
pub mod slicer;
pub mod typecheck;

pub use hierarchy::{HierNode, HierarchyError, MachineHierarchy, MachineId, RegionId};
pub use syntax::{ast_equal, parse_program, pretty, Def, Expr, LExpr, ParseError, Program, Stmt, Type, VarDecl};
pub use typecheck::{check_program, TypeContext, TypeError, TypeErrorKind};
