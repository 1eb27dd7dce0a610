use std::fmt::{self, Write};

use num_traits::Signed;

use super::ast::*;

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int { region, machines } => {
                write!(f, "int({region}, {{")?;
                for (i, m) in machines.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("})")
            }
            Type::Ptr { machine, target } => write!(f, "ptr<{machine}> {target}"),
            Type::Named(n) => f.write_str(n),
            Type::Struct(fields) if fields.is_empty() => f.write_str("void"),
            Type::Struct(fields) => {
                f.write_str("struct { ")?;
                for (i, (l, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {t}")?;
                }
                f.write_str(" }")
            }
        }
    }
}

impl fmt::Display for LExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LExpr::Var(x) => f.write_str(x),
            LExpr::RegionVar { name, region, machine } => write!(f, "{name}.({region}, {machine})"),
            LExpr::Field(base, label) => write!(f, "{base}.{label}"),
            LExpr::Deref(e) => {
                if deref_operand_is_bare(e) {
                    write!(f, "*{e}")
                } else {
                    write!(f, "*({e})")
                }
            }
        }
    }
}

// `*e.y` means `(*e).y`, so anything that could absorb a trailing `.y` or
// an operator needs parentheses under a deref.
fn deref_operand_is_bare(e: &Expr) -> bool {
    match e {
        Expr::LVal(LExpr::Field(..)) => false,
        Expr::LVal(_) => true,
        Expr::Lit(n) => !n.is_negative(),
        Expr::ModifyW(..) | Expr::CastIntInt { .. } | Expr::CastPtrInt { .. } => true,
        _ => false,
    }
}

const ATOM: u8 = 10;

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::BinOp(op, ..) => op.precedence(),
        // `compute e at m` extends to the `at`, so it is safe as an operand
        // but must be wrapped when followed by more tokens of its own body.
        _ => ATOM,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::LVal(l) => write!(f, "{l}"),
            Expr::Lit(n) => write!(f, "{n}"),
            Expr::BinOp(op, a, b) => {
                let p = op.precedence();
                write_operand(f, a, expr_prec(a) < p)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, b, expr_prec(b) <= p)
            }
            Expr::AddrOf(l) => write!(f, "&{l}"),
            Expr::New(t) => write!(f, "new {t}"),
            Expr::ModifyW(e, m) => write!(f, "modify_w({e}, {m})"),
            Expr::ComputeAt(e, m) => write!(f, "compute {e} at {m}"),
            Expr::CastPtrInt { src, dst, expr } | Expr::CastIntInt { src, dst, expr } => {
                write!(f, "cast<{src} -> {dst}>({expr})")
            }
        }
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn write_block(out: &mut String, s: &Stmt, level: usize) {
    out.push_str("{\n");
    write_stmts(out, s, level + 1);
    out.push('\n');
    indent(out, level);
    out.push('}');
}

fn write_stmts(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Seq(a, b) => {
            if let Stmt::Seq(..) = **a {
                // left-nested sequences need explicit grouping to survive a re-parse
                indent(out, level);
                write_block(out, a, level);
            } else {
                write_stmts(out, a, level);
            }
            out.push_str(";\n");
            write_stmts(out, b, level);
        }
        other => {
            indent(out, level);
            write_simple(out, other, level);
        }
    }
}

fn write_simple(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Skip => out.push_str("skip"),
        Stmt::Assign { lhs, rhs, .. } => {
            let _ = write!(out, "{lhs} := {rhs}");
        }
        Stmt::ComputeAt { body, machine, .. } => {
            out.push_str("compute ");
            write_block(out, body, level);
            let _ = write!(out, " at {machine}");
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            let _ = write!(out, "if {cond} then ");
            write_block(out, then_branch, level);
            out.push_str(" else ");
            write_block(out, else_branch, level);
        }
        Stmt::While { cond, body, .. } => {
            let _ = write!(out, "while {cond} do ");
            write_block(out, body, level);
        }
        Stmt::Seq(..) => write_block(out, s, level),
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_stmts(&mut out, self, 0);
        f.write_str(&out)
    }
}

impl fmt::Display for Def {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, body, _)) in self.type_defs().into_iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "type {name} = {body};")?;
        }
        Ok(())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

/// Renders a program in the concrete syntax accepted by [`super::parse_program`].
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    for (name, body, _) in p.defs.type_defs() {
        let _ = writeln!(out, "type {name} = {body};");
    }
    for v in &p.vars {
        let _ = writeln!(out, "var {} : {};", v.name, v.ty);
    }
    write_stmts(&mut out, &p.body, 0);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::hierarchy::{MachineId, RegionId};

    #[test]
    fn skip_prints_as_skip() {
        assert_eq!(pretty(&parse_program("skip").unwrap()).trim(), "skip");
    }

    #[test]
    fn region_var_form() {
        let l = LExpr::RegionVar {
            name: "x".into(),
            region: RegionId::new(1),
            machine: MachineId::new("m1"),
        };
        assert_eq!(l.to_string(), "x.(r1, m1)");
        let e = Expr::compute_at(Expr::lval(LExpr::deref(Expr::lval(l)).field("y1")), MachineId::new("m1"));
        assert_eq!(e.to_string(), "compute *x.(r1, m1).y1 at m1");
    }

    #[test]
    fn definition_round_trip() {
        let src = "type t2 = struct { y1: int(r1,{m1}), y2: int(r2,{m1,m2}) }; skip";
        let p = parse_program(src).unwrap();
        let printed = pretty(&p);
        assert!(printed.starts_with("type t2 = struct { y1: int(r1, {m1}), y2: int(r2, {m1, m2}) };"));
        assert!(ast_equal(&p, &parse_program(&printed).unwrap()));
    }

    #[test]
    fn parenthesization_survives_reparse() {
        for src in [
            "a - (b - c)",
            "(a - b) - c",
            "a * (b + c)",
            "*(x.f)",
            "*(*p).g",
            "*(compute p at m1)",
            "(compute a at m1) + 1",
            "1 + compute a + b at m1",
            "*(-3)",
            "-3 - a",
            "&(*p).f",
            "*&x",
            "*(&x).f",
            "cast<ptr<m1> t -> int(r1, {m1})>(new t) < 2",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} printed as {printed}");
        }
    }

    #[test]
    fn left_nested_sequences_keep_grouping() {
        let s = Stmt::seq(Stmt::seq(Stmt::Skip, Stmt::Skip), Stmt::Skip);
        let printed = s.to_string();
        assert_eq!(parse_stmt(&printed).unwrap(), s);
        assert_ne!(parse_stmt("skip; skip").unwrap(), parse_stmt("skip").unwrap());
    }
}
