use std::collections::BTreeSet;

use crate::hierarchy::{MachineId, RegionId};

use super::ast::*;
use super::lexer::{lex, Tok};
use super::ParseError;

const KEYWORDS: &[&str] = &[
    "type", "var", "int", "ptr", "struct", "void", "skip", "if", "then", "else", "while", "do",
    "compute", "at", "new", "modify_w", "cast",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses a complete DLang program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let prog = p.program()?;
    Ok(prog)
}

/// Parses a single type, e.g. `ptr<m1> int(r1, {m1})`.
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let ty = p.ty()?;
    p.expect(Tok::Eof)?;
    Ok(ty)
}

/// Parses a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

/// Parses a statement sequence (no definitions or declarations).
pub fn parse_stmt(src: &str) -> Result<Stmt, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let s = p.stmts()?;
    p.expect(Tok::Eof)?;
    Ok(s)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let found = self.peek().describe();
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        Err(ParseError {
            span: self.span(),
            message: format!("expected {}, found {}", expected.join(" or "), found),
            expected,
        })
    }

    fn error_msg<T>(&self, span: Span, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            span,
            message: message.into(),
            expected: Vec::new(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            let what = match &t {
                Tok::Eof => "end of input".to_string(),
                other => format!("`{}`", other.text()),
            };
            self.error(&[&what])
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    /// A plain identifier: not a keyword, no `@`.
    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) && !s.contains('@') => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&[what]),
        }
    }

    /// A type name; mangled `t@m@r` names are allowed here.
    fn type_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["type name"]),
        }
    }

    fn machine(&mut self) -> Result<MachineId, ParseError> {
        self.ident("machine name").map(MachineId::new)
    }

    fn region(&mut self) -> Result<RegionId, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(r) = RegionId::parse_token(s) {
                self.bump();
                return Ok(r);
            }
        }
        self.error(&["region (`r1`, `r2`, ...)"])
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut defs = Vec::new();
        let mut seen = BTreeSet::new();
        while self.is_kw("type") {
            let span = self.span();
            self.bump();
            let name_span = self.span();
            let name = self.type_name()?;
            if !seen.insert(name.clone()) {
                return self.error_msg(name_span, format!("type `{name}` is defined more than once"));
            }
            self.expect(Tok::Eq)?;
            let body = self.ty()?;
            self.expect(Tok::Semi)?;
            defs.push(Def::TypeDef { name, body, span });
        }
        let mut vars: Vec<VarDecl> = Vec::new();
        while self.is_kw("var") {
            let span = self.span();
            self.bump();
            let name_span = self.span();
            let name = self.ident("variable name")?;
            if vars.iter().any(|v| v.name == name) {
                return self.error_msg(name_span, format!("variable `{name}` is declared more than once"));
            }
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::Semi)?;
            vars.push(VarDecl { name, ty, span });
        }
        let body = self.stmts()?;
        if *self.peek() != Tok::Eof {
            return self.error(&["`;`", "end of input"]);
        }
        Ok(Program {
            defs: Def::from_list(defs),
            vars,
            body,
        })
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "int" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let region = self.region()?;
                self.expect(Tok::Comma)?;
                self.expect(Tok::LBrace)?;
                let mut machines = BTreeSet::new();
                machines.insert(self.machine()?);
                while self.eat(&Tok::Comma) {
                    machines.insert(self.machine()?);
                }
                self.expect(Tok::RBrace)?;
                self.expect(Tok::RParen)?;
                Ok(Type::Int { region, machines })
            }
            Tok::Ident(kw) if kw == "ptr" => {
                self.bump();
                self.expect(Tok::Lt)?;
                let machine = self.machine()?;
                self.expect(Tok::Gt)?;
                let target = self.ty()?;
                Ok(Type::Ptr {
                    machine,
                    target: Box::new(target),
                })
            }
            Tok::Ident(kw) if kw == "struct" => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let mut fields: Vec<(String, Type)> = Vec::new();
                if *self.peek() != Tok::RBrace {
                    loop {
                        let label_span = self.span();
                        let label = self.ident("field label")?;
                        if fields.iter().any(|(l, _)| *l == label) {
                            return self.error_msg(label_span, format!("duplicate field `{label}`"));
                        }
                        self.expect(Tok::Colon)?;
                        let t = self.ty()?;
                        fields.push((label, t));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Type::Struct(fields))
            }
            Tok::Ident(kw) if kw == "void" => {
                self.bump();
                Ok(Type::void())
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                self.bump();
                Ok(Type::Named(name))
            }
            _ => {
                let _ = span;
                self.error(&["type"])
            }
        }
    }

    // ----- statements

    fn stmts(&mut self) -> Result<Stmt, ParseError> {
        let mut list = vec![self.stmt()?];
        while self.eat(&Tok::Semi) {
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                break;
            }
            list.push(self.stmt()?);
        }
        Ok(Stmt::seq_list(list))
    }

    fn block(&mut self) -> Result<Stmt, ParseError> {
        self.expect(Tok::LBrace)?;
        let s = self.stmts()?;
        self.expect(Tok::RBrace)?;
        Ok(s)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        if self.is_kw("skip") {
            self.bump();
            return Ok(Stmt::Skip);
        }
        if self.is_kw("compute") && *self.peek_at(1) == Tok::LBrace {
            self.bump();
            let body = self.block()?;
            self.expect_kw("at")?;
            let machine = self.machine()?;
            return Ok(Stmt::ComputeAt {
                body: Box::new(body),
                machine,
                span,
            });
        }
        if self.is_kw("if") {
            self.bump();
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let t = self.block()?;
            self.expect_kw("else")?;
            let f = self.block()?;
            return Ok(Stmt::If {
                cond,
                then_branch: Box::new(t),
                else_branch: Box::new(f),
                span,
            });
        }
        if self.is_kw("while") {
            self.bump();
            let cond = self.expr()?;
            self.expect_kw("do")?;
            let body = self.block()?;
            return Ok(Stmt::While {
                cond,
                body: Box::new(body),
                span,
            });
        }
        if *self.peek() == Tok::LBrace {
            return self.block();
        }
        let target = match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => self.postfix()?,
            Tok::Star | Tok::LParen => self.postfix()?,
            _ => return self.error(&["statement"]),
        };
        let lhs = match target {
            Expr::LVal(l) => l,
            _ => return self.error_msg(span, "left-hand side of `:=` must be an l-expression"),
        };
        self.expect(Tok::Assign)?;
        let rhs = self.expr()?;
        Ok(Stmt::Assign { lhs, rhs, span })
    }

    // ----- expressions

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Plus => Some(BinOp::Add),
            Tok::Minus => Some(BinOp::Sub),
            Tok::Star => Some(BinOp::Mul),
            Tok::Slash => Some(BinOp::Div),
            Tok::EqEq => Some(BinOp::Eq),
            Tok::Lt => Some(BinOp::Lt),
            _ => None,
        }
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        if min_prec > 3 {
            return self.postfix();
        }
        let mut lhs = self.binary(min_prec + 1)?;
        while let Some(op) = self.binop() {
            if op.precedence() != min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(min_prec + 1)?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.prefix()?;
        while *self.peek() == Tok::Dot {
            let dot = self.span();
            self.bump();
            let label = self.ident("field label")?;
            e = match e {
                Expr::LVal(l) => Expr::LVal(LExpr::Field(Box::new(l), label)),
                _ => return self.error_msg(dot, "field selection requires an l-expression"),
            };
        }
        Ok(e)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Star => {
                self.bump();
                let inner = self.prefix()?;
                Ok(Expr::LVal(LExpr::Deref(Box::new(inner))))
            }
            Tok::Amp => {
                let span = self.span();
                self.bump();
                match self.postfix()? {
                    Expr::LVal(l) => Ok(Expr::AddrOf(l)),
                    _ => self.error_msg(span, "`&` requires an l-expression"),
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Expr::Lit(n))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Number(_)) => {
                self.bump();
                match self.bump() {
                    Tok::Number(n) => Ok(Expr::Lit(-n)),
                    _ => unreachable!(),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(kw) if kw == "new" => {
                self.bump();
                Ok(Expr::New(self.ty()?))
            }
            Tok::Ident(kw) if kw == "modify_w" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::Comma)?;
                let m = self.machine()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::ModifyW(Box::new(e), m))
            }
            Tok::Ident(kw) if kw == "compute" => {
                self.bump();
                let e = self.expr()?;
                self.expect_kw("at")?;
                let m = self.machine()?;
                Ok(Expr::ComputeAt(Box::new(e), m))
            }
            Tok::Ident(kw) if kw == "cast" => {
                self.bump();
                self.expect(Tok::Lt)?;
                let src_span = self.span();
                let src = self.ty()?;
                self.expect(Tok::Arrow)?;
                let dst_span = self.span();
                let dst = self.ty()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::LParen)?;
                let e = Box::new(self.expr()?);
                self.expect(Tok::RParen)?;
                if !matches!(dst, Type::Int { .. }) {
                    return self.error_msg(dst_span, "cast target must be an `int(r, {..})` type");
                }
                match src {
                    Type::Int { .. } => Ok(Expr::CastIntInt { src, dst, expr: e }),
                    Type::Ptr { .. } => Ok(Expr::CastPtrInt { src, dst, expr: e }),
                    _ => self.error_msg(src_span, "cast source must be an `int(..)` or `ptr<..>` type"),
                }
            }
            Tok::Ident(name) if !is_keyword(&name) && !name.contains('@') => {
                self.bump();
                // x.(r_i, m)
                if *self.peek() == Tok::Dot && *self.peek_at(1) == Tok::LParen {
                    self.bump();
                    self.bump();
                    let region = self.region()?;
                    self.expect(Tok::Comma)?;
                    let machine = self.machine()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::LVal(LExpr::RegionVar {
                        name,
                        region,
                        machine,
                    }));
                }
                Ok(Expr::LVal(LExpr::Var(name)))
            }
            _ => {
                let _ = span;
                self.error(&["expression"])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> MachineId {
        MachineId::new(s)
    }

    fn r(i: u32) -> RegionId {
        RegionId::new(i)
    }

    #[test]
    fn parses_motivating_definition() {
        let p = parse_program("type t2 = struct { y1: int(r1,{m1}), y2: int(r2,{m1,m2}) }; skip").unwrap();
        let expected = Type::structure([
            ("y1", Type::int(r(1), [m("m1")])),
            ("y2", Type::int(r(2), [m("m1"), m("m2")])),
        ]);
        assert_eq!(p.defs, Def::type_def("t2", expected));
        assert_eq!(p.body, Stmt::Skip);
        assert!(p.vars.is_empty());
    }

    #[test]
    fn bare_skip() {
        let p = parse_program("skip").unwrap();
        assert_eq!(p, Program::new(Def::Empty, vec![], Stmt::Skip));
    }

    #[test]
    fn deref_binds_tighter_than_field() {
        let s = parse_stmt("z := compute *x.y1 at m1").unwrap();
        let expected = Stmt::assign(
            LExpr::var("z"),
            Expr::compute_at(Expr::lval(LExpr::deref(Expr::var("x")).field("y1")), m("m1")),
        );
        assert_eq!(s, expected);
    }

    #[test]
    fn region_vars() {
        let e = parse_expr("*x.(r1, m1).y1").unwrap();
        let rv = LExpr::RegionVar {
            name: "x".into(),
            region: r(1),
            machine: m("m1"),
        };
        assert_eq!(e, Expr::lval(LExpr::deref(Expr::lval(rv)).field("y1")));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("a + b * c - d").unwrap();
        let expected = Expr::bin(
            BinOp::Sub,
            Expr::bin(
                BinOp::Add,
                Expr::var("a"),
                Expr::bin(BinOp::Mul, Expr::var("b"), Expr::var("c")),
            ),
            Expr::var("d"),
        );
        assert_eq!(e, expected);
        let cmp = parse_expr("a < b + 1 == c").unwrap();
        assert!(matches!(cmp, Expr::BinOp(BinOp::Eq, _, _)));
        assert_eq!(parse_expr("a * *p").unwrap(), Expr::bin(BinOp::Mul, Expr::var("a"), Expr::lval(LExpr::deref(Expr::var("p")))));
    }

    #[test]
    fn casts_pick_variant_from_source() {
        let e = parse_expr("cast<int(r2,{m1,m2}) -> int(r1,{m1})>(x)").unwrap();
        assert!(matches!(e, Expr::CastIntInt { .. }));
        let e = parse_expr("cast<ptr<m1> t2 -> int(r1,{m1})>(x)").unwrap();
        assert!(matches!(e, Expr::CastPtrInt { .. }));
        assert!(parse_expr("cast<t2 -> int(r1,{m1})>(x)").is_err());
        assert!(parse_expr("cast<int(r1,{m1}) -> t2>(x)").is_err());
    }

    #[test]
    fn statements_and_blocks() {
        let s = parse_stmt("if x then { skip } else { y := 1; z := 2 }; while 1 do { skip }").unwrap();
        match s {
            Stmt::Seq(a, b) => {
                assert!(matches!(*a, Stmt::If { .. }));
                assert!(matches!(*b, Stmt::While { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
        let c = parse_stmt("compute { x := 1 } at m2").unwrap();
        assert!(matches!(c, Stmt::ComputeAt { .. }));
        let grouped = parse_stmt("{ a := 1; b := 2 }; c := 3").unwrap();
        assert!(matches!(grouped, Stmt::Seq(ref a, _) if matches!(**a, Stmt::Seq(..))));
    }

    #[test]
    fn declarations_and_errors() {
        let p = parse_program("var x : ptr<m1> int(r1, {m1});\nx := new int(r1, {m1})").unwrap();
        assert_eq!(p.vars.len(), 1);
        let err = parse_program("var x : int(r1, {m1});\nx := ").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (2, 6));
        assert!(err.expected.contains(&"expression".to_string()));
        let err = parse_program("type t = struct { a: int(r1,{m1}), a: int(r1,{m1}) }; skip").unwrap_err();
        assert!(err.message.contains("duplicate field"));
        assert!(parse_program("var x : int(r1, {});\nskip").is_err());
        assert!(parse_program("skip skip").is_err());
        assert!(parse_program("var if : void; skip").is_err());
    }

    #[test]
    fn negative_literals() {
        assert_eq!(parse_expr("a - -5").unwrap(), Expr::bin(BinOp::Sub, Expr::var("a"), Expr::lit(-5)));
        assert_eq!(parse_expr("a -5").unwrap(), Expr::bin(BinOp::Sub, Expr::var("a"), Expr::lit(5)));
    }
}
