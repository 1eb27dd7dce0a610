use super::*;
use crate::hierarchy::{MachineHierarchy, MachineId, RegionId};
use crate::syntax::{parse_expr, parse_program, parse_stmt, LExpr};

const T2: &str = "struct { y1: int(r1, {m1}), y2: int(r2, {m1, m2}) }";

fn h() -> MachineHierarchy {
    MachineHierarchy::parse("regions 2; (root (m1) (m2))").unwrap()
}

fn m1() -> MachineId {
    MachineId::new("m1")
}

fn int(r: u32, ms: &[&str]) -> Type {
    Type::int(RegionId::new(r), ms.iter().map(|m| MachineId::new(*m)))
}

fn t2_body() -> Type {
    Type::structure([("y1", int(1, &["m1"])), ("y2", int(2, &["m1", "m2"]))])
}

fn ctx() -> TypeContext {
    TypeContext::new()
        .with_type("t2", t2_body())
        .with_var("x", Type::ptr(m1(), Type::named("t2")))
        .with_var("z", int(1, &["m1"]))
        .with_var("w", int(1, &["m1", "m2"]))
}

fn expr_type(src: &str) -> Result<ExprType, TypeError> {
    type_of_expr(&h(), &ctx(), &parse_expr(src).unwrap(), &m1())
}

#[test]
fn width_subtyping() {
    let narrow = Type::structure([("y1", int(1, &["m1"]))]);
    assert!(subtype(&t2_body(), &narrow));
    assert!(!subtype(&narrow, &t2_body()));
    assert!(subtype(&t2_body(), &t2_body()));
    assert!(!subtype(&int(1, &["m1"]), &int(2, &["m1"])));
    assert!(subtype(&Type::void(), &Type::void()));
}

#[test]
fn lexpr_rules() {
    let c = ctx();
    let deref = parse_expr("*x").unwrap();
    let Expr::LVal(l) = deref else { unreachable!() };
    let t = type_of_lexpr(&h(), &c, &l, &m1()).unwrap();
    assert_eq!(t, Type::named("t2"));
    assert_eq!(c.unfold(&t).unwrap(), &t2_body());

    let rv = LExpr::RegionVar {
        name: "x".into(),
        region: RegionId::new(1),
        machine: m1(),
    };
    assert_eq!(type_of_lexpr(&h(), &c, &rv, &m1()).unwrap(), Type::ptr(m1(), Type::named("t2")));

    let Expr::LVal(fl) = parse_expr("(*x).y1").unwrap() else { unreachable!() };
    assert_eq!(type_of_lexpr(&h(), &c, &fl, &m1()).unwrap(), int(1, &["m1"]));

    let Expr::LVal(bad) = parse_expr("(*x).y3").unwrap() else { unreachable!() };
    let err = type_of_lexpr(&h(), &c, &bad, &m1()).unwrap_err();
    assert_eq!(err.kind, TypeErrorKind::MissingField("y3".into()));

    let Expr::LVal(bad) = parse_expr("*z").unwrap() else { unreachable!() };
    assert_eq!(
        type_of_lexpr(&h(), &c, &bad, &m1()).unwrap_err().kind,
        TypeErrorKind::DerefNonPointer
    );
    let err = type_of_lexpr(&h(), &c, &LExpr::var("nope"), &m1()).unwrap_err();
    assert_eq!(err.kind, TypeErrorKind::UnboundVariable("nope".into()));
}

#[test]
fn expression_rules() {
    assert_eq!(
        expr_type("compute (*x).y1 at m1").unwrap(),
        ExprType::Known(int(1, &["m1"]))
    );
    assert_eq!(
        expr_type("new int(r1, {m1})").unwrap(),
        ExprType::Known(Type::ptr(m1(), int(1, &["m1"])))
    );
    assert_eq!(expr_type("w + w").unwrap(), ExprType::Known(int(1, &["m1", "m2"])));
    assert_eq!(expr_type("w + 1").unwrap(), ExprType::Known(int(1, &["m1", "m2"])));
    assert_eq!(expr_type("1 + 2").unwrap(), ExprType::AnyInt);
    assert!(matches!(
        expr_type("z + w").unwrap_err().kind,
        TypeErrorKind::OperandMismatch("+")
    ));
    assert_eq!(expr_type("x + 1").unwrap_err().kind, TypeErrorKind::NonIntegerOperand);
    assert_eq!(
        expr_type("&z").unwrap(),
        ExprType::Known(Type::ptr(m1(), int(1, &["m1"])))
    );
    assert_eq!(
        expr_type("compute new t2 at m2").unwrap(),
        ExprType::Known(Type::ptr(MachineId::new("m2"), Type::named("t2")))
    );
}

#[test]
fn modify_w_retargets() {
    assert_eq!(
        expr_type("modify_w(x, m2)").unwrap(),
        ExprType::Known(Type::ptr(MachineId::new("m2"), Type::named("t2")))
    );
    assert_eq!(expr_type("modify_w(z, m2)").unwrap_err().kind, TypeErrorKind::ModifyNonPointer);
    assert_eq!(
        expr_type("modify_w(x, m9)").unwrap_err().kind,
        TypeErrorKind::UnknownMachine(MachineId::new("m9"))
    );
}

#[test]
fn casts() {
    assert_eq!(
        expr_type("cast<int(r1, {m1}) -> int(r2, {m1})>(z)").unwrap(),
        ExprType::Known(int(2, &["m1"]))
    );
    assert_eq!(
        expr_type("cast<int(r1, {m1, m2}) -> int(r2, {m1})>(z)").unwrap_err().kind,
        TypeErrorKind::CastSourceMismatch
    );
    assert_eq!(
        expr_type("cast<ptr<m1> t2 -> int(r2, {m1, m2})>(x)").unwrap(),
        ExprType::Known(int(2, &["m1", "m2"]))
    );
    assert_eq!(
        expr_type("cast<ptr<m1> t2 -> int(r2, {m1})>(x)").unwrap_err().kind,
        TypeErrorKind::UnreachableIntCast
    );
    assert_eq!(
        expr_type("cast<ptr<m2> t2 -> int(r1, {m1})>(x)").unwrap_err().kind,
        TypeErrorKind::CastSourceMismatch
    );
}

#[test]
fn reachability() {
    let c = ctx();
    assert!(reachable_int(&c, &Type::named("t2"), &int(2, &["m1", "m2"])).unwrap());
    assert!(reachable_int(&c, &int(1, &["m1"]), &int(1, &["m1"])).unwrap());
    assert!(!reachable_int(&c, &Type::void(), &int(1, &["m1"])).unwrap());
    let cyclic = TypeContext::new().with_type(
        "list",
        Type::structure([("next", Type::ptr(m1(), Type::named("list")))]),
    );
    assert!(!reachable_int(&cyclic, &Type::named("list"), &int(1, &["m1"])).unwrap());
    assert!(matches!(
        reachable_int(&c, &Type::named("ghost"), &int(1, &["m1"])).unwrap_err().kind,
        TypeErrorKind::UnboundType(_)
    ));
}

#[test]
fn definitions() {
    let hh = h();
    let c = ctx();
    assert!(check_defs(&hh, &c, &Def::Empty).is_ok());
    assert!(check_defs(&hh, &c, &Def::type_def("t2", t2_body())).is_ok());
    let err = check_defs(&hh, &c, &Def::type_def("t2", Type::void())).unwrap_err();
    assert_eq!(err.kind, TypeErrorKind::DefinitionMismatch("t2".into()));
}

#[test]
fn statements() {
    let hh = h();
    let c = ctx();
    let ok = |src: &str| check_stmt(&hh, &c, &parse_stmt(src).unwrap(), &m1());
    assert!(ok("skip").is_ok());
    assert!(ok("z := compute (*x).y1 at m1").is_ok());
    assert!(ok("if (*x).y1 then { skip } else { skip }").is_ok());
    let errs = ok("if x then { skip } else { skip }").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].kind, TypeErrorKind::NonIntegerGuard);
    assert!(ok("while 1 do { z := z + 1 }").is_ok());
    assert_eq!(ok("z := w").unwrap_err()[0].kind, TypeErrorKind::AssignMismatch);
    assert!(ok("compute { x := new t2 } at m1").is_ok());
    assert!(ok("compute { x := new t2 } at m2").is_ok());
    assert!(ok("x := modify_w(new t2, m2)").is_err());
    assert!(ok("x := compute new t2 at m1").is_ok());
}

#[test]
fn subsumption_on_assignment() {
    let hh = h();
    let c = ctx()
        .with_type("narrow", Type::structure([("y1", int(1, &["m1"]))]))
        .with_var("n", Type::named("narrow"));
    let s = parse_stmt("n := *x").unwrap();
    assert!(check_stmt(&hh, &c, &s, &m1()).is_ok());
    let back = parse_stmt("*x := n").unwrap();
    assert!(check_stmt(&hh, &c, &back, &m1()).is_err());
}

#[test]
fn whole_programs() {
    let hh = h();
    let motivating = format!(
        "type t1 = struct {{ f: ptr<m1> t2 }};\ntype t2 = {T2};\nvar x : ptr<m1> t2;\nskip"
    );
    assert!(check_program(&parse_program(&motivating).unwrap(), &hh).is_ok());
    assert!(check_program(&parse_program("skip").unwrap(), &hh).is_ok());
    let errs = check_program(&parse_program("var q : t3; skip").unwrap(), &hh).unwrap_err();
    assert_eq!(errs[0].kind, TypeErrorKind::UnboundType("t3".into()));
    assert_eq!(errs[0].span.line, 1);
}

#[test]
fn context_errors() {
    let hh = h();
    let errs = check_program(&parse_program("type a = struct { b: a }; skip").unwrap(), &hh).unwrap_err();
    assert_eq!(errs[0].kind, TypeErrorKind::CyclicType("a".into()));
    let ok = "type l = struct { v: int(r1, {m1}), next: ptr<m1> l }; skip";
    assert!(check_program(&parse_program(ok).unwrap(), &hh).is_ok());
    let errs = check_program(&parse_program("var q : int(r3, {m1}); skip").unwrap(), &hh).unwrap_err();
    assert_eq!(errs[0].kind, TypeErrorKind::UnknownRegion(RegionId::new(3)));
    let errs = check_program(&parse_program("var q : int(r1, {m7}); skip").unwrap(), &hh).unwrap_err();
    assert_eq!(errs[0].kind, TypeErrorKind::UnknownMachine(MachineId::new("m7")));
}

#[test]
fn errors_are_collected_and_deterministic() {
    let hh = h();
    let src = "var z : int(r1, {m1});\nvar x : ptr<m1> int(r1, {m1});\nz := x;\nx := z";
    let p = parse_program(src).unwrap();
    let a = check_program(&p, &hh).unwrap_err();
    assert_eq!(a.len(), 2);
    assert_eq!(a[0].span.line, 3);
    assert_eq!(a[1].span.line, 4);
    assert_eq!(a, check_program(&p, &hh).unwrap_err());
}
