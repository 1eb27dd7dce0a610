use super::*;
use crate::hierarchy::RegionId;
use crate::slicer::{all_coords, slice_program};
use crate::syntax::parse_program;

fn h() -> MachineHierarchy {
    MachineHierarchy::parse("regions 2; (root (m1) (m2))").unwrap()
}

fn m(name: &str) -> MachineId {
    MachineId::new(name)
}

fn coord(machine: &str, r: u32) -> SliceCoord {
    SliceCoord::new(m(machine), RegionId::new(r))
}

const ALLOC: &str = "var p : ptr<m1> int(r1, {m1}); p := new int(r1, {m1}); *p := 7";

#[test]
fn skip_leaves_the_initial_state() {
    let p = parse_program("var z : int(r1, {m1}); skip").unwrap();
    let s = run_original(&p, &h(), DEFAULT_FUEL).unwrap();
    assert_eq!(int_var(&s, &m("m1"), "z"), Some(0));
    assert_eq!(int_var(&s, &m("m2"), "z"), Some(0));
    assert!(s.machines.values().all(|mem| mem.heap.is_empty()));
    let empty = run_original(&parse_program("skip").unwrap(), &h(), DEFAULT_FUEL).unwrap();
    assert_eq!(canonical(&empty), "");
}

#[test]
fn allocation_and_store() {
    let s = run_original(&parse_program(ALLOC).unwrap(), &h(), DEFAULT_FUEL).unwrap();
    let Some(Value::Loc(l)) = s.var(&m("m1"), "p") else { panic!("p is not a location") };
    assert_eq!(l.machine, m("m1"));
    assert_eq!(s.load(l), Some(&Value::int(7)));
    assert_eq!(canonical(&s), "m1.p = &#1\nm2.p = null\n#1 @m1 = 7\n");
}

#[test]
fn fuel_runs_out() {
    let p = parse_program("while 1 do { skip }").unwrap();
    assert_eq!(run_original(&p, &h(), 1000).unwrap_err().kind, RunError::FuelExhausted);
}

#[test]
fn runtime_errors() {
    let hh = h();
    let run = |src: &str| run_original(&parse_program(src).unwrap(), &hh, DEFAULT_FUEL);
    let e = run("var p : ptr<m1> int(r1, {m1}); *p := 1").unwrap_err();
    assert_eq!(e.kind, RunError::NullDeref);
    assert_eq!(e.span.line, 1);
    assert_eq!(
        run("var z : int(r1, {m1}); z := 1 / z").unwrap_err().kind,
        RunError::DivisionByZero
    );
    let dangling = "var p : ptr<m1> int(r1, {m1}); var q : ptr<m2> int(r1, {m1});
        p := new int(r1, {m1}); q := modify_w(p, m2); *q := 3";
    assert!(matches!(run(dangling).unwrap_err().kind, RunError::Dangling(_)));
    let var_cast = "var z : int(r1, {m1}); var p : ptr<m1> int(r1, {m1});
        p := &z; z := cast<ptr<m1> int(r1, {m1}) -> int(r1, {m1})>(p)";
    assert_eq!(run(var_cast).unwrap_err().kind, RunError::VariableAddressCast("z".into()));
    assert!(matches!(run("var z : int(r1, {m1}); z := &z").unwrap_err().kind, RunError::IllTyped(_)));
}

#[test]
fn arithmetic_and_control() {
    let src = "var a : int(r1, {m1}); var b : int(r1, {m1});
        a := 0 - 7; b := a / 2;
        while a < 0 do { a := a + 3 };
        if a == 2 then { b := b * 10 } else { b := 0 }";
    let s = run_original(&parse_program(src).unwrap(), &h(), DEFAULT_FUEL).unwrap();
    assert_eq!(int_var(&s, &m("m1"), "a"), Some(2));
    assert_eq!(int_var(&s, &m("m1"), "b"), Some(-30));
}

#[test]
fn compute_at_switches_machine() {
    let src = "var z : int(r1, {m1, m2}); var p : ptr<m2> int(r1, {m1, m2});
        compute { z := 5; p := new int(r1, {m1, m2}) } at m2;
        z := compute z + 1 at m2";
    let s = run_original(&parse_program(src).unwrap(), &h(), DEFAULT_FUEL).unwrap();
    assert_eq!(int_var(&s, &m("m2"), "z"), Some(5));
    assert_eq!(int_var(&s, &m("m1"), "z"), Some(6));
    assert_eq!(s.machines[&m("m2")].heap.len(), 1);
    assert!(s.machines[&m("m1")].heap.is_empty());
}

#[test]
fn struct_stores_keep_the_target_shape() {
    let src = "type wide = struct { a: int(r1, {m1}), b: int(r2, {m1}) };
        type narrow = struct { a: int(r1, {m1}) };
        var w : ptr<m1> wide; var n : narrow;
        w := new wide; (*w).a := 4; (*w).b := 9; n := *w";
    let s = run_original(&parse_program(src).unwrap(), &h(), DEFAULT_FUEL).unwrap();
    assert_eq!(
        s.var(&m("m1"), "n"),
        Some(&Value::Struct(vec![("a".into(), Value::int(4))]))
    );
}

#[test]
fn projection_of_the_motivating_struct() {
    let src = "type t2 = struct { y1: int(r1, {m1}), y2: int(r2, {m1, m2}) };
        var v : t2; v.y1 := 5; v.y2 := 9";
    let p = parse_program(src).unwrap();
    let hh = h();
    let ctx = check_program(&p, &hh).unwrap();
    let s = run_original(&p, &hh, DEFAULT_FUEL).unwrap();
    let m1v = |c: SliceCoord| project(&s, &c, &ctx).var(&m("m1"), "v").cloned();
    assert_eq!(m1v(coord("m1", 1)), Some(Value::Struct(vec![("y1".into(), Value::int(5))])));
    assert_eq!(m1v(coord("m2", 1)), None);
    assert_eq!(m1v(coord("m2", 2)), Some(Value::Struct(vec![("y2".into(), Value::int(9))])));
    let empty = run_original(&parse_program("skip").unwrap(), &hh, DEFAULT_FUEL).unwrap();
    assert_eq!(canonical(&project(&empty, &coord("m1", 1), &TypeContext::new())), "");
}

#[test]
fn slices_commute_with_projection() {
    let hh = h();
    let p = parse_program(ALLOC).unwrap();
    let ctx = check_program(&p, &hh).unwrap();
    let orig = run_original(&p, &hh, DEFAULT_FUEL).unwrap();
    for c in all_coords(&hh) {
        let slice = slice_program(&p, &c, &hh).unwrap();
        let sliced = run_slice(&slice, &c, &hh, DEFAULT_FUEL).unwrap();
        assert!(confinement_violations(&sliced, &c).is_empty());
        assert_eq!(canonical(&project(&orig, &c, &ctx)), canonical(&sliced), "at {c}");
        if c != coord("m1", 1) {
            assert!(slice.body.is_noop());
            assert_eq!(canonical(&sliced), "");
        }
    }
}

#[test]
fn slice_runs_reject_foreign_variables() {
    let hh = h();
    let p = parse_program("var z : int(r1, {m1}); z.(r2, m1) := 1").unwrap();
    let e = run_slice(&p, &coord("m1", 1), &hh, DEFAULT_FUEL).unwrap_err();
    assert!(matches!(e.kind, RunError::RegionViolation(_)));
    let plain = parse_program("var z : int(r1, {m1}); z := 1").unwrap();
    assert!(matches!(
        run_slice(&plain, &coord("m1", 1), &hh, DEFAULT_FUEL).unwrap_err().kind,
        RunError::RegionViolation(_)
    ));
}

#[test]
fn canonical_form_ignores_allocation_ids() {
    let a = "var p : ptr<m1> int(r1, {m1}); var q : ptr<m1> int(r1, {m1});
        p := new int(r1, {m1}); q := new int(r1, {m1}); *q := 2";
    let b = "var p : ptr<m1> int(r1, {m1}); var q : ptr<m1> int(r1, {m1});
        q := new int(r1, {m1}); p := new int(r1, {m1}); *q := 2";
    let hh = h();
    let sa = run_original(&parse_program(a).unwrap(), &hh, DEFAULT_FUEL).unwrap();
    let sb = run_original(&parse_program(b).unwrap(), &hh, DEFAULT_FUEL).unwrap();
    assert!(equivalent(&sa, &sb));
    assert!(equivalent(&sa, &sa.clone()));
    let c = "var p : ptr<m1> int(r1, {m1}); var q : ptr<m1> int(r1, {m1});
        p := new int(r1, {m1}); q := new int(r1, {m1}); *q := 3";
    let sc = run_original(&parse_program(c).unwrap(), &hh, DEFAULT_FUEL).unwrap();
    assert!(!equivalent(&sa, &sc));
}

#[test]
fn runs_are_deterministic() {
    let hh = h();
    let p = parse_program(ALLOC).unwrap();
    let a = run_original(&p, &hh, DEFAULT_FUEL).unwrap();
    let b = run_original(&p, &hh, DEFAULT_FUEL).unwrap();
    assert_eq!(a, b);
}
