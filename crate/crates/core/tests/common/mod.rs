#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dslice_core::interp::{
    canonical, confinement_violations, project, run_original, run_slice, DEFAULT_FUEL,
};
use dslice_core::generate::{generate, GenConfig, Generator};
use dslice_core::slicer::{
    all_coords, foreign_references, slice_all, slice_expr, slice_program, slice_type, SliceCoord, SlicedDefTable,
};
use dslice_core::syntax::{parse_program, pretty, Def, Stmt, Type, VarDecl};
use dslice_core::typecheck::{check_program, type_of_expr, ExprType, TypeContext};
use dslice_core::{MachineHierarchy, MachineId, Program, RegionId};

pub struct Entry {
    pub name: String,
    pub source: String,
    pub program: Program,
    pub hierarchy: MachineHierarchy,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn two_machines() -> MachineHierarchy {
    MachineHierarchy::parse("regions 2; (root (m1) (m2))").unwrap()
}

/// Every `.dl` file in the corpus with the hierarchy named in its first
/// line (`// hierarchy: <file>`).
pub fn corpus() -> Vec<Entry> {
    let dir = corpus_dir();
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "dl"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|path| {
            let source = std::fs::read_to_string(&path).unwrap();
            let hier_file = source
                .lines()
                .next()
                .and_then(|l| l.strip_prefix("// hierarchy:"))
                .map(str::trim)
                .unwrap_or_else(|| panic!("{} lacks a hierarchy header", path.display()));
            let hierarchy = MachineHierarchy::parse(&std::fs::read_to_string(dir.join(hier_file)).unwrap()).unwrap();
            let program = parse_program(&source).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            Entry {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                source,
                program,
                hierarchy,
            }
        })
        .collect()
}

/// Slices an entry everywhere and compares the projected original run with
/// each sliced run. Returns the number of coordinates checked.
pub fn check_commutation(e: &Entry) -> Result<usize, String> {
    let ctx = check_program(&e.program, &e.hierarchy).map_err(|errs| format!("{}: {errs:?}", e.name))?;
    let orig = run_original(&e.program, &e.hierarchy, DEFAULT_FUEL).map_err(|f| format!("{}: {f}", e.name))?;
    let slices = slice_all(&e.program, &e.hierarchy).map_err(|err| format!("{}: {err}", e.name))?;
    for (c, s) in &slices {
        let reparsed = parse_program(&pretty(s)).map_err(|err| format!("{} at {c}: {err}", e.name))?;
        let run = run_slice(&reparsed, c, &e.hierarchy, DEFAULT_FUEL).map_err(|f| format!("{} at {c}: {f}", e.name))?;
        let v = confinement_violations(&run, c);
        if !v.is_empty() {
            return Err(format!("{} at {c}: {v:?}", e.name));
        }
        let expected = canonical(&project(&orig, c, &ctx));
        let got = canonical(&run);
        if expected != got {
            return Err(format!("{} at {c}:\nprojected original:\n{expected}\nslice run:\n{got}", e.name));
        }
    }
    Ok(slices.len())
}

/// Foreign-region references in a slice, as produced by the slicer.
pub fn slice_confinement(p: &Program, c: &SliceCoord) -> Vec<String> {
    foreign_references(p, c)
}

/// Slices a generated program everywhere; every slice must re-parse,
/// re-check and stay inside its coordinate.
pub fn theorem1(seed: u64) -> Result<usize, String> {
    let (h, p) = generate(seed, &GenConfig::default());
    check_program(&p, &h).map_err(|e| format!("seed {seed}: generated program rejected: {e:?}"))?;
    let slices = slice_all(&p, &h).map_err(|e| format!("seed {seed}: {e}"))?;
    for (c, s) in &slices {
        let text = pretty(s);
        let back = parse_program(&text).map_err(|e| format!("seed {seed} at {c}: {e}"))?;
        check_program(&back, &h).map_err(|e| format!("seed {seed} at {c}: {e:?}\n{text}"))?;
        let v = foreign_references(s, c);
        if !v.is_empty() {
            return Err(format!("seed {seed} at {c}: foreign references {v:?}"));
        }
    }
    Ok(slices.len())
}

fn program_of(ctx: &TypeContext) -> Program {
    let defs = Def::from_list(ctx.type_names.iter().map(|(n, t)| Def::type_def(n, t.clone())).collect());
    let vars = ctx.vars.iter().map(|(n, t)| VarDecl::new(n, t.clone())).collect();
    Program::new(defs, vars, Stmt::Skip)
}

fn ptr_machine(t: &ExprType) -> Option<MachineId> {
    match t {
        ExprType::Known(Type::Ptr { machine, .. }) => Some(machine.clone()),
        _ => None,
    }
}

/// Generates pointer-typed expressions and compares their machine parameter
/// and pointer width before and after slicing at every coordinate where the
/// expression survives. Returns the number of comparisons made.
pub fn corollary2(seed: u64, exprs: usize) -> Result<usize, String> {
    use rand::SeedableRng;
    let cfg = GenConfig {
        machines: if seed % 2 == 0 { 2 } else { 3 },
        ..GenConfig::default()
    };
    let mut g = Generator::new(rand_chacha::ChaCha8Rng::seed_from_u64(seed), cfg);
    let h = g.hierarchy().clone();
    let ctx = g.context().clone();
    let base = program_of(&ctx);
    let tbl = SlicedDefTable::for_hierarchy(&ctx, &h);
    let start = h.first_machine().clone();
    let mut compared = 0;
    for _ in 0..exprs {
        let ty = g.pointer_type();
        let e = g.expr(&ty, 3);
        let before = type_of_expr(&h, &ctx, &e, &start).map_err(|err| format!("seed {seed}: `{e}`: {err}"))?;
        let m_before = ptr_machine(&before).ok_or_else(|| format!("seed {seed}: `{e}` is not a pointer"))?;
        for c in all_coords(&h) {
            if slice_type(&ty, &c, &tbl).map_err(|err| err.to_string())?.is_void() {
                continue;
            }
            let Ok(sliced) = slice_expr(&e, &c, &tbl) else { continue };
            let sp = slice_program(&base, &c, &h).map_err(|err| err.to_string())?;
            let sctx = TypeContext::from_program(&sp, &h).map_err(|err| format!("{err:?}"))?;
            let after = type_of_expr(&h, &sctx, &sliced, &start)
                .map_err(|err| format!("seed {seed} at {c}: `{sliced}`: {err}"))?;
            let m_after = ptr_machine(&after).ok_or_else(|| format!("seed {seed} at {c}: `{sliced}` lost its pointer type"))?;
            if m_before != m_after {
                return Err(format!("seed {seed} at {c}: `{e}` targets {m_before}, slice targets {m_after}"));
            }
            for host in h.machines() {
                let wb = h.width_f(host, before.known().unwrap()).map_err(|err| err.to_string())?;
                let wa = h.width_f(host, after.known().unwrap()).map_err(|err| err.to_string())?;
                if wb != wa {
                    return Err(format!("seed {seed} at {c}: width {wb:?} became {wa:?}"));
                }
            }
            compared += 1;
        }
    }
    Ok(compared)
}

/// Named types available to the exhaustive type enumeration.
pub fn lemma1_context() -> TypeContext {
    let m1 = MachineId::new("m1");
    let m2 = MachineId::new("m2");
    TypeContext::new()
        .with_type("a", Type::structure([("p", Type::int(RegionId::new(1), [m1.clone()]))]))
        .with_type("b", Type::structure([("q", Type::ptr(m2, Type::named("b")))]))
        .with_type("c", Type::structure([("r", Type::int(RegionId::new(2), [m1.clone()])), ("s", Type::ptr(m1, Type::named("c")))]))
}

/// Every type of constructor depth ≤ `depth` over machines m1, m2, regions
/// r1, r2, the names of [`lemma1_context`], and structs of one or two fields.
pub fn all_types(depth: u32) -> Vec<Type> {
    let ms = [MachineId::new("m1"), MachineId::new("m2")];
    let mut level: Vec<Type> = Vec::new();
    for r in 1..=2 {
        for set in [vec![ms[0].clone()], vec![ms[1].clone()], ms.to_vec()] {
            level.push(Type::int(RegionId::new(r), set));
        }
    }
    for n in ["a", "b", "c"] {
        level.push(Type::named(n));
    }
    level.push(Type::void());
    let mut all = level.clone();
    for _ in 1..depth {
        let prev = all.clone();
        let mut next = Vec::new();
        for t in &prev {
            for m in &ms {
                next.push(Type::ptr(m.clone(), t.clone()));
            }
            next.push(Type::structure([("f0", t.clone())]));
            for u in &prev {
                next.push(Type::structure([("f0", t.clone()), ("f1", u.clone())]));
            }
        }
        all = level.clone();
        all.extend(next);
    }
    all
}

/// `Ok` when the slice is void or keeps the original's head constructor.
pub fn same_head(orig: &Type, sliced: &Type) -> Result<(), String> {
    if sliced.is_void() {
        return Ok(());
    }
    let ok = match (orig, sliced) {
        (Type::Int { .. }, s) => s == orig,
        (Type::Ptr { machine: a, .. }, Type::Ptr { machine: b, .. }) => a == b,
        (Type::Struct(fa), Type::Struct(fb)) => {
            let mut labels = fa.iter().map(|(l, _)| l);
            fb.iter().all(|(l, _)| labels.any(|x| x == l))
        }
        (Type::Named(_), Type::Named(_)) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("`{orig}` sliced to `{sliced}`"))
    }
}

pub fn lemma1(depth: u32) -> Result<usize, String> {
    let ctx = lemma1_context();
    let h = two_machines();
    let coords = all_coords(&h);
    let tbl = SlicedDefTable::build(&ctx, &coords);
    let mut n = 0;
    for t in all_types(depth) {
        for c in &coords {
            let s = slice_type(&t, c, &tbl).map_err(|e| e.to_string())?;
            same_head(&t, &s).map_err(|e| format!("{e} at {c}"))?;
            n += 1;
        }
    }
    Ok(n)
}

pub fn round_trip_generated(seed: u64) -> Result<(), String> {
    let (_, p) = generate(seed, &GenConfig::default());
    let text = pretty(&p);
    let back = parse_program(&text).map_err(|e| format!("seed {seed}: {e}\n{text}"))?;
    if dslice_core::ast_equal(&p, &back) {
        Ok(())
    } else {
        Err(format!("seed {seed}: round trip changed the program\n{text}"))
    }
}
