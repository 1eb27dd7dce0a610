//! `dslice`: check, slice, run and compare DLang programs from the shell.

mod dot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dslice_core::interp::{
    canonical, confinement_violations, project, run_original, run_slice, MachineState, RunError, RunFailure,
    DEFAULT_FUEL,
};
use dslice_core::slicer::{all_coords, slice_all, slice_program, SliceCoord, SliceError};
use dslice_core::syntax::{parse_program, pretty, Span};
use dslice_core::{check_program, MachineHierarchy, MachineId, Program, RegionId, TypeContext, TypeError};

#[derive(Parser)]
#[command(name = "dslice", version, about = "Check, slice and run DLang programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Program source file.
    input: PathBuf,
    /// Machine hierarchy description.
    #[arg(long)]
    hier: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a program.
    Check {
        #[command(flatten)]
        src: Input,
    },
    /// Slice a program at one machine and region.
    Slice {
        #[command(flatten)]
        src: Input,
        #[arg(long)]
        machine: String,
        #[arg(long)]
        region: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Slice a program at every machine and region.
    SliceAll {
        #[command(flatten)]
        src: Input,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Write one file per machine holding all of its region slices.
        #[arg(long)]
        per_machine: bool,
    },
    /// Run a program. With --machine and --region the input is run as the slice for that coordinate.
    Run {
        #[command(flatten)]
        src: Input,
        #[arg(long, requires = "region")]
        machine: Option<String>,
        #[arg(long, requires = "machine")]
        region: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Print the final state in canonical form.
        #[arg(long)]
        dump: bool,
    },
    /// Check that every slice computes the projection of the original run.
    Equiv {
        #[command(flatten)]
        src: Input,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Print the final heap as a Graphviz graph.
    Dot {
        #[command(flatten)]
        src: Input,
        #[arg(long, value_enum, default_value_t = Stage::Before)]
        stage: Stage,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Before,
    After,
}

enum Failure {
    Language(Vec<String>),
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Language(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn diagnostic(file: &Path, span: Span, msg: impl std::fmt::Display) -> String {
    if span.line == 0 {
        format!("{}: error: {msg}", file.display())
    } else {
        format!("{}:{}:{}: error: {msg}", file.display(), span.line, span.col)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: error: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: error: {e}", path.display())))
}

fn type_errors(file: &Path, errs: Vec<TypeError>) -> Failure {
    Failure::Language(errs.into_iter().map(|e| diagnostic(file, e.span, &e)).collect())
}

fn slice_error(file: &Path, e: SliceError) -> Failure {
    match e {
        SliceError::IllTyped(errs) => type_errors(file, errs),
        e => Failure::Language(vec![diagnostic(file, e.span(), &e)]),
    }
}

fn run_error(file: &Path, f: RunFailure, coord: Option<&SliceCoord>) -> Failure {
    match f.kind {
        RunError::IllTyped(errs) => type_errors(file, errs),
        kind => {
            let msg = match coord {
                Some(c) => format!("{kind} at {c}"),
                None => kind.to_string(),
            };
            Failure::Runtime(diagnostic(file, f.span, msg))
        }
    }
}

struct Loaded {
    program: Program,
    hierarchy: MachineHierarchy,
}

fn load(src: &Input) -> Result<Loaded, Failure> {
    let hier_text = read(&src.hier)?;
    let text = read(&src.input)?;
    let hierarchy = MachineHierarchy::parse(&hier_text).map_err(|e| {
        let line = match &e {
            dslice_core::HierarchyError::Syntax { line, .. } => *line as u32,
            _ => 0,
        };
        Failure::Language(vec![diagnostic(&src.hier, Span::new(line, if line == 0 { 0 } else { 1 }), e)])
    })?;
    let program = parse_program(&text).map_err(|e| Failure::Language(vec![diagnostic(&src.input, e.span, &e.message)]))?;
    Ok(Loaded { program, hierarchy })
}

fn checked(src: &Input) -> Result<(Loaded, TypeContext), Failure> {
    let l = load(src)?;
    let ctx = check_program(&l.program, &l.hierarchy).map_err(|errs| type_errors(&src.input, errs))?;
    Ok((l, ctx))
}

fn coord(h: &MachineHierarchy, machine: &str, region: &str) -> Result<SliceCoord, Failure> {
    let m = MachineId::new(machine);
    if !h.contains(&m) {
        return Err(Failure::Usage(format!("error: machine `{machine}` is not in the hierarchy")));
    }
    match RegionId::parse_token(region) {
        Some(r) if h.has_region(r) => Ok(SliceCoord::new(m, r)),
        _ => Err(Failure::Usage(format!(
            "error: region `{region}` is not one of r1..r{}",
            h.region_count()
        ))),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
}

fn ensure_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: error: {e}", dir.display())))
}

fn cmd_check(src: &Input) -> Outcome {
    checked(src)?;
    Ok(())
}

fn cmd_slice(src: &Input, machine: &str, region: &str, out: &Path) -> Outcome {
    let (l, _) = checked(src)?;
    let c = coord(&l.hierarchy, machine, region)?;
    let slice = slice_program(&l.program, &c, &l.hierarchy).map_err(|e| slice_error(&src.input, e))?;
    ensure_dir(out)?;
    let path = out.join(format!("{}.{}.{}.dl", stem(&src.input), c.machine, c.region));
    write(&path, &pretty(&slice))?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_slice_all(src: &Input, out: &Path, per_machine: bool) -> Outcome {
    let (l, _) = checked(src)?;
    let slices = slice_all(&l.program, &l.hierarchy).map_err(|e| slice_error(&src.input, e))?;
    ensure_dir(out)?;
    let name = stem(&src.input);
    if per_machine {
        for m in l.hierarchy.machines() {
            let mut text = String::new();
            for (c, s) in slices.iter().filter(|(c, _)| &c.machine == m) {
                text.push_str(&format!("// region {}\n{}", c.region, pretty(s)));
            }
            let path = out.join(format!("{name}.{m}.dl"));
            write(&path, &text)?;
            println!("{}", path.display());
        }
    } else {
        for (c, s) in &slices {
            let path = out.join(format!("{name}.{}.{}.dl", c.machine, c.region));
            write(&path, &pretty(s))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn summary(s: &MachineState) -> String {
    let vars: usize = s.machines.values().map(|m| m.env.len()).sum();
    let cells: usize = s.machines.values().map(|m| m.heap.len()).sum();
    format!("finished: {} machine(s), {vars} variable(s), {cells} allocation(s)", s.machines.len())
}

fn cmd_run(src: &Input, at: Option<(&str, &str)>, fuel: u64, dump: bool) -> Outcome {
    let l = load(src)?;
    let state = match at {
        Some((m, r)) => {
            let c = coord(&l.hierarchy, m, r)?;
            run_slice(&l.program, &c, &l.hierarchy, fuel).map_err(|f| run_error(&src.input, f, Some(&c)))?
        }
        None => run_original(&l.program, &l.hierarchy, fuel).map_err(|f| run_error(&src.input, f, None))?,
    };
    if dump {
        print!("{}", canonical(&state));
    } else {
        println!("{}", summary(&state));
    }
    Ok(())
}

fn cmd_equiv(src: &Input, fuel: u64) -> Outcome {
    let (l, ctx) = checked(src)?;
    let orig = run_original(&l.program, &l.hierarchy, fuel).map_err(|f| run_error(&src.input, f, None))?;
    let mut failed = Vec::new();
    for c in all_coords(&l.hierarchy) {
        let slice = slice_program(&l.program, &c, &l.hierarchy).map_err(|e| slice_error(&src.input, e))?;
        let slice = parse_program(&pretty(&slice))
            .map_err(|e| Failure::Language(vec![format!("error: slice at {c} does not re-parse: {e}")]))?;
        let run = run_slice(&slice, &c, &l.hierarchy, fuel).map_err(|f| run_error(&src.input, f, Some(&c)))?;
        let leaks = confinement_violations(&run, &c);
        let verdict = if !leaks.is_empty() {
            Some(format!("foreign locations {}", leaks.join(", ")))
        } else if canonical(&project(&orig, &c, &ctx)) != canonical(&run) {
            Some("slice state differs from the projected original".to_string())
        } else {
            None
        };
        match verdict {
            None => println!("PASS {c}"),
            Some(why) => {
                println!("FAIL {c}: {why}");
                failed.push(c.to_string());
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Language(vec![format!(
            "{}: error: slices disagree with the original at {}",
            src.input.display(),
            failed.join(", ")
        )]))
    }
}

fn cmd_dot(src: &Input, stage: Stage, fuel: u64) -> Outcome {
    let (l, ctx) = checked(src)?;
    let state = run_original(&l.program, &l.hierarchy, fuel).map_err(|f| run_error(&src.input, f, None))?;
    let graph = match stage {
        Stage::Before => dot::before(&state),
        Stage::After => dot::after(&state, &all_coords(&l.hierarchy), &ctx),
    };
    print!("{graph}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check { src } => cmd_check(src),
        Command::Slice { src, machine, region, out } => cmd_slice(src, machine, region, out),
        Command::SliceAll { src, out, per_machine } => cmd_slice_all(src, out, *per_machine),
        Command::Run { src, machine, region, fuel, dump } => {
            let at = machine.as_deref().zip(region.as_deref());
            cmd_run(src, at, *fuel, *dump)
        }
        Command::Equiv { src, fuel } => cmd_equiv(src, *fuel),
        Command::Dot { src, stage, fuel } => cmd_dot(src, *stage, *fuel),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Language(lines) => lines.iter().for_each(|l| eprintln!("{l}")),
                Failure::Usage(msg) | Failure::Runtime(msg) => eprintln!("{msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
