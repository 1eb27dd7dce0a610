//! Machine hierarchy: a rooted tree whose leaves are the machines of the
//! distributed system, plus the number of regions every machine carries.
//!
//! Levels are counted from the leaves upward. A leaf sits at level 1 and an
//! interior node sits one level above its tallest child, so the distance
//! between a machine and itself is 1 and every pointer width lies in
//! `1..=depth`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::Type;

/// Name of a machine; always a leaf of the hierarchy it is used with.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineId(String);

impl MachineId {
    pub fn new(name: impl Into<String>) -> Self {
        MachineId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One-based region index. Printed as `r<index>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(u32);

impl RegionId {
    /// Panics on zero; regions are numbered from 1.
    pub fn new(index: u32) -> Self {
        assert!(index >= 1, "region indices start at 1");
        RegionId(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Parses the `r<digits>` token form.
    pub fn parse_token(token: &str) -> Option<RegionId> {
        let digits = token.strip_prefix('r')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        match digits.parse::<u32>() {
            Ok(n) if n >= 1 => Some(RegionId(n)),
            _ => None,
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("machine `{0}` appears more than once in the hierarchy")]
    DuplicateMachine(MachineId),
    #[error("region count must be at least 1, found {0}")]
    InvalidRegionCount(u64),
    #[error("unknown machine `{0}`")]
    UnknownMachine(MachineId),
    #[error("width is only defined for pointer types, found `{0}`")]
    NotAPointer(Type),
}

/// Unvalidated hierarchy tree, as written in a description file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HierNode {
    Machine(MachineId),
    Group {
        name: Option<String>,
        children: Vec<HierNode>,
    },
}

impl HierNode {
    pub fn machine(name: &str) -> Self {
        HierNode::Machine(MachineId::new(name))
    }

    pub fn group(name: &str, children: Vec<HierNode>) -> Self {
        HierNode::Group {
            name: Some(name.to_string()),
            children,
        }
    }
}

#[derive(Debug, Clone)]
struct NodeInfo {
    level: u32,
}

#[derive(Debug, Clone)]
pub struct MachineHierarchy {
    region_count: u32,
    machines: Vec<MachineId>,
    nodes: Vec<NodeInfo>,
    // node indices from the root down to (and including) the leaf
    root_paths: HashMap<MachineId, Vec<usize>>,
    tree: HierNode,
}

impl MachineHierarchy {
    /// Builds and validates a hierarchy from an explicit tree.
    pub fn new(tree: HierNode, region_count: u32) -> Result<Self, HierarchyError> {
        if region_count < 1 {
            return Err(HierarchyError::InvalidRegionCount(region_count as u64));
        }
        let mut h = MachineHierarchy {
            region_count,
            machines: Vec::new(),
            nodes: Vec::new(),
            root_paths: HashMap::new(),
            tree: tree.clone(),
        };
        let mut path = Vec::new();
        h.index(&tree, &mut path)?;
        Ok(h)
    }

    fn index(&mut self, node: &HierNode, path: &mut Vec<usize>) -> Result<u32, HierarchyError> {
        let id = self.nodes.len();
        self.nodes.push(NodeInfo { level: 1 });
        path.push(id);
        let level = match node {
            HierNode::Machine(m) => {
                if self.root_paths.contains_key(m) {
                    return Err(HierarchyError::DuplicateMachine(m.clone()));
                }
                self.root_paths.insert(m.clone(), path.clone());
                self.machines.push(m.clone());
                1
            }
            HierNode::Group { children, .. } => {
                let mut tallest = 0;
                for child in children {
                    tallest = tallest.max(self.index(child, path)?);
                }
                tallest + 1
            }
        };
        path.pop();
        self.nodes[id].level = level;
        Ok(level)
    }

    /// Parses the `regions <n>; (<tree>)` description format.
    pub fn parse(text: &str) -> Result<Self, HierarchyError> {
        let (tree, regions) = parse_description(text)?;
        MachineHierarchy::new(tree, regions)
    }

    /// Machines in left-to-right leaf order.
    pub fn machines(&self) -> &[MachineId] {
        &self.machines
    }

    pub fn first_machine(&self) -> &MachineId {
        &self.machines[0]
    }

    pub fn contains(&self, m: &MachineId) -> bool {
        self.root_paths.contains_key(m)
    }

    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    pub fn region_count(&self) -> u32 {
        self.region_count
    }

    pub fn regions(&self) -> impl Iterator<Item = RegionId> {
        (1..=self.region_count).map(RegionId)
    }

    pub fn has_region(&self, r: RegionId) -> bool {
        r.0 <= self.region_count
    }

    pub fn tree(&self) -> &HierNode {
        &self.tree
    }

    /// Number of levels in the hierarchy.
    pub fn depth(&self) -> u32 {
        self.nodes[0].level
    }

    /// Level of the lowest common ancestor of `a` and `b`.
    pub fn distance(&self, a: &MachineId, b: &MachineId) -> Result<u32, HierarchyError> {
        let pa = self
            .root_paths
            .get(a)
            .ok_or_else(|| HierarchyError::UnknownMachine(a.clone()))?;
        let pb = self
            .root_paths
            .get(b)
            .ok_or_else(|| HierarchyError::UnknownMachine(b.clone()))?;
        let lca = pa
            .iter()
            .zip(pb)
            .take_while(|(x, y)| x == y)
            .last()
            .map(|(x, _)| *x)
            .expect("all root paths start at the root");
        Ok(self.nodes[lca].level)
    }

    /// Target machine and width of a pointer of type `ty` held on `hosting`.
    ///
    /// The width is a number while the pointer type is indexed by a machine;
    /// both are returned so callers can use whichever they need.
    pub fn width_f(&self, hosting: &MachineId, ty: &Type) -> Result<(MachineId, u32), HierarchyError> {
        match ty {
            Type::Ptr { machine, .. } => {
                let width = self.distance(hosting, machine)?;
                Ok((machine.clone(), width))
            }
            other => Err(HierarchyError::NotAPointer(other.clone())),
        }
    }
}

impl fmt::Display for MachineHierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(n: &HierNode, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                HierNode::Machine(m) => write!(f, "({m})"),
                HierNode::Group { name, children } => {
                    f.write_str("(")?;
                    f.write_str(name.as_deref().unwrap_or("group"))?;
                    for c in children {
                        f.write_str(" ")?;
                        node(c, f)?;
                    }
                    f.write_str(")")
                }
            }
        }
        write!(f, "regions {}; ", self.region_count)?;
        node(&self.tree, f)
    }
}

// ---------------------------------------------------------------------------
// description parser

#[derive(Debug, Clone, PartialEq)]
enum HTok {
    Open,
    Close,
    Semi,
    Word(String),
}

fn lex_description(text: &str) -> Result<Vec<(HTok, usize)>, HierarchyError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        let mut chars = line.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            match c {
                c if c.is_whitespace() => {}
                '(' => out.push((HTok::Open, line_no)),
                ')' => out.push((HTok::Close, line_no)),
                ';' => out.push((HTok::Semi, line_no)),
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut end = i + c.len_utf8();
                    while let Some(&(j, d)) = chars.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' {
                            end = j + d.len_utf8();
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    out.push((HTok::Word(line[i..end].to_string()), line_no));
                }
                other => {
                    return Err(HierarchyError::Syntax {
                        line: line_no,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

fn is_machine_name(w: &str) -> bool {
    let mut cs = w.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
}

struct DescParser {
    toks: Vec<(HTok, usize)>,
    pos: usize,
}

impl DescParser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.1)
            .unwrap_or(1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, HierarchyError> {
        Err(HierarchyError::Syntax {
            line: self.line(),
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<HTok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&HTok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn node(&mut self) -> Result<HierNode, HierarchyError> {
        match self.next() {
            Some(HTok::Word(w)) => {
                if !is_machine_name(&w) {
                    return self.err(format!("invalid machine name `{w}`"));
                }
                return Ok(HierNode::Machine(MachineId::new(w)));
            }
            Some(HTok::Open) => {}
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return self.err("expected `(` or a machine name");
            }
        }
        let name = match self.peek() {
            Some(HTok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Some(w)
            }
            _ => None,
        };
        let mut children = Vec::new();
        loop {
            match self.peek() {
                Some(HTok::Close) => {
                    self.pos += 1;
                    break;
                }
                Some(HTok::Open) | Some(HTok::Word(_)) => children.push(self.node()?),
                Some(_) => return self.err("unexpected token in hierarchy tree"),
                None => return self.err("unterminated `(` in hierarchy tree"),
            }
        }
        match (name, children.len()) {
            (Some(n), 0) => {
                if !is_machine_name(&n) {
                    return self.err(format!("invalid machine name `{n}`"));
                }
                Ok(HierNode::Machine(MachineId::new(n)))
            }
            (None, 0) => self.err("empty `()` in hierarchy tree"),
            // redundant parentheses around a single node
            (None, 1) => Ok(children.pop().expect("one child")),
            (name, _) => Ok(HierNode::Group { name, children }),
        }
    }
}

fn parse_description(text: &str) -> Result<(HierNode, u32), HierarchyError> {
    let toks = lex_description(text)?;
    let mut p = DescParser { toks, pos: 0 };
    match p.next() {
        Some(HTok::Word(w)) if w == "regions" => {}
        _ => {
            p.pos = 0;
            return p.err("expected `regions <count>;`");
        }
    }
    let regions = match p.next() {
        Some(HTok::Word(w)) if w.bytes().all(|b| b.is_ascii_digit()) => match w.parse::<u64>() {
            Ok(n) => n,
            Err(_) => return p.err("region count out of range"),
        },
        _ => {
            p.pos -= 1;
            return p.err("expected a region count");
        }
    };
    if regions < 1 || regions > u32::MAX as u64 {
        return Err(HierarchyError::InvalidRegionCount(regions));
    }
    if p.next() != Some(HTok::Semi) {
        p.pos -= 1;
        return p.err("expected `;` after the region count");
    }
    let tree = p.node()?;
    if p.peek().is_some() {
        return p.err("trailing input after hierarchy tree");
    }
    Ok((tree, regions as u32))
}
