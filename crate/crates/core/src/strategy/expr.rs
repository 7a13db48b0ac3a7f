//! Scoring expressions.
//!
//! An expression evaluates to one of three shapes over an M×N pass grid: a
//! scalar, a per-solution vector (length M) or a per-test vector (length N).
//! The two `MeanOver*` nodes are the only bridge between the solution and
//! test axes.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MAX_DEPTH: usize = 12;
pub const MAX_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Per-solution pass count.
    RowPassCount,
    /// Per-test pass count.
    ColPassCount,
    Const(f64),
    /// Min-max rescale to [0, 1]; constant inputs map to 0.5.
    Normalize(Box<Expr>),
    /// Mean of the child over the passers of each test (child per-solution),
    /// or over the tests passed by each solution (child per-test).
    MeanOverPassers(Box<Expr>),
    /// As `MeanOverPassers`, over failers / failed tests.
    MeanOverFailers(Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// ln((M + 1) / (1 + p_t)) per test.
    IdfWeight,
    /// 1 - p_t / M for tests passed by some but not all solutions, else 0.
    StrictnessWeight,
    /// Per test t: among solutions passing every other test, passers of t
    /// minus failers of t. Zero when N = 1.
    ExcludeSelfConsensus,
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Scalar,
    /// Per solution.
    Row,
    /// Per test.
    Col,
}

/// Node kinds, used by serialization and by mutation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    RowPassCount,
    ColPassCount,
    Const,
    Normalize,
    MeanOverPassers,
    MeanOverFailers,
    Sub,
    Add,
    Mul,
    IdfWeight,
    StrictnessWeight,
    ExcludeSelfConsensus,
    Neg,
}

impl Kind {
    pub const ALL: [Kind; 13] = [
        Kind::RowPassCount,
        Kind::ColPassCount,
        Kind::Const,
        Kind::Normalize,
        Kind::MeanOverPassers,
        Kind::MeanOverFailers,
        Kind::Sub,
        Kind::Add,
        Kind::Mul,
        Kind::IdfWeight,
        Kind::StrictnessWeight,
        Kind::ExcludeSelfConsensus,
        Kind::Neg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::RowPassCount => "RowPassCount",
            Kind::ColPassCount => "ColPassCount",
            Kind::Const => "Const",
            Kind::Normalize => "Normalize",
            Kind::MeanOverPassers => "MeanOverPassers",
            Kind::MeanOverFailers => "MeanOverFailers",
            Kind::Sub => "Sub",
            Kind::Add => "Add",
            Kind::Mul => "Mul",
            Kind::IdfWeight => "IdfWeight",
            Kind::StrictnessWeight => "StrictnessWeight",
            Kind::ExcludeSelfConsensus => "ExcludeSelfConsensus",
            Kind::Neg => "Neg",
        }
    }

    pub fn from_name(name: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Number of expression children (Const carries a number, not a child).
    pub fn arity(self) -> usize {
        match self {
            Kind::RowPassCount
            | Kind::ColPassCount
            | Kind::Const
            | Kind::IdfWeight
            | Kind::StrictnessWeight
            | Kind::ExcludeSelfConsensus => 0,
            Kind::Normalize | Kind::MeanOverPassers | Kind::MeanOverFailers | Kind::Neg => 1,
            Kind::Sub | Kind::Add | Kind::Mul => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprError {
    TooDeep(usize),
    TooLarge(usize),
    NonFiniteConst,
    /// Operand shapes cannot be combined.
    Shape(String),
    Parse(String),
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::TooDeep(d) => write!(f, "depth {d} exceeds {MAX_DEPTH}"),
            ExprError::TooLarge(n) => write!(f, "{n} nodes exceed {MAX_NODES}"),
            ExprError::NonFiniteConst => f.write_str("constant is not finite"),
            ExprError::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            ExprError::Parse(msg) => write!(f, "parse: {msg}"),
        }
    }
}

impl std::error::Error for ExprError {}

// Constructors named after the nodes they build, not operator overloads.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn normalize(e: Expr) -> Expr {
        Expr::Normalize(Box::new(e))
    }
    pub fn mean_over_passers(e: Expr) -> Expr {
        Expr::MeanOverPassers(Box::new(e))
    }
    pub fn mean_over_failers(e: Expr) -> Expr {
        Expr::MeanOverFailers(Box::new(e))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn kind(&self) -> Kind {
        match self {
            Expr::RowPassCount => Kind::RowPassCount,
            Expr::ColPassCount => Kind::ColPassCount,
            Expr::Const(_) => Kind::Const,
            Expr::Normalize(_) => Kind::Normalize,
            Expr::MeanOverPassers(_) => Kind::MeanOverPassers,
            Expr::MeanOverFailers(_) => Kind::MeanOverFailers,
            Expr::Sub(..) => Kind::Sub,
            Expr::Add(..) => Kind::Add,
            Expr::Mul(..) => Kind::Mul,
            Expr::IdfWeight => Kind::IdfWeight,
            Expr::StrictnessWeight => Kind::StrictnessWeight,
            Expr::ExcludeSelfConsensus => Kind::ExcludeSelfConsensus,
            Expr::Neg(_) => Kind::Neg,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Normalize(c) | Expr::MeanOverPassers(c) | Expr::MeanOverFailers(c) | Expr::Neg(c) => vec![c],
            Expr::Sub(a, b) | Expr::Add(a, b) | Expr::Mul(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Normalize(c) | Expr::MeanOverPassers(c) | Expr::MeanOverFailers(c) | Expr::Neg(c) => vec![c],
            Expr::Sub(a, b) | Expr::Add(a, b) | Expr::Mul(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Rebuilds a node of `kind` around `children`. `value` is used for Const.
    pub fn build(kind: Kind, mut children: Vec<Expr>, value: f64) -> Option<Expr> {
        if children.len() != kind.arity() {
            return None;
        }
        let mut next = || Box::new(children.remove(0));
        Some(match kind {
            Kind::RowPassCount => Expr::RowPassCount,
            Kind::ColPassCount => Expr::ColPassCount,
            Kind::Const => Expr::Const(value),
            Kind::IdfWeight => Expr::IdfWeight,
            Kind::StrictnessWeight => Expr::StrictnessWeight,
            Kind::ExcludeSelfConsensus => Expr::ExcludeSelfConsensus,
            Kind::Normalize => Expr::Normalize(next()),
            Kind::MeanOverPassers => Expr::MeanOverPassers(next()),
            Kind::MeanOverFailers => Expr::MeanOverFailers(next()),
            Kind::Neg => Expr::Neg(next()),
            Kind::Sub => {
                let a = next();
                Expr::Sub(a, next())
            }
            Kind::Add => {
                let a = next();
                Expr::Add(a, next())
            }
            Kind::Mul => {
                let a = next();
                Expr::Mul(a, next())
            }
        })
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Shape of the value this expression evaluates to.
    pub fn shape(&self) -> Result<Shape, ExprError> {
        match self {
            Expr::RowPassCount => Ok(Shape::Row),
            Expr::ColPassCount | Expr::IdfWeight | Expr::StrictnessWeight | Expr::ExcludeSelfConsensus => {
                Ok(Shape::Col)
            }
            Expr::Const(v) => {
                if v.is_finite() {
                    Ok(Shape::Scalar)
                } else {
                    Err(ExprError::NonFiniteConst)
                }
            }
            Expr::Normalize(c) | Expr::Neg(c) => c.shape(),
            Expr::MeanOverPassers(c) | Expr::MeanOverFailers(c) => match c.shape()? {
                Shape::Row => Ok(Shape::Col),
                Shape::Col => Ok(Shape::Row),
                Shape::Scalar => Err(ExprError::Shape(format!("{} needs a vector operand", self.kind().name()))),
            },
            Expr::Sub(a, b) | Expr::Add(a, b) | Expr::Mul(a, b) => combine(a.shape()?, b.shape()?)
                .ok_or_else(|| ExprError::Shape(format!("{} of per-solution and per-test operands", self.kind().name()))),
        }
    }

    /// Checks size bounds and that the expression produces `Scalar` or `target`.
    pub fn check(&self, target: Shape) -> Result<(), ExprError> {
        let depth = self.depth();
        if depth > MAX_DEPTH {
            return Err(ExprError::TooDeep(depth));
        }
        let nodes = self.node_count();
        if nodes > MAX_NODES {
            return Err(ExprError::TooLarge(nodes));
        }
        match self.shape()? {
            Shape::Scalar => Ok(()),
            s if s == target => Ok(()),
            s => Err(ExprError::Shape(format!("expression is {s:?}, expected {target:?}"))),
        }
    }

    /// Pre-order traversal.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::with_capacity(self.node_count());
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            out.push(e);
            for c in e.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Subtree at pre-order position `index`.
    pub fn subtree(&self, index: usize) -> Option<&Expr> {
        self.preorder().get(index).copied()
    }

    /// Copy with the subtree at pre-order position `index` replaced.
    pub fn replace(&self, index: usize, replacement: Expr) -> Option<Expr> {
        let mut out = self.clone();
        let mut counter = index;
        let slot = find_mut(&mut out, &mut counter)?;
        *slot = replacement;
        Some(out)
    }
}

fn find_mut<'a>(e: &'a mut Expr, remaining: &mut usize) -> Option<&'a mut Expr> {
    if *remaining == 0 {
        return Some(e);
    }
    *remaining -= 1;
    for c in e.children_mut() {
        let size = c.node_count();
        if *remaining < size {
            return find_mut(c, remaining);
        }
        *remaining -= size;
    }
    None
}

pub(crate) fn combine(a: Shape, b: Shape) -> Option<Shape> {
    match (a, b) {
        (Shape::Scalar, s) | (s, Shape::Scalar) => Some(s),
        (x, y) if x == y => Some(x),
        _ => None,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            e if e.kind().arity() == 0 => f.write_str(e.kind().name()),
            e => {
                write!(f, "{}(", e.kind().name())?;
                for (i, c) in e.children().into_iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

// Nested-array wire form: ["Sub", ["RowPassCount"], ["Const", 1.0]].
impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let children = self.children();
        let extra = usize::from(matches!(self, Expr::Const(_)));
        let mut seq = serializer.serialize_seq(Some(1 + children.len() + extra))?;
        seq.serialize_element(self.kind().name())?;
        if let Expr::Const(v) = self {
            seq.serialize_element(v)?;
        }
        for c in children {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        from_value(&value).map_err(|e| de::Error::custom(e.to_string()))
    }
}

pub fn from_value(value: &Value) -> Result<Expr, ExprError> {
    let items = value
        .as_array()
        .ok_or_else(|| ExprError::Parse(format!("expected an array, got {value}")))?;
    let (head, rest) = items
        .split_first()
        .ok_or_else(|| ExprError::Parse("empty expression array".into()))?;
    let name = head
        .as_str()
        .ok_or_else(|| ExprError::Parse(format!("node name must be a string, got {head}")))?;
    let kind = Kind::from_name(name).ok_or_else(|| ExprError::Parse(format!("unknown node `{name}`")))?;
    if kind == Kind::Const {
        return match rest {
            [v] => v
                .as_f64()
                .map(Expr::Const)
                .ok_or_else(|| ExprError::Parse(format!("Const needs a number, got {v}"))),
            _ => Err(ExprError::Parse("Const takes exactly one number".into())),
        };
    }
    if rest.len() != kind.arity() {
        return Err(ExprError::Parse(format!(
            "{name} takes {} operand(s), got {}",
            kind.arity(),
            rest.len()
        )));
    }
    let children = rest.iter().map(from_value).collect::<Result<Vec<_>, _>>()?;
    Ok(Expr::build(kind, children, 0.0).expect("arity checked"))
}
