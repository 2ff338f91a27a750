use std::fmt::{self, Write};

macro_rules! ops {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Every step the parser accepts after the `V()`/`E()` source.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Op { $($variant),* }

        impl Op {
            pub const ALL: &'static [Op] = &[$(Op::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(Op::$variant => $name),* }
            }

            pub fn from_name(name: &str) -> Option<Op> {
                match name { $($name => Some(Op::$variant),)* _ => None }
            }
        }
    };
}

ops! {
    Has => "has", HasLabel => "hasLabel", HasId => "hasId", HasNot => "hasNot",
    Out => "out", In => "in", Both => "both",
    OutE => "outE", InE => "inE", BothE => "bothE",
    OutV => "outV", InV => "inV", OtherV => "otherV",
    Values => "values", ValueMap => "valueMap", Label => "label", Id => "id",
    As => "as", Select => "select", Project => "project", By => "by",
    Limit => "limit", Range => "range",
    Count => "count", Fold => "fold", Unfold => "unfold", Dedup => "dedup",
    Order => "order", GroupCount => "groupCount",
    Sum => "sum", Min => "min", Max => "max", Mean => "mean",
    Where => "where", Is => "is", Not => "not",
    Repeat => "repeat", Times => "times", Until => "until", Emit => "emit",
    Path => "path", Choose => "choose", Coalesce => "coalesce", Union => "union",
    Branch => "branch", Match => "match",
    Constant => "constant", Identity => "identity",
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    V,
    E,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::V => "V",
            SourceKind::E => "E",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Literal {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Literal::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Literal::Int(i) => Some(*i),
            _ => None,
        }
    }
}

macro_rules! preds {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum PredOp { $($variant),* }

        impl PredOp {
            pub fn as_str(self) -> &'static str {
                match self { $(PredOp::$variant => $name),* }
            }

            pub fn from_name(name: &str) -> Option<PredOp> {
                match name { $($name => Some(PredOp::$variant),)* _ => None }
            }
        }
    };
}

preds! {
    Eq => "eq", Neq => "neq", Lt => "lt", Lte => "lte", Gt => "gt", Gte => "gte",
    Within => "within", Without => "without",
    Between => "between", Inside => "inside", Outside => "outside",
    Containing => "containing", StartingWith => "startingWith", EndingWith => "endingWith",
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub op: PredOp,
    pub args: Vec<Literal>,
}

/// A step argument.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Lit(Literal),
    Pred(Predicate),
    /// Bare or dotted enum-like token such as `desc`, `Order.desc`, `local`.
    Token(String),
    Anon(AnonTraversal),
}

impl Arg {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Arg::Lit(Literal::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Arg::Lit(Literal::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn as_anon(&self) -> Option<&AnonTraversal> {
        match self {
            Arg::Anon(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub op: Op,
    pub args: Vec<Arg>,
}

impl Step {
    pub fn new(op: Op, args: Vec<Arg>) -> Self {
        Step { op, args }
    }

    /// The label attached with `as('x')`, when this step is an `as`.
    pub fn alias(&self) -> Option<&str> {
        match self.op {
            Op::As => self.args.first().and_then(Arg::as_str),
            _ => None,
        }
    }
}

/// Nested traversal without a source, e.g. `select('a').values('name')`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonTraversal {
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub kind: SourceKind,
    pub args: Vec<Literal>,
}

/// A parsed `g.V()...` / `g.E()...` script.
#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    pub source: Source,
    pub steps: Vec<Step>,
}

impl Traversal {
    /// Canonical single-line rendering: no whitespace, single-quoted strings.
    pub fn pretty(&self) -> String {
        let mut out = String::from("g.");
        out.push_str(self.source.kind.as_str());
        out.push('(');
        for (i, a) in self.source.args.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_literal(&mut out, a);
        }
        out.push(')');
        for s in &self.steps {
            out.push('.');
            write_step(&mut out, s);
        }
        out
    }
}

impl fmt::Display for Traversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

impl AnonTraversal {
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        write_anon(&mut out, self);
        out
    }
}

fn write_step(out: &mut String, step: &Step) {
    out.push_str(step.op.as_str());
    out.push('(');
    for (i, a) in step.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_arg(out, a);
    }
    out.push(')');
}

fn write_anon(out: &mut String, anon: &AnonTraversal) {
    // Groovy keywords cannot start an anonymous traversal without `__.`
    if matches!(anon.steps.first().map(|s| s.op), Some(Op::In | Op::Not | Op::As)) {
        out.push_str("__.");
    }
    for (i, s) in anon.steps.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        write_step(out, s);
    }
}

fn write_arg(out: &mut String, arg: &Arg) {
    match arg {
        Arg::Lit(l) => write_literal(out, l),
        Arg::Token(t) => out.push_str(t),
        Arg::Anon(a) => write_anon(out, a),
        Arg::Pred(p) => {
            out.push_str(p.op.as_str());
            out.push('(');
            for (i, l) in p.args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_literal(out, l);
            }
            out.push(')');
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Str(s) => {
            out.push('\'');
            for ch in s.chars() {
                match ch {
                    '\'' => out.push_str("\\'"),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    c => out.push(c),
                }
            }
            out.push('\'');
        }
        Literal::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Literal::Float(f) => {
            let _ = write!(out, "{f:?}");
        }
        Literal::Bool(b) => {
            let _ = write!(out, "{b}");
        }
    }
}
