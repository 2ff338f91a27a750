//! Tree-walking interpreter over [`PropertyGraph`].
//!
//! Traversers move through the step list stage by stage. Every stage keeps
//! the incoming order, and sources start in element-id order, so results are
//! reproducible for a given graph and script.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{AnonTraversal, Arg, Literal, Op, PredOp, Predicate, SourceKind, Step, Traversal};
use super::catalog;
use crate::graph::PropertyGraph;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    pub max_visited_elements: u64,
    pub max_repeat_depth: u32,
    #[serde(with = "millis")]
    pub wall_time: Duration,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            max_visited_elements: 1_000_000,
            max_repeat_depth: 16,
            wall_time: Duration::from_secs(5),
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("limit exceeded: {0}")]
    LimitExceeded(String),
    #[error("runtime type error: {0}")]
    RuntimeTypeError(String),
    #[error("unsupported operator: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultSet {
    pub rows: Vec<Value>,
}

impl ResultSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.rows.iter().map(Value::to_json).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Obj {
    V(usize),
    E(usize),
    Val(Value),
}

#[derive(Debug, Clone)]
struct Traverser {
    obj: Obj,
    path: Vec<Obj>,
    labels: Vec<(String, Obj)>,
}

impl Traverser {
    fn start(obj: Obj) -> Self {
        Traverser {
            path: vec![obj.clone()],
            obj,
            labels: Vec::new(),
        }
    }

    fn to(&self, obj: Obj) -> Self {
        let mut path = self.path.clone();
        path.push(obj.clone());
        Traverser {
            obj,
            path,
            labels: self.labels.clone(),
        }
    }

    fn label(&self, name: &str) -> Option<&Obj> {
        self.labels.iter().rev().find(|(l, _)| l == name).map(|(_, o)| o)
    }
}

/// A step plus the modulators that configure it.
struct Stage<'a> {
    step: &'a Step,
    by: Vec<&'a [Arg]>,
    times: Option<i64>,
    until: Option<&'a AnonTraversal>,
    emit: Option<Option<&'a AnonTraversal>>,
}

fn compile(steps: &[Step]) -> Result<Vec<Stage<'_>>, ExecError> {
    let mut out: Vec<Stage> = Vec::new();
    let mut pending_until = None;
    let mut pending_emit = None;
    for step in steps {
        if catalog::is_parse_only(step.op) {
            return Err(ExecError::Unsupported(step.op.to_string()));
        }
        let last_repeat = out.last().is_some_and(|s| s.step.op == Op::Repeat);
        match step.op {
            Op::By => match out.last_mut() {
                Some(s) => s.by.push(&step.args),
                None => return Err(ExecError::RuntimeTypeError("by() without a step to modulate".into())),
            },
            Op::Times if last_repeat => out.last_mut().unwrap().times = step.args.first().and_then(Arg::as_int),
            Op::Until | Op::Emit => {
                let anon = step.args.first().and_then(Arg::as_anon);
                if last_repeat {
                    let s = out.last_mut().unwrap();
                    if step.op == Op::Until {
                        s.until = anon;
                    } else {
                        s.emit = Some(anon);
                    }
                } else if step.op == Op::Until {
                    pending_until = anon;
                } else {
                    pending_emit = Some(anon);
                }
            }
            Op::Times => return Err(ExecError::RuntimeTypeError("times() must follow repeat()".into())),
            _ => {
                let mut stage = Stage {
                    step,
                    by: Vec::new(),
                    times: None,
                    until: None,
                    emit: None,
                };
                if step.op == Op::Repeat {
                    stage.until = pending_until.take();
                    stage.emit = pending_emit.take();
                }
                out.push(stage);
            }
        }
    }
    Ok(out)
}

struct Exec<'g> {
    g: &'g PropertyGraph,
    limits: ExecutionLimits,
    started: Instant,
    visited: u64,
}

/// Runs `t` against `g`. The traversal is assumed to have passed validation;
/// shape errors that slip through surface as `RuntimeTypeError`.
pub fn execute(t: &Traversal, g: &PropertyGraph, limits: ExecutionLimits) -> Result<ResultSet, ExecError> {
    let mut ex = Exec {
        g,
        limits,
        started: Instant::now(),
        visited: 0,
    };
    let ids: Vec<Value> = t.source.args.iter().map(lit_value).collect();
    let mut start = Vec::new();
    match t.source.kind {
        SourceKind::V => {
            for (i, v) in g.vertices().iter().enumerate() {
                if ids.is_empty() || ids.iter().any(|id| id.as_str() == Some(v.id.as_str())) {
                    start.push(Traverser::start(Obj::V(i)));
                }
            }
        }
        SourceKind::E => {
            for (i, e) in g.edges().iter().enumerate() {
                if ids.is_empty() || ids.iter().any(|id| id.as_str() == Some(e.id.as_str())) {
                    start.push(Traverser::start(Obj::E(i)));
                }
            }
        }
    }
    ex.tick(start.len())?;
    let out = ex.run(&t.steps, start)?;
    Ok(ResultSet {
        rows: out.into_iter().map(|tr| ex.value(&tr.obj)).collect(),
    })
}

fn lit_value(l: &Literal) -> Value {
    match l {
        Literal::Str(s) => Value::Str(s.clone()),
        Literal::Int(i) => Value::Int(*i),
        Literal::Float(f) => Value::Decimal(*f),
        Literal::Bool(b) => Value::Bool(*b),
    }
}

fn token_name(t: &str) -> &str {
    t.rsplit('.').next().unwrap_or(t)
}

fn type_err<T>(msg: impl Into<String>) -> Result<T, ExecError> {
    Err(ExecError::RuntimeTypeError(msg.into()))
}

fn is_local(args: &[Arg]) -> bool {
    matches!(args.first(), Some(Arg::Token(t)) if token_name(t) == "local")
}

impl<'g> Exec<'g> {
    fn tick(&mut self, n: usize) -> Result<(), ExecError> {
        self.visited += n as u64;
        if self.visited > self.limits.max_visited_elements {
            return Err(ExecError::LimitExceeded(format!(
                "visited more than {} elements",
                self.limits.max_visited_elements
            )));
        }
        if self.started.elapsed() > self.limits.wall_time {
            return Err(ExecError::LimitExceeded(format!(
                "wall time above {} ms",
                self.limits.wall_time.as_millis()
            )));
        }
        Ok(())
    }

    fn value(&self, obj: &Obj) -> Value {
        match obj {
            Obj::V(i) => Value::Element(self.g.vertices()[*i].element()),
            Obj::E(i) => Value::Element(self.g.edges()[*i].element()),
            Obj::Val(v) => v.clone(),
        }
    }

    fn prop(&self, obj: &Obj, key: &str) -> Option<Value> {
        match obj {
            Obj::V(i) => {
                let v = &self.g.vertices()[*i];
                match key {
                    "T.id" | "id" if !v.props.contains_key(key) => Some(Value::Str(v.id.clone())),
                    "T.label" | "label" if !v.props.contains_key(key) => Some(Value::Str(v.label.clone())),
                    _ => v.props.get(key).cloned(),
                }
            }
            Obj::E(i) => {
                let e = &self.g.edges()[*i];
                match key {
                    "T.id" | "id" if !e.props.contains_key(key) => Some(Value::Str(e.id.clone())),
                    "T.label" | "label" if !e.props.contains_key(key) => Some(Value::Str(e.label.clone())),
                    _ => e.props.get(key).cloned(),
                }
            }
            Obj::Val(Value::Map(m)) => m.get(key).cloned(),
            Obj::Val(_) => None,
        }
    }

    fn label_of(&self, obj: &Obj) -> Option<&str> {
        match obj {
            Obj::V(i) => Some(&self.g.vertices()[*i].label),
            Obj::E(i) => Some(&self.g.edges()[*i].label),
            Obj::Val(_) => None,
        }
    }

    fn id_of(&self, obj: &Obj) -> Option<&str> {
        match obj {
            Obj::V(i) => Some(&self.g.vertices()[*i].id),
            Obj::E(i) => Some(&self.g.edges()[*i].id),
            Obj::Val(_) => None,
        }
    }

    fn run(&mut self, steps: &[Step], input: Vec<Traverser>) -> Result<Vec<Traverser>, ExecError> {
        let stages = compile(steps)?;
        let mut cur = input;
        for stage in &stages {
            cur = self.stage(stage, cur)?;
            self.tick(cur.len())?;
        }
        Ok(cur)
    }

    fn run_one(&mut self, anon: &AnonTraversal, t: &Traverser) -> Result<Vec<Traverser>, ExecError> {
        self.run(&anon.steps, vec![t.clone()])
    }

    /// Resolves a predicate argument: strings naming a step label compare
    /// against that labelled object, anything else is a literal.
    fn resolve_pred(&self, p: &Predicate, t: &Traverser) -> Vec<Value> {
        p.args
            .iter()
            .map(|a| match a {
                Literal::Str(s) => match t.label(s) {
                    Some(o) => self.value(o),
                    None => Value::Str(s.clone()),
                },
                other => lit_value(other),
            })
            .collect()
    }

    fn stage(&mut self, st: &Stage, input: Vec<Traverser>) -> Result<Vec<Traverser>, ExecError> {
        let step = st.step;
        let args = &step.args;
        let mut out = Vec::new();
        match step.op {
            Op::Has => {
                let (label, key, test) = match args.as_slice() {
                    [k] => (None, k, None),
                    [k, v] => (None, k, Some(v)),
                    [l, k, v] => (l.as_str(), k, Some(v)),
                    _ => return type_err("has() arity"),
                };
                let key = match key {
                    Arg::Lit(Literal::Str(s)) => s.clone(),
                    Arg::Token(t) => format!("T.{}", token_name(t)),
                    _ => return type_err("has() key must be a string"),
                };
                for t in input {
                    if let Some(l) = label {
                        if self.label_of(&t.obj) != Some(l) {
                            continue;
                        }
                    }
                    if matches!(t.obj, Obj::Val(_)) {
                        continue;
                    }
                    let Some(v) = self.prop(&t.obj, &key) else { continue };
                    let keep = match test {
                        None => true,
                        Some(Arg::Lit(l)) => v.loose_eq(&lit_value(l)),
                        Some(Arg::Pred(p)) => eval_pred(p.op, &self.resolve_pred(p, &t), &v)?,
                        Some(_) => return type_err("has() value must be a literal or predicate"),
                    };
                    if keep {
                        out.push(t);
                    }
                }
            }
            Op::HasLabel => {
                let names: Vec<&str> = args.iter().filter_map(Arg::as_str).collect();
                out = input
                    .into_iter()
                    .filter(|t| self.label_of(&t.obj).is_some_and(|l| names.contains(&l)))
                    .collect();
            }
            Op::HasId => {
                let ids: Vec<Value> = args
                    .iter()
                    .filter_map(|a| match a {
                        Arg::Lit(l) => Some(lit_value(l)),
                        _ => None,
                    })
                    .collect();
                out = input
                    .into_iter()
                    .filter(|t| {
                        self.id_of(&t.obj)
                            .is_some_and(|id| ids.iter().any(|v| v.as_str() == Some(id)))
                    })
                    .collect();
            }
            Op::HasNot => {
                let key = args.first().and_then(Arg::as_str).unwrap_or_default();
                out = input
                    .into_iter()
                    .filter(|t| !matches!(t.obj, Obj::Val(_)) && self.prop(&t.obj, key).is_none())
                    .collect();
            }
            Op::Out | Op::In | Op::Both | Op::OutE | Op::InE | Op::BothE => {
                let names: Vec<&str> = args.iter().filter_map(Arg::as_str).collect();
                let want_out = matches!(step.op, Op::Out | Op::OutE | Op::Both | Op::BothE);
                let want_in = matches!(step.op, Op::In | Op::InE | Op::Both | Op::BothE);
                let edges_only = matches!(step.op, Op::OutE | Op::InE | Op::BothE);
                for t in input {
                    let Obj::V(pos) = t.obj else {
                        return type_err(format!("{}() applied to a non-vertex", step.op));
                    };
                    let hop = |adj: &[usize], outward: bool, out: &mut Vec<Traverser>| {
                        for &ei in adj {
                            let e = &self.g.edges()[ei];
                            if !names.is_empty() && !names.contains(&e.label.as_str()) {
                                continue;
                            }
                            if edges_only {
                                out.push(t.to(Obj::E(ei)));
                            } else {
                                let other = if outward { &e.dst } else { &e.src };
                                let vi = self.g.vertex_index(other).expect("edge endpoint exists");
                                out.push(t.to(Obj::V(vi)));
                            }
                        }
                    };
                    if want_out {
                        hop(self.g.out_edges(pos), true, &mut out);
                    }
                    if want_in {
                        hop(self.g.in_edges(pos), false, &mut out);
                    }
                }
            }
            Op::OutV | Op::InV | Op::OtherV => {
                for t in input {
                    let Obj::E(ei) = t.obj else {
                        return type_err(format!("{}() applied to a non-edge", step.op));
                    };
                    let e = &self.g.edges()[ei];
                    let id = match step.op {
                        Op::OutV => &e.src,
                        Op::InV => &e.dst,
                        _ => {
                            let prev = t.path.iter().rev().nth(1);
                            match prev {
                                Some(Obj::V(p)) if self.g.vertices()[*p].id == e.src => &e.dst,
                                _ => &e.src,
                            }
                        }
                    };
                    let vi = self.g.vertex_index(id).expect("edge endpoint exists");
                    out.push(t.to(Obj::V(vi)));
                }
            }
            Op::Values => {
                let keys: Vec<&str> = args.iter().filter_map(Arg::as_str).collect();
                for t in input {
                    match &t.obj {
                        Obj::V(_) | Obj::E(_) => {
                            let props = self.props_of(&t.obj);
                            if keys.is_empty() {
                                for v in props.values() {
                                    out.push(t.to(Obj::Val(v.clone())));
                                }
                            } else {
                                for k in &keys {
                                    if let Some(v) = props.get(*k) {
                                        out.push(t.to(Obj::Val(v.clone())));
                                    }
                                }
                            }
                        }
                        Obj::Val(Value::Map(m)) => {
                            for k in &keys {
                                if let Some(v) = m.get(*k) {
                                    out.push(t.to(Obj::Val(v.clone())));
                                }
                            }
                        }
                        Obj::Val(_) => return type_err("values() applied to a non-element"),
                    }
                }
            }
            Op::ValueMap => {
                let keys: Vec<&str> = args.iter().filter_map(Arg::as_str).collect();
                for t in input {
                    if matches!(t.obj, Obj::Val(_)) {
                        return type_err("valueMap() applied to a non-element");
                    }
                    let props = self.props_of(&t.obj);
                    let mut m = IndexMap::new();
                    for (k, v) in props {
                        if keys.is_empty() || keys.contains(&k.as_str()) {
                            m.insert(k.clone(), v.clone());
                        }
                    }
                    out.push(t.to(Obj::Val(Value::Map(m))));
                }
            }
            Op::Label | Op::Id => {
                for t in input {
                    let v = if step.op == Op::Label { self.label_of(&t.obj) } else { self.id_of(&t.obj) };
                    match v {
                        Some(s) => {
                            let s = s.to_string();
                            out.push(t.to(Obj::Val(Value::Str(s))));
                        }
                        None => return type_err(format!("{}() applied to a non-element", step.op)),
                    }
                }
            }
            Op::As => {
                for mut t in input {
                    for a in args.iter().filter_map(Arg::as_str) {
                        t.labels.push((a.to_string(), t.obj.clone()));
                    }
                    out.push(t);
                }
            }
            Op::Select => {
                let keys: Vec<&str> = args.iter().filter_map(Arg::as_str).collect();
                for t in input {
                    if keys.len() == 1 {
                        let Some(o) = self.select_key(&t, keys[0]) else { continue };
                        let obj = match st.by.first() {
                            Some(by) => match self.apply_by(by, &o, &t)? {
                                Some(v) => Obj::Val(v),
                                None => continue,
                            },
                            None => o,
                        };
                        out.push(t.to(obj));
                    } else {
                        let mut m = IndexMap::new();
                        let mut complete = true;
                        for (i, k) in keys.iter().enumerate() {
                            let Some(o) = self.select_key(&t, k) else {
                                complete = false;
                                break;
                            };
                            let v = match cycle(&st.by, i) {
                                Some(by) => self.apply_by(by, &o, &t)?,
                                None => Some(self.value(&o)),
                            };
                            match v {
                                Some(v) => {
                                    m.insert(k.to_string(), v);
                                }
                                None => {
                                    complete = false;
                                    break;
                                }
                            }
                        }
                        if complete {
                            out.push(t.to(Obj::Val(Value::Map(m))));
                        }
                    }
                }
            }
            Op::Project => {
                let keys: Vec<&str> = args.iter().filter_map(Arg::as_str).collect();
                for t in input {
                    let mut m = IndexMap::new();
                    for (i, k) in keys.iter().enumerate() {
                        let v = match cycle(&st.by, i) {
                            Some(by) => self.apply_by(by, &t.obj, &t)?,
                            None => Some(self.value(&t.obj)),
                        };
                        if let Some(v) = v {
                            m.insert(k.to_string(), v);
                        }
                    }
                    out.push(t.to(Obj::Val(Value::Map(m))));
                }
            }
            Op::Limit => {
                let n = args.first().and_then(Arg::as_int).unwrap_or(0).max(0) as usize;
                if is_local(args) {
                    return type_err("limit(local) is not supported");
                }
                out = input.into_iter().take(n).collect();
            }
            Op::Range => {
                let lo = args.first().and_then(Arg::as_int).unwrap_or(0).max(0) as usize;
                let hi = args.get(1).and_then(Arg::as_int).unwrap_or(-1);
                let it = input.into_iter().skip(lo);
                out = if hi < 0 {
                    it.collect()
                } else {
                    it.take((hi as usize).saturating_sub(lo)).collect()
                };
            }
            Op::Count => {
                if is_local(args) {
                    for t in input {
                        let n = match &t.obj {
                            Obj::Val(Value::List(l)) => l.len(),
                            Obj::Val(Value::Map(m)) => m.len(),
                            _ => 1,
                        };
                        out.push(t.to(Obj::Val(Value::Int(n as i64))));
                    }
                } else {
                    out.push(Traverser::start(Obj::Val(Value::Int(input.len() as i64))));
                }
            }
            Op::Fold => {
                let items = input.iter().map(|t| self.value(&t.obj)).collect();
                out.push(Traverser::start(Obj::Val(Value::List(items))));
            }
            Op::Unfold => {
                for t in input {
                    match &t.obj {
                        Obj::Val(Value::List(items)) => {
                            for v in items {
                                out.push(t.to(Obj::Val(v.clone())));
                            }
                        }
                        Obj::Val(Value::Map(m)) => {
                            for (k, v) in m {
                                let mut entry = IndexMap::new();
                                entry.insert(k.clone(), v.clone());
                                out.push(t.to(Obj::Val(Value::Map(entry))));
                            }
                        }
                        _ => out.push(t),
                    }
                }
            }
            Op::Dedup => {
                let mut seen: Vec<Value> = Vec::new();
                for t in input {
                    let key = match st.by.first() {
                        Some(by) => match self.apply_by(by, &t.obj, &t)? {
                            Some(v) => v,
                            None => continue,
                        },
                        None => self.value(&t.obj),
                    };
                    if !seen.contains(&key) {
                        seen.push(key);
                        out.push(t);
                    }
                }
            }
            Op::Order => {
                if is_local(args) {
                    for t in input {
                        let obj = match &t.obj {
                            Obj::Val(Value::List(items)) => {
                                let mut items = items.clone();
                                items.sort();
                                Obj::Val(Value::List(items))
                            }
                            o => o.clone(),
                        };
                        out.push(t.to(obj));
                    }
                } else {
                    out = self.order(st, input)?;
                }
            }
            Op::GroupCount => {
                let mut counts: IndexMap<String, i64> = IndexMap::new();
                for t in &input {
                    let key = match st.by.first() {
                        Some(by) => match self.apply_by(by, &t.obj, t)? {
                            Some(v) => v,
                            None => continue,
                        },
                        None => self.value(&t.obj),
                    };
                    *counts.entry(key.key_string()).or_default() += 1;
                }
                counts.sort_keys();
                let m = counts.into_iter().map(|(k, v)| (k, Value::Int(v))).collect();
                out.push(Traverser::start(Obj::Val(Value::Map(m))));
            }
            Op::Sum | Op::Min | Op::Max | Op::Mean => {
                if is_local(args) {
                    for t in input {
                        let items = match &t.obj {
                            Obj::Val(Value::List(items)) => items.clone(),
                            o => vec![self.value(o)],
                        };
                        if let Some(v) = aggregate(step.op, &items)? {
                            out.push(t.to(Obj::Val(v)));
                        }
                    }
                } else {
                    let items: Vec<Value> = input.iter().map(|t| self.value(&t.obj)).collect();
                    if let Some(v) = aggregate(step.op, &items)? {
                        out.push(Traverser::start(Obj::Val(v)));
                    }
                }
            }
            Op::Where => {
                for t in input {
                    let keep = match args.as_slice() {
                        [Arg::Anon(a)] => !self.run_one(a, &t)?.is_empty(),
                        [Arg::Pred(p)] => {
                            let v = match st.by.first() {
                                Some(by) => self.apply_by(by, &t.obj, &t)?,
                                None => Some(self.value(&t.obj)),
                            };
                            match v {
                                Some(v) => eval_pred(p.op, &self.resolve_pred(p, &t), &v)?,
                                None => false,
                            }
                        }
                        [Arg::Lit(Literal::Str(start)), Arg::Pred(p)] => match t.label(start) {
                            Some(o) => eval_pred(p.op, &self.resolve_pred(p, &t), &self.value(o))?,
                            None => false,
                        },
                        _ => return type_err("where() expects a traversal or predicate"),
                    };
                    if keep {
                        out.push(t);
                    }
                }
            }
            Op::Is => {
                for t in input {
                    let v = self.value(&t.obj);
                    let keep = match args.first() {
                        Some(Arg::Lit(l)) => v.loose_eq(&lit_value(l)),
                        Some(Arg::Pred(p)) => eval_pred(p.op, &self.resolve_pred(p, &t), &v)?,
                        _ => return type_err("is() expects a value or predicate"),
                    };
                    if keep {
                        out.push(t);
                    }
                }
            }
            Op::Not => {
                let Some(a) = args.first().and_then(Arg::as_anon) else {
                    return type_err("not() expects a traversal");
                };
                for t in input {
                    if self.run_one(a, &t)?.is_empty() {
                        out.push(t);
                    }
                }
            }
            Op::Repeat => {
                let Some(body) = args.first().and_then(Arg::as_anon) else {
                    return type_err("repeat() expects a traversal");
                };
                out = self.repeat(st, body, input)?;
            }
            Op::Path => {
                for t in input {
                    let mut items = Vec::with_capacity(t.path.len());
                    for (i, o) in t.path.iter().enumerate() {
                        match cycle(&st.by, i) {
                            Some(by) => {
                                if let Some(v) = self.apply_by(by, o, &t)? {
                                    items.push(v);
                                }
                            }
                            None => items.push(self.value(o)),
                        }
                    }
                    out.push(t.to(Obj::Val(Value::List(items))));
                }
            }
            Op::Choose => {
                let branches: Vec<&AnonTraversal> = args.iter().filter_map(Arg::as_anon).collect();
                let (cond, yes, no) = match branches.as_slice() {
                    [c, y] => (*c, *y, None),
                    [c, y, n] => (*c, *y, Some(*n)),
                    _ => return type_err("choose() expects 2 or 3 traversals"),
                };
                for t in input {
                    if !self.run_one(cond, &t)?.is_empty() {
                        out.extend(self.run_one(yes, &t)?);
                    } else if let Some(n) = no {
                        out.extend(self.run_one(n, &t)?);
                    } else {
                        out.push(t);
                    }
                }
            }
            Op::Coalesce => {
                for t in input {
                    for a in args.iter().filter_map(Arg::as_anon) {
                        let r = self.run_one(a, &t)?;
                        if !r.is_empty() {
                            out.extend(r);
                            break;
                        }
                    }
                }
            }
            Op::Union => {
                for t in input {
                    for a in args.iter().filter_map(Arg::as_anon) {
                        out.extend(self.run_one(a, &t)?);
                    }
                }
            }
            Op::Constant => {
                let v = match args.first() {
                    Some(Arg::Lit(l)) => lit_value(l),
                    _ => return type_err("constant() expects a literal"),
                };
                for t in input {
                    out.push(t.to(Obj::Val(v.clone())));
                }
            }
            Op::Identity => out = input,
            Op::By | Op::Times | Op::Until | Op::Emit => unreachable!("folded into the parent stage"),
            Op::Branch | Op::Match => return Err(ExecError::Unsupported(step.op.to_string())),
        }
        Ok(out)
    }

    fn props_of(&self, obj: &Obj) -> &'g crate::graph::Props {
        match obj {
            Obj::V(i) => &self.g.vertices()[*i].props,
            Obj::E(i) => &self.g.edges()[*i].props,
            Obj::Val(_) => unreachable!("checked by caller"),
        }
    }

    fn select_key(&self, t: &Traverser, key: &str) -> Option<Obj> {
        if let Some(o) = t.label(key) {
            return Some(o.clone());
        }
        match &t.obj {
            Obj::Val(Value::Map(m)) => m.get(key).map(|v| Obj::Val(v.clone())),
            _ => None,
        }
    }

    /// Applies one `by(...)` modulator to `obj`. `None` means the modulator
    /// produced nothing for this object.
    fn apply_by(&mut self, by: &[Arg], obj: &Obj, t: &Traverser) -> Result<Option<Value>, ExecError> {
        match by.first() {
            None => Ok(Some(self.value(obj))),
            Some(Arg::Lit(Literal::Str(key))) => Ok(self.prop(obj, key)),
            Some(Arg::Anon(a)) => {
                let mut start = t.clone();
                start.obj = obj.clone();
                let r = self.run_one(a, &start)?;
                Ok(r.first().map(|x| self.value(&x.obj)))
            }
            Some(Arg::Token(tok)) => match token_name(tok) {
                "label" => Ok(self.label_of(obj).map(|s| Value::Str(s.to_string()))),
                "id" => Ok(self.id_of(obj).map(|s| Value::Str(s.to_string()))),
                // a bare order token: the object itself
                _ => Ok(Some(self.value(obj))),
            },
            Some(_) => type_err("unsupported by() argument"),
        }
    }

    fn order(&mut self, st: &Stage, input: Vec<Traverser>) -> Result<Vec<Traverser>, ExecError> {
        let mut keyed = Vec::with_capacity(input.len());
        let specs: Vec<(&[Arg], bool)> = if st.by.is_empty() {
            vec![(&[][..], false)]
        } else {
            st.by
                .iter()
                .map(|by| {
                    let desc = by.iter().any(|a| matches!(a, Arg::Token(t) if matches!(token_name(t), "desc" | "decr")));
                    let key: &[Arg] = match by.first() {
                        Some(Arg::Token(_)) => &[],
                        _ => &by[..by.len().min(1)],
                    };
                    (key, desc)
                })
                .collect()
        };
        for t in input {
            let mut keys = Vec::with_capacity(specs.len());
            for (key, _) in &specs {
                keys.push(self.apply_by(key, &t.obj, &t)?);
            }
            keyed.push((keys, t));
        }
        keyed.sort_by(|(a, _), (b, _)| {
            for (i, (_, desc)) in specs.iter().enumerate() {
                let o = order_values(&a[i], &b[i]);
                let o = if *desc { o.reverse() } else { o };
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
        Ok(keyed.into_iter().map(|(_, t)| t).collect())
    }

    fn repeat(&mut self, st: &Stage, body: &AnonTraversal, input: Vec<Traverser>) -> Result<Vec<Traverser>, ExecError> {
        let max = self.limits.max_repeat_depth as i64;
        if let Some(n) = st.times {
            if n > max {
                return Err(ExecError::LimitExceeded(format!("repeat depth {n} above {max}")));
            }
        }
        let mut out = Vec::new();
        let mut frontier = input;
        let mut depth = 0i64;
        loop {
            if st.times == Some(depth) {
                out.extend(frontier);
                break;
            }
            if frontier.is_empty() {
                break;
            }
            if depth >= max {
                return Err(ExecError::LimitExceeded(format!("repeat depth above {max}")));
            }
            let mut next = Vec::new();
            for t in &frontier {
                next.extend(self.run_one(body, t)?);
            }
            self.tick(next.len())?;
            depth += 1;
            if let Some(emit) = st.emit {
                for t in &next {
                    let keep = match emit {
                        Some(cond) => !self.run_one(cond, t)?.is_empty(),
                        None => true,
                    };
                    if keep {
                        out.push(t.clone());
                    }
                }
            }
            frontier = match st.until {
                Some(cond) => {
                    let mut rest = Vec::new();
                    for t in next {
                        if !self.run_one(cond, &t)?.is_empty() {
                            if st.emit.is_none() {
                                out.push(t);
                            }
                        } else {
                            rest.push(t);
                        }
                    }
                    rest
                }
                None => next,
            };
        }
        Ok(out)
    }
}

fn cycle<'a>(by: &[&'a [Arg]], i: usize) -> Option<&'a [Arg]> {
    if by.is_empty() {
        None
    } else {
        Some(by[i % by.len()])
    }
}

/// Missing keys sort last.
fn order_values(a: &Option<Value>, b: &Option<Value>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.loose_cmp(b).unwrap_or_else(|| a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

fn aggregate(op: Op, items: &[Value]) -> Result<Option<Value>, ExecError> {
    match op {
        Op::Min | Op::Max => {
            let mut best: Option<&Value> = None;
            for v in items {
                if !v.is_scalar() {
                    return type_err(format!("{op}() over a non-scalar value"));
                }
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let o = v.loose_cmp(b).ok_or_else(|| {
                            ExecError::RuntimeTypeError(format!("{op}() over mixed types"))
                        })?;
                        let better = if op == Op::Min { o == Ordering::Less } else { o == Ordering::Greater };
                        if better {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.cloned())
        }
        _ => {
            if let Some(bad) = items.iter().find(|v| !v.is_numeric()) {
                return type_err(format!("{op}() over non-numeric value {bad}"));
            }
            if op == Op::Mean && items.is_empty() {
                return Ok(None);
            }
            let all_int = items.iter().all(|v| matches!(v, Value::Int(_)));
            if op == Op::Sum && all_int {
                let mut s: i64 = 0;
                for v in items {
                    if let Value::Int(i) = v {
                        s = s
                            .checked_add(*i)
                            .ok_or_else(|| ExecError::RuntimeTypeError("integer overflow in sum()".into()))?;
                    }
                }
                return Ok(Some(Value::Int(s)));
            }
            let s: f64 = items.iter().map(|v| v.as_f64().unwrap()).sum();
            Ok(Some(Value::Decimal(if op == Op::Mean { s / items.len() as f64 } else { s })))
        }
    }
}

fn eval_pred(op: PredOp, args: &[Value], v: &Value) -> Result<bool, ExecError> {
    let arg = |i: usize| {
        args.get(i)
            .ok_or_else(|| ExecError::RuntimeTypeError(format!("{}() is missing an argument", op.as_str())))
    };
    let cmp = |i: usize| -> Result<Option<Ordering>, ExecError> { Ok(v.loose_cmp(arg(i)?)) };
    let text = |i: usize| -> Result<Option<(&str, &str)>, ExecError> {
        Ok(match (v.as_str(), arg(i)?.as_str()) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        })
    };
    Ok(match op {
        PredOp::Eq => v.loose_eq(arg(0)?),
        PredOp::Neq => !v.loose_eq(arg(0)?),
        PredOp::Lt => cmp(0)? == Some(Ordering::Less),
        PredOp::Lte => matches!(cmp(0)?, Some(Ordering::Less | Ordering::Equal)),
        PredOp::Gt => cmp(0)? == Some(Ordering::Greater),
        PredOp::Gte => matches!(cmp(0)?, Some(Ordering::Greater | Ordering::Equal)),
        PredOp::Within => args.iter().any(|a| v.loose_eq(a)),
        PredOp::Without => !args.iter().any(|a| v.loose_eq(a)),
        PredOp::Between => {
            matches!(cmp(0)?, Some(Ordering::Greater | Ordering::Equal)) && cmp(1)? == Some(Ordering::Less)
        }
        PredOp::Inside => cmp(0)? == Some(Ordering::Greater) && cmp(1)? == Some(Ordering::Less),
        PredOp::Outside => cmp(0)? == Some(Ordering::Less) || cmp(1)? == Some(Ordering::Greater),
        PredOp::Containing => text(0)?.is_some_and(|(a, b)| a.contains(b)),
        PredOp::StartingWith => text(0)?.is_some_and(|(a, b)| a.starts_with(b)),
        PredOp::EndingWith => text(0)?.is_some_and(|(a, b)| a.ends_with(b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphSchema, Vertex};
    use crate::gremlin::parse;

    fn schema() -> GraphSchema {
        GraphSchema::from_json(
            r#"{"labels":[
              {"name":"company","kind":"vertex","properties":[
                 {"name":"name","value_kind":"string"},{"name":"postalCode","value_kind":"string"},
                 {"name":"registeredCapital","value_kind":"decimal"}]},
              {"name":"person","kind":"vertex","properties":[{"name":"name","value_kind":"string"}]},
              {"name":"serve","kind":"edge","properties":[{"name":"position","value_kind":"string"}]},
              {"name":"companyInvest","kind":"edge","properties":[]}],
             "edges":[
              {"name":"serve","src_label":"person","dst_label":"company"},
              {"name":"companyInvest","src_label":"company","dst_label":"company"}]}"#,
        )
        .unwrap()
    }

    fn v(id: &str, label: &str, props: &[(&str, Value)]) -> Vertex {
        Vertex {
            id: id.into(),
            label: label.into(),
            props: props.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    fn e(id: &str, label: &str, src: &str, dst: &str, props: &[(&str, &str)]) -> Edge {
        Edge {
            id: id.into(),
            label: label.into(),
            src: src.into(),
            dst: dst.into(),
            props: props.iter().map(|(k, v)| (k.to_string(), Value::str(*v))).collect(),
        }
    }

    fn graph() -> PropertyGraph {
        PropertyGraph::build(
            schema(),
            vec![
                v("c1", "company", &[("name", Value::str("Acme")), ("postalCode", Value::str("100080")), ("registeredCapital", Value::Decimal(10.0))]),
                v("c2", "company", &[("name", Value::str("Beta")), ("registeredCapital", Value::Int(30))]),
                v("p1", "person", &[("name", Value::str("Ann"))]),
                v("p2", "person", &[("name", Value::str("Bo"))]),
            ],
            vec![
                e("s1", "serve", "p1", "c1", &[("position", "CEO")]),
                e("s2", "serve", "p2", "c1", &[("position", "CFO")]),
                e("i1", "companyInvest", "c1", "c2", &[]),
                e("i2", "companyInvest", "c2", "c1", &[]),
            ],
        )
        .unwrap()
    }

    fn run(script: &str) -> Result<Vec<Value>, ExecError> {
        execute(&parse(script).unwrap(), &graph(), ExecutionLimits::default()).map(|r| r.rows)
    }

    #[test]
    fn property_lookup() {
        assert_eq!(
            run("g.V().has('company','name','Acme').values('postalCode')").unwrap(),
            vec![Value::str("100080")]
        );
    }

    #[test]
    fn executives_projection() {
        let rows = run(
            "g.V().has('company','name','Acme').inE('serve').as('a').outV().as('b')\
             .project('name','position').by(select('b').values('name')).by(select('a').values('position'))",
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].to_json(), serde_json::json!({"name":"Ann","position":"CEO"}));
        assert_eq!(rows[1].to_json(), serde_json::json!({"name":"Bo","position":"CFO"}));
    }

    #[test]
    fn aggregates() {
        assert_eq!(run("g.V().hasLabel('company').values('registeredCapital').sum()").unwrap(), vec![Value::Decimal(40.0)]);
        assert_eq!(run("g.V().hasLabel('company').values('registeredCapital').max()").unwrap(), vec![Value::Int(30)]);
        assert_eq!(run("g.V().hasLabel('nothing').values('x').sum()").unwrap(), vec![Value::Int(0)]);
        assert!(run("g.V().hasLabel('nothing').values('x').mean()").unwrap().is_empty());
        assert!(matches!(run("g.V().values('name').mean()"), Err(ExecError::RuntimeTypeError(_))));
    }

    #[test]
    fn group_count_sorted_keys() {
        let rows = run("g.V().groupCount().by(label)").unwrap();
        assert_eq!(rows[0].to_json(), serde_json::json!({"company":2,"person":2}));
    }

    #[test]
    fn order_limit_dedup() {
        assert_eq!(
            run("g.V().hasLabel('person').order().by('name',desc).values('name')").unwrap(),
            vec![Value::str("Bo"), Value::str("Ann")]
        );
        assert_eq!(run("g.V().out().dedup().count()").unwrap(), vec![Value::Int(2)]);
        assert_eq!(run("g.V().limit(1).id()").unwrap(), vec![Value::str("c1")]);
    }

    #[test]
    fn where_and_not() {
        assert_eq!(
            run("g.V().hasLabel('company').where(in('serve')).values('name')").unwrap(),
            vec![Value::str("Acme")]
        );
        assert_eq!(
            run("g.V().hasLabel('company').not(in('serve')).values('name')").unwrap(),
            vec![Value::str("Beta")]
        );
        assert_eq!(
            run("g.V().hasLabel('company').as('x').out('companyInvest').where(neq('x')).values('name')").unwrap(),
            vec![Value::str("Beta"), Value::str("Acme")]
        );
    }

    #[test]
    fn repeat_terminates_on_cycle() {
        assert_eq!(run("g.V('c1').repeat(out('companyInvest')).times(3).id()").unwrap(), vec![Value::str("c2")]);
        assert!(matches!(run("g.V().repeat(out())"), Err(ExecError::LimitExceeded(_))));
        let r = run("g.V('c1').repeat(out('companyInvest')).until(has('name','Acme')).path().by('name')").unwrap();
        assert_eq!(r[0].to_json(), serde_json::json!(["Acme", "Beta", "Acme"]));
    }

    #[test]
    fn branching() {
        assert_eq!(run("g.V('p1').union(values('name'),constant(1))").unwrap(), vec![Value::str("Ann"), Value::Int(1)]);
        assert_eq!(
            run("g.V('c2').coalesce(in('serve').values('name'),constant('none'))").unwrap(),
            vec![Value::str("none")]
        );
        assert_eq!(
            run("g.V('c1').choose(has('postalCode'),constant('y'),constant('n'))").unwrap(),
            vec![Value::str("y")]
        );
    }

    #[test]
    fn empty_graph_count() {
        let g = PropertyGraph::empty(schema());
        let r = execute(&parse("g.V().count()").unwrap(), &g, ExecutionLimits::default()).unwrap();
        assert_eq!(r.rows, vec![Value::Int(0)]);
    }

    #[test]
    fn visited_limit() {
        let limits = ExecutionLimits {
            max_visited_elements: 3,
            ..Default::default()
        };
        let r = execute(&parse("g.V().out()").unwrap(), &graph(), limits);
        assert!(matches!(r, Err(ExecError::LimitExceeded(_))));
    }
}
