//! Schema-aware static checks for parsed traversals.
//!
//! The validator tracks which labels the current traversers may carry and
//! checks every label, property and edge direction against the schema. It
//! never needs the graph data, only the schema.

use std::collections::{BTreeSet, HashMap};

use super::ast::{Arg, Op, SourceKind, Step, Traversal};
use super::{catalog, IssueKind, ValidationIssue};
use crate::graph::{GraphSchema, LabelKind};

#[derive(Debug, Clone, PartialEq)]
enum Ctx {
    /// Vertices carrying one of the labels (`None` = any vertex label).
    Vertices(Option<BTreeSet<String>>),
    Edges(Option<BTreeSet<String>>),
    /// Scalars, maps, lists or anything the validator cannot follow.
    Any,
}

impl Ctx {
    fn merge(self, other: Ctx) -> Ctx {
        match (self, other) {
            (Ctx::Vertices(a), Ctx::Vertices(b)) => Ctx::Vertices(union(a, b)),
            (Ctx::Edges(a), Ctx::Edges(b)) => Ctx::Edges(union(a, b)),
            _ => Ctx::Any,
        }
    }
}

fn union(a: Option<BTreeSet<String>>, b: Option<BTreeSet<String>>) -> Option<BTreeSet<String>> {
    match (a, b) {
        (Some(mut a), Some(b)) => {
            a.extend(b);
            Some(a)
        }
        _ => None,
    }
}

/// What a following `by()` modulates and in which context its arguments run.
#[derive(Clone)]
enum ByTarget {
    None,
    Some(Ctx),
}

struct Validator<'a> {
    schema: &'a GraphSchema,
    issues: Vec<ValidationIssue>,
}

/// Returns every schema or structural problem found in `t`; empty means the
/// traversal is safe to execute.
pub fn validate(t: &Traversal, schema: &GraphSchema) -> Vec<ValidationIssue> {
    let mut v = Validator {
        schema,
        issues: Vec::new(),
    };
    let start = match t.source.kind {
        SourceKind::V => Ctx::Vertices(None),
        SourceKind::E => Ctx::Edges(None),
    };
    let mut aliases = HashMap::new();
    v.walk(&t.steps, start, &mut aliases, None);
    v.issues
}

impl<'a> Validator<'a> {
    fn issue(&mut self, kind: IssueKind, location: usize, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            kind,
            location,
            offset: None,
            message: message.into(),
        });
    }

    /// `top` is the index of the enclosing top-level step for nested walks.
    fn walk(
        &mut self,
        steps: &[Step],
        mut ctx: Ctx,
        aliases: &mut HashMap<String, Ctx>,
        top: Option<usize>,
    ) -> Ctx {
        let mut by_target = ByTarget::None;
        let mut prev: Option<Op> = None;
        for (i, step) in steps.iter().enumerate() {
            let loc = top.unwrap_or(i);
            if catalog::is_parse_only(step.op) {
                self.issue(
                    IssueKind::UnsupportedOperator,
                    loc,
                    format!("'{}' is not supported by the interpreter", step.op),
                );
                ctx = Ctx::Any;
                prev = Some(step.op);
                continue;
            }
            let before = ctx.clone();
            ctx = self.step(step, ctx, aliases, loc, &mut by_target, prev);
            by_target = match step.op {
                Op::Project | Op::Order | Op::GroupCount => ByTarget::Some(before),
                Op::Select | Op::Dedup | Op::Path => ByTarget::Some(Ctx::Any),
                Op::By => by_target,
                _ => ByTarget::None,
            };
            prev = Some(step.op);
        }
        ctx
    }

    fn nested(&mut self, arg: &Arg, ctx: &Ctx, aliases: &HashMap<String, Ctx>, loc: usize) -> Option<Ctx> {
        arg.as_anon().map(|anon| {
            let mut scoped = aliases.clone();
            self.walk(&anon.steps, ctx.clone(), &mut scoped, Some(loc))
        })
    }

    fn arity(&mut self, step: &Step, loc: usize, ok: bool, expect: &str) -> bool {
        if !ok {
            self.issue(
                IssueKind::ArityError,
                loc,
                format!("{}() expects {expect}", step.op),
            );
        }
        ok
    }

    fn strings<'s>(&mut self, step: &'s Step, loc: usize) -> Option<Vec<&'s str>> {
        let names: Option<Vec<&str>> = step.args.iter().map(Arg::as_str).collect();
        if names.is_none() {
            self.arity(step, loc, false, "string arguments");
        }
        names
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        step: &Step,
        ctx: Ctx,
        aliases: &mut HashMap<String, Ctx>,
        loc: usize,
        by_target: &mut ByTarget,
        prev: Option<Op>,
    ) -> Ctx {
        let n = step.args.len();
        match step.op {
            Op::Has => self.has(step, ctx, loc),
            Op::HasLabel => {
                let Some(names) = self.strings(step, loc) else { return ctx };
                if !self.arity(step, loc, n >= 1, "at least one label") {
                    return ctx;
                }
                match ctx {
                    Ctx::Edges(_) => {
                        for l in &names {
                            self.check_edge_name(l, loc);
                        }
                        Ctx::Edges(Some(names.iter().map(|s| s.to_string()).collect()))
                    }
                    _ => {
                        for l in &names {
                            self.check_vertex_label(l, loc);
                        }
                        Ctx::Vertices(Some(names.iter().map(|s| s.to_string()).collect()))
                    }
                }
            }
            Op::HasId => {
                self.arity(step, loc, n >= 1 && step.args.iter().all(|a| matches!(a, Arg::Lit(_))), "literal ids");
                ctx
            }
            Op::HasNot => {
                if let Some(names) = self.strings(step, loc) {
                    if self.arity(step, loc, n == 1, "one property key") {
                        self.check_props(&ctx, &names, loc);
                    }
                }
                ctx
            }
            Op::Out | Op::In | Op::Both | Op::OutE | Op::InE | Op::BothE => self.hop(step, ctx, loc),
            Op::OutV | Op::InV | Op::OtherV => {
                self.arity(step, loc, n == 0, "no arguments");
                match ctx {
                    Ctx::Edges(Some(names)) if step.op != Op::OtherV => {
                        let mut out = BTreeSet::new();
                        for name in &names {
                            for d in self.schema.edge_defs(name) {
                                out.insert(if step.op == Op::OutV {
                                    d.src_label.clone()
                                } else {
                                    d.dst_label.clone()
                                });
                            }
                        }
                        Ctx::Vertices(Some(out))
                    }
                    Ctx::Vertices(_) => {
                        self.issue(
                            IssueKind::ArityError,
                            loc,
                            format!("{}() must follow an edge step", step.op),
                        );
                        Ctx::Any
                    }
                    _ => Ctx::Vertices(None),
                }
            }
            Op::Values | Op::ValueMap => {
                if let Some(names) = self.strings(step, loc) {
                    self.check_props(&ctx, &names, loc);
                }
                Ctx::Any
            }
            Op::Label | Op::Id => {
                self.arity(step, loc, n == 0, "no arguments");
                Ctx::Any
            }
            Op::As => {
                if let Some(names) = self.strings(step, loc) {
                    if self.arity(step, loc, n >= 1, "a step label") {
                        for name in names {
                            aliases.insert(name.to_string(), ctx.clone());
                        }
                    }
                }
                ctx
            }
            Op::Select => {
                if step.args.iter().all(|a| matches!(a, Arg::Token(_))) && n == 1 {
                    return Ctx::Any;
                }
                let Some(names) = self.strings(step, loc) else { return Ctx::Any };
                if !self.arity(step, loc, n >= 1, "at least one key") {
                    return Ctx::Any;
                }
                if names.len() == 1 {
                    aliases.get(names[0]).cloned().unwrap_or(Ctx::Any)
                } else {
                    Ctx::Any
                }
            }
            Op::Project => {
                if self.strings(step, loc).is_some() {
                    self.arity(step, loc, n >= 1, "at least one key");
                }
                Ctx::Any
            }
            Op::By => {
                let ByTarget::Some(target) = by_target.clone() else {
                    self.issue(
                        IssueKind::ArityError,
                        loc,
                        "by() must follow project, order, groupCount, select, dedup or path",
                    );
                    return ctx;
                };
                self.arity(step, loc, n <= 2, "at most two arguments");
                match step.args.first() {
                    Some(Arg::Lit(crate::gremlin::Literal::Str(key))) => {
                        self.check_props(&target, &[key.as_str()], loc);
                    }
                    Some(a @ Arg::Anon(_)) => {
                        self.nested(a, &target, aliases, loc);
                    }
                    Some(Arg::Token(_)) | None => {}
                    Some(_) => {
                        self.arity(step, loc, false, "a key, a traversal or an order token");
                    }
                }
                ctx
            }
            Op::Limit => {
                self.arity(step, loc, n == 1 && step.args[0].as_int().is_some_and(|i| i >= 0), "one non-negative integer");
                ctx
            }
            Op::Range => {
                self.arity(
                    step,
                    loc,
                    n == 2 && step.args.iter().all(|a| a.as_int().is_some()),
                    "two integers",
                );
                ctx
            }
            Op::Count | Op::Sum | Op::Min | Op::Max | Op::Mean => {
                self.arity(step, loc, n == 0 || (n == 1 && matches!(step.args[0], Arg::Token(_))), "no arguments or a scope");
                Ctx::Any
            }
            Op::Fold | Op::GroupCount | Op::Path => {
                self.arity(step, loc, n == 0, "no arguments");
                Ctx::Any
            }
            Op::Unfold => Ctx::Any,
            Op::Dedup => ctx,
            Op::Order => {
                self.arity(step, loc, n == 0 || (n == 1 && matches!(step.args[0], Arg::Token(_))), "no arguments or a scope");
                ctx
            }
            Op::Where => {
                match step.args.as_slice() {
                    [a @ Arg::Anon(_)] => {
                        self.nested(a, &ctx, aliases, loc);
                    }
                    [Arg::Pred(_)] => {}
                    [Arg::Lit(crate::gremlin::Literal::Str(_)), Arg::Pred(_)] => {}
                    _ => {
                        self.arity(step, loc, false, "a traversal or a predicate");
                    }
                }
                ctx
            }
            Op::Is => {
                self.arity(step, loc, n == 1 && matches!(step.args[0], Arg::Lit(_) | Arg::Pred(_)), "a value or a predicate");
                ctx
            }
            Op::Not => {
                if self.arity(step, loc, n == 1 && step.args[0].as_anon().is_some(), "one traversal") {
                    self.nested(&step.args[0], &ctx, aliases, loc);
                }
                ctx
            }
            Op::Repeat => {
                if self.arity(step, loc, n == 1 && step.args[0].as_anon().is_some(), "one traversal") {
                    self.nested(&step.args[0], &ctx, aliases, loc);
                }
                match ctx {
                    Ctx::Vertices(_) => Ctx::Vertices(None),
                    Ctx::Edges(_) => Ctx::Edges(None),
                    Ctx::Any => Ctx::Any,
                }
            }
            Op::Times => {
                if !matches!(prev, Some(Op::Repeat | Op::Until | Op::Emit)) {
                    self.issue(IssueKind::ArityError, loc, "times() must follow repeat() or its modulators");
                }
                self.arity(step, loc, n == 1 && step.args[0].as_int().is_some_and(|i| i >= 0), "one non-negative integer");
                ctx
            }
            Op::Until | Op::Emit => {
                if !matches!(prev, Some(Op::Repeat | Op::Times | Op::Until | Op::Emit)) {
                    self.issue(
                        IssueKind::ArityError,
                        loc,
                        format!("{}() must follow repeat()", step.op),
                    );
                }
                let ok = if step.op == Op::Until { n == 1 } else { n <= 1 };
                if self.arity(step, loc, ok && step.args.iter().all(|a| a.as_anon().is_some()), "a traversal") {
                    for a in &step.args {
                        self.nested(a, &Ctx::Any, aliases, loc);
                    }
                }
                ctx
            }
            Op::Choose | Op::Coalesce | Op::Union => {
                let expect_ok = match step.op {
                    Op::Choose => (2..=3).contains(&n),
                    _ => n >= 1,
                };
                if !self.arity(step, loc, expect_ok && step.args.iter().all(|a| a.as_anon().is_some()), "traversal arguments") {
                    return Ctx::Any;
                }
                let branches = if step.op == Op::Choose { &step.args[1..] } else { &step.args[..] };
                if step.op == Op::Choose {
                    self.nested(&step.args[0], &ctx, aliases, loc);
                }
                let mut out: Option<Ctx> = if step.op == Op::Choose && n == 2 { Some(ctx.clone()) } else { None };
                for b in branches {
                    let end = self.nested(b, &ctx, aliases, loc).unwrap_or(Ctx::Any);
                    out = Some(match out {
                        Some(acc) => acc.merge(end),
                        None => end,
                    });
                }
                out.unwrap_or(Ctx::Any)
            }
            Op::Constant => {
                self.arity(step, loc, n == 1 && matches!(step.args[0], Arg::Lit(_)), "one literal");
                Ctx::Any
            }
            Op::Identity => ctx,
            Op::Branch | Op::Match => Ctx::Any,
        }
    }

    fn has(&mut self, step: &Step, ctx: Ctx, loc: usize) -> Ctx {
        let args = &step.args;
        let key_ok = |a: &Arg| matches!(a, Arg::Lit(crate::gremlin::Literal::Str(_)) | Arg::Token(_));
        let value_ok = |a: &Arg| matches!(a, Arg::Lit(_) | Arg::Pred(_));
        match args.len() {
            1 if key_ok(&args[0]) => {
                if let Some(k) = args[0].as_str() {
                    self.check_props(&ctx, &[k], loc);
                }
                ctx
            }
            2 if key_ok(&args[0]) && value_ok(&args[1]) => {
                if let Some(k) = args[0].as_str() {
                    self.check_props(&ctx, &[k], loc);
                }
                ctx
            }
            3 if args[0].as_str().is_some() && key_ok(&args[1]) && value_ok(&args[2]) => {
                let label = args[0].as_str().unwrap();
                let narrowed = match ctx {
                    Ctx::Edges(_) => {
                        self.check_edge_name(label, loc);
                        Ctx::Edges(Some(BTreeSet::from([label.to_string()])))
                    }
                    _ => {
                        if !self.check_vertex_label(label, loc) {
                            return Ctx::Vertices(None);
                        }
                        Ctx::Vertices(Some(BTreeSet::from([label.to_string()])))
                    }
                };
                if let Some(k) = args[1].as_str() {
                    self.check_props(&narrowed, &[k], loc);
                }
                narrowed
            }
            _ => {
                self.arity(step, loc, false, "(key), (key, value) or (label, key, value)");
                ctx
            }
        }
    }

    fn check_vertex_label(&mut self, label: &str, loc: usize) -> bool {
        if self.schema.vertex_label(label).is_none() {
            self.issue(IssueKind::UnknownLabel, loc, format!("unknown vertex label '{label}'"));
            false
        } else {
            true
        }
    }

    fn check_edge_name(&mut self, name: &str, loc: usize) -> bool {
        if !self.schema.is_edge_name(name) {
            self.issue(IssueKind::UnknownLabel, loc, format!("unknown edge label '{name}'"));
            false
        } else {
            true
        }
    }

    /// Every key must be declared on at least one of the context labels.
    fn check_props(&mut self, ctx: &Ctx, keys: &[&str], loc: usize) {
        let (kind, labels) = match ctx {
            Ctx::Vertices(l) => (LabelKind::Vertex, l),
            Ctx::Edges(l) => (LabelKind::Edge, l),
            Ctx::Any => return,
        };
        let candidates: Vec<_> = self
            .schema
            .labels
            .iter()
            .filter(|l| l.kind == kind)
            .filter(|l| labels.as_ref().is_none_or(|set| set.contains(&l.name)))
            .collect();
        for key in keys {
            if !candidates.iter().any(|l| l.property(key).is_some()) {
                let scope = match labels {
                    Some(set) => set.iter().cloned().collect::<Vec<_>>().join("|"),
                    None => format!("any {}", if kind == LabelKind::Vertex { "vertex" } else { "edge" }),
                };
                self.issue(
                    IssueKind::UnknownProperty,
                    loc,
                    format!("property '{key}' is not declared on {scope}"),
                );
            }
        }
    }

    fn hop(&mut self, step: &Step, ctx: Ctx, loc: usize) -> Ctx {
        let Some(names) = self.strings(step, loc) else { return Ctx::Any };
        let to_edges = matches!(step.op, Op::OutE | Op::InE | Op::BothE);
        let src_labels = match &ctx {
            Ctx::Vertices(l) => l.clone(),
            Ctx::Edges(_) => {
                self.issue(
                    IssueKind::ArityError,
                    loc,
                    format!("{}() must start from vertices", step.op),
                );
                return Ctx::Any;
            }
            Ctx::Any => None,
        };
        let names: Vec<String> = if names.is_empty() {
            let mut all: Vec<String> = self.schema.edges.iter().map(|e| e.name.clone()).collect();
            all.sort();
            all.dedup();
            all
        } else {
            names.iter().map(|s| s.to_string()).collect()
        };
        let mut reached = BTreeSet::new();
        let mut edge_names = BTreeSet::new();
        let explicit = !step.args.is_empty();
        for name in &names {
            if explicit && !self.check_edge_name(name, loc) {
                continue;
            }
            let defs: Vec<_> = self.schema.edge_defs(name).collect();
            let forward = |d: &&crate::graph::EdgeDef| {
                src_labels.as_ref().is_none_or(|l| l.contains(&d.src_label))
            };
            let backward = |d: &&crate::graph::EdgeDef| {
                src_labels.as_ref().is_none_or(|l| l.contains(&d.dst_label))
            };
            let mut matched = false;
            if matches!(step.op, Op::Out | Op::OutE | Op::Both | Op::BothE) {
                for d in defs.iter().copied().filter(forward) {
                    matched = true;
                    reached.insert(d.dst_label.clone());
                }
            }
            if matches!(step.op, Op::In | Op::InE | Op::Both | Op::BothE) {
                for d in defs.iter().copied().filter(backward) {
                    matched = true;
                    reached.insert(d.src_label.clone());
                }
            }
            if matched {
                edge_names.insert(name.clone());
            } else if explicit {
                let from = src_labels
                    .as_ref()
                    .map(|s| s.iter().cloned().collect::<Vec<_>>().join("|"))
                    .unwrap_or_default();
                let hint = match step.op {
                    Op::Out | Op::OutE if defs.iter().any(backward) => {
                        format!("; '{name}' points into '{from}', use in/inE")
                    }
                    Op::In | Op::InE if defs.iter().any(forward) => {
                        format!("; '{name}' points out of '{from}', use out/outE")
                    }
                    _ => String::new(),
                };
                let dirs: Vec<String> = defs
                    .iter()
                    .map(|d| format!("{}->{}", d.src_label, d.dst_label))
                    .collect();
                self.issue(
                    IssueKind::WrongEdgeDirection,
                    loc,
                    format!(
                        "{}('{name}') from '{from}' does not match the declared direction {}{hint}",
                        step.op,
                        dirs.join(", ")
                    ),
                );
            }
        }
        if to_edges {
            Ctx::Edges(Some(edge_names))
        } else if src_labels.is_none() && !explicit {
            Ctx::Vertices(None)
        } else {
            Ctx::Vertices(Some(reached))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gremlin::parse;

    fn schema() -> GraphSchema {
        GraphSchema::from_json(
            r#"{"labels":[
              {"name":"company","kind":"vertex","properties":[
                 {"name":"name","value_kind":"string"},{"name":"postalCode","value_kind":"string"}]},
              {"name":"person","kind":"vertex","properties":[{"name":"name","value_kind":"string"}]},
              {"name":"serve","kind":"edge","properties":[{"name":"position","value_kind":"string"}]}],
             "edges":[
              {"name":"legalPerson","src_label":"person","dst_label":"company"},
              {"name":"serve","src_label":"person","dst_label":"company"}]}"#,
        )
        .unwrap()
    }

    fn kinds(script: &str) -> Vec<IssueKind> {
        validate(&parse(script).unwrap(), &schema())
            .into_iter()
            .map(|i| i.kind)
            .collect()
    }

    #[test]
    fn clean_scripts() {
        assert!(kinds("g.V().has('company','name','Acme').values('postalCode')").is_empty());
        assert!(kinds("g.V().has('company','name','Acme').in('legalPerson').valueMap()").is_empty());
        assert!(kinds(
            "g.V().has('company','name','X').inE('serve').as('a').outV().as('b').project('name','position').by(select('b').values('name')).by(select('a').values('position'))"
        )
        .is_empty());
    }

    #[test]
    fn wrong_direction() {
        assert_eq!(
            kinds("g.V().hasLabel('company').out('legalPerson')"),
            vec![IssueKind::WrongEdgeDirection]
        );
        assert_eq!(
            kinds("g.V().hasLabel('person').inE('serve')"),
            vec![IssueKind::WrongEdgeDirection]
        );
    }

    #[test]
    fn unknown_names() {
        assert_eq!(kinds("g.V().values('noSuchProp')"), vec![IssueKind::UnknownProperty]);
        assert_eq!(kinds("g.V().hasLabel('nope')"), vec![IssueKind::UnknownLabel]);
        assert_eq!(kinds("g.V().out('nope')"), vec![IssueKind::UnknownLabel]);
        assert_eq!(
            kinds("g.V().has('person','postalCode','1')"),
            vec![IssueKind::UnknownProperty]
        );
        // edge property read from the wrong alias
        assert_eq!(
            kinds("g.V().has('company','name','X').inE('serve').as('a').outV().as('b').select('b').values('position')"),
            vec![IssueKind::UnknownProperty]
        );
    }

    #[test]
    fn parse_only_and_arity() {
        assert_eq!(kinds("g.V().match(out())"), vec![IssueKind::UnsupportedOperator]);
        assert_eq!(kinds("g.V().limit('x')"), vec![IssueKind::ArityError]);
        assert_eq!(kinds("g.V().by('name')"), vec![IssueKind::ArityError]);
        assert_eq!(kinds("g.V().times(2)"), vec![IssueKind::ArityError]);
    }
}
