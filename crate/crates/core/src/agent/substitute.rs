//! Puts resolved entity names back into a script generated on masked text.

use std::collections::BTreeSet;

use crate::graph::normalize;
use crate::gremlin::{AnonTraversal, Arg, Literal, Step, Traversal};
use crate::store::PLACEHOLDER;

/// Rewrites string literals that are either the mask placeholder or an
/// entity name borrowed from an example (`example_names`, normalized).
/// The i-th distinct such literal becomes `names[i]`; extra literals reuse
/// the last name. With no names the script is left alone. Returns the
/// number of literals rewritten.
pub fn resubstitute(t: &mut Traversal, names: &[String], example_names: &BTreeSet<String>) -> usize {
    if names.is_empty() {
        return 0;
    }
    let own: BTreeSet<String> = names.iter().map(|n| normalize(n)).collect();
    let placeholder = normalize(PLACEHOLDER);
    let mut seen: Vec<String> = Vec::new();
    let mut count = 0;
    let mut visit = |lit: &mut Literal| {
        let Literal::Str(s) = lit else { return };
        let n = normalize(s);
        let borrowed = n == placeholder || s.eq_ignore_ascii_case(PLACEHOLDER) || example_names.contains(&n);
        if !borrowed || own.contains(&n) {
            return;
        }
        let slot = match seen.iter().position(|x| *x == n) {
            Some(i) => i,
            None => {
                seen.push(n);
                seen.len() - 1
            }
        };
        *s = names[slot.min(names.len() - 1)].clone();
        count += 1;
    };
    for a in &mut t.source.args {
        visit(a);
    }
    walk_steps(&mut t.steps, &mut visit);
    count
}

fn walk_steps(steps: &mut [Step], visit: &mut impl FnMut(&mut Literal)) {
    for s in steps {
        for a in &mut s.args {
            match a {
                Arg::Lit(l) => visit(l),
                Arg::Pred(p) => p.args.iter_mut().for_each(&mut *visit),
                Arg::Anon(AnonTraversal { steps }) => walk_steps(steps, visit),
                Arg::Token(_) => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gremlin::parse;

    fn run(script: &str, names: &[&str], examples: &[&str]) -> String {
        let mut t = parse(script).unwrap();
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let ex = examples.iter().map(|s| normalize(s)).collect();
        resubstitute(&mut t, &names, &ex);
        t.pretty()
    }

    #[test]
    fn placeholder_and_example_names() {
        assert_eq!(
            run("g.V().has('company','name','[COMPANY]').values('phone')", &["Acme"], &[]),
            "g.V().has('company','name','Acme').values('phone')"
        );
        assert_eq!(
            run("g.V().has('company','name','Baidu').in('legalPerson').values('name')", &["Acme"], &["Baidu"]),
            "g.V().has('company','name','Acme').in('legalPerson').values('name')"
        );
    }

    #[test]
    fn untouched_literals() {
        // property keys, labels and unrelated strings stay
        let s = "g.V().has('company','name','Other').where(has('city','Beijing')).values('name')";
        assert_eq!(run(s, &["Acme"], &["Baidu"]), s);
        // no resolved names: placeholder stays
        let s = "g.V().has('company','name','[COMPANY]').count()";
        assert_eq!(run(s, &[], &[]), s);
    }

    #[test]
    fn two_entities_in_order() {
        assert_eq!(
            run(
                "g.V().has('company','name',within('[COMPANY]','Baidu')).values('name')",
                &["A Co", "B Co"],
                &["Baidu"]
            ),
            "g.V().has('company','name',within('A Co','B Co')).values('name')"
        );
    }
}
