//! Length and operator complexity scoring.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Arg, Step, Traversal};
use super::catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Simple,
    Moderate,
    Complex,
}

impl Tier {
    pub fn from_total(total: u32) -> Tier {
        match total {
            0..=4 => Tier::Simple,
            5..=7 => Tier::Moderate,
            _ => Tier::Complex,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Simple => "Simple",
            Tier::Moderate => "Moderate",
            Tier::Complex => "Complex",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub step_count: u32,
    pub length_score: u32,
    pub operator_points: u32,
    pub total: u32,
    pub tier: Tier,
    /// Operators outside the catalog; they score 0.
    #[serde(skip)]
    pub unscored: Vec<String>,
}

pub fn length_score(steps: u32) -> u32 {
    match steps {
        0..=4 => 1,
        5..=7 => 2,
        _ => 3,
    }
}

/// Scores a traversal.
///
/// `step_count` counts the period-separated top-level segments of the
/// canonical script: the `g` receiver, the `V()`/`E()` source, and every
/// top-level step. Operator points sum the catalog over the source and all
/// steps, including those nested in anonymous traversals.
pub fn complexity(t: &Traversal) -> ComplexityReport {
    let step_count = 2 + t.steps.len() as u32;
    let mut unscored = Vec::new();
    let mut points = catalog::source_entry(t.source.kind).points;
    points += steps_points(&t.steps, &mut unscored);
    let ls = length_score(step_count);
    let total = ls + points;
    if !unscored.is_empty() {
        unscored.sort();
        unscored.dedup();
        log::debug!("unscored operators: {}", unscored.join(", "));
    }
    ComplexityReport {
        step_count,
        length_score: ls,
        operator_points: points,
        total,
        tier: Tier::from_total(total),
        unscored,
    }
}

fn steps_points(steps: &[Step], unscored: &mut Vec<String>) -> u32 {
    let mut sum = 0;
    for s in steps {
        match catalog::op_entry(s.op) {
            Some(e) => sum += e.points,
            None => unscored.push(s.op.as_str().to_string()),
        }
        for a in &s.args {
            if let Arg::Anon(anon) = a {
                sum += steps_points(&anon.steps, unscored);
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gremlin::parse;

    fn score(s: &str) -> ComplexityReport {
        complexity(&parse(s).unwrap())
    }

    #[test]
    fn thresholds() {
        assert_eq!((1..=4).map(length_score).collect::<Vec<_>>(), vec![1; 4]);
        assert_eq!((5..=7).map(length_score).collect::<Vec<_>>(), vec![2; 3]);
        assert_eq!(length_score(8), 3);
        assert_eq!(Tier::from_total(4), Tier::Simple);
        assert_eq!(Tier::from_total(5), Tier::Moderate);
        assert_eq!(Tier::from_total(7), Tier::Moderate);
        assert_eq!(Tier::from_total(8), Tier::Complex);
    }

    #[test]
    fn nested_steps_score_but_do_not_lengthen() {
        let r = score("g.V().repeat(out()).times(3).path()");
        // V 1 + repeat 3 + out 1 + times 3 + path 3
        assert_eq!(r.operator_points, 11);
        assert_eq!(r.step_count, 5);
        assert_eq!(r.tier, Tier::Complex);
    }

    #[test]
    fn unlisted_operators_score_zero() {
        let r = score("g.V().as('a').limit(1)");
        assert_eq!(r.operator_points, 1);
        assert_eq!(r.unscored, vec!["as".to_string(), "limit".to_string()]);
    }

    #[test]
    fn whitespace_is_irrelevant() {
        assert_eq!(
            score("g.V().out('knows').groupCount().by('name')"),
            score("g . V ( ) . out ( 'knows' ) .groupCount( ).by( \"name\" )")
        );
    }
}
