//! Deterministic answer sentences.

use crate::gremlin::{Op, ResultSet, Traversal};
use crate::value::Value;

pub const NO_RECORDS: &str = "No matching records were found.";
pub const OFF_TOPIC: &str =
    "I can only answer questions about companies, the people behind them and their business records.";
pub const CLARIFY: &str = "Could you rephrase the question and name the company you are asking about?";
pub const BACKEND_DOWN: &str = "Sorry, the assistant is temporarily unavailable. Please try again shortly.";

/// Fixed replies for intents that bypass query generation.
pub fn template_answer(intent: &str) -> String {
    match intent {
        "procurement" => "For procurement requests, please use the supplier marketplace or contact our business team.",
        "franchise" => "Franchise enquiries are handled by the brand owner. Please use the franchise contact form on the company page.",
        "complaint" => "We are sorry to hear that. Please submit your complaint through the feedback channel and our service team will follow up.",
        _ => "This request is handled outside the question answering service.",
    }
    .to_string()
}

/// `postalCode` -> `postal code`.
pub fn humanize_property(name: &str) -> String {
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push(' ');
        }
        if c == '_' {
            out.push(' ');
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Answer sentence for small scalar results, `None` when the result needs
/// summarizing instead.
pub fn fill_in_sentence(script: &Traversal, entity: Option<&str>, result: &ResultSet) -> Option<String> {
    if result.is_empty() {
        return Some(NO_RECORDS.to_string());
    }
    if result.len() > 3 || !result.rows.iter().all(Value::is_scalar) {
        return None;
    }
    let last = script.steps.last()?;
    if last.op == Op::Count && result.len() == 1 {
        return Some(format!("The count is {}.", result.rows[0]));
    }
    let values = result.rows.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
    let plural = result.len() > 1;
    let moved = script.steps.iter().any(|s| {
        matches!(
            s.op,
            Op::Out | Op::In | Op::Both | Op::OutE | Op::InE | Op::BothE | Op::OutV | Op::InV | Op::OtherV
        )
    });
    match (last.op, last.args.as_slice(), entity) {
        (Op::Values, [arg], Some(e)) if !moved => {
            let prop = humanize_property(arg.as_str()?);
            let verb = if plural { "are" } else { "is" };
            Some(format!("The {prop} of {e} {verb} {values}."))
        }
        _ if plural => Some(format!("The answers are {values}.")),
        _ => Some(format!("The answer is {values}.")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gremlin::parse;

    fn rs(rows: Vec<Value>) -> ResultSet {
        ResultSet { rows }
    }

    #[test]
    fn postal_code_sentence() {
        let t = parse("g.V().has('company','name','Acme').values('postalCode')").unwrap();
        assert_eq!(
            fill_in_sentence(&t, Some("Acme"), &rs(vec![Value::str("100080")])).unwrap(),
            "The postal code of Acme is 100080."
        );
    }

    #[test]
    fn other_shapes() {
        let t = parse("g.V().has('company','name','Acme').in('legalPerson').values('name')").unwrap();
        assert_eq!(
            fill_in_sentence(&t, Some("Acme"), &rs(vec![Value::str("Zhang Wei")])).unwrap(),
            "The answer is Zhang Wei."
        );
        let t = parse("g.V().hasLabel('company').count()").unwrap();
        assert_eq!(fill_in_sentence(&t, None, &rs(vec![Value::Int(4)])).unwrap(), "The count is 4.");
        assert_eq!(fill_in_sentence(&t, None, &rs(vec![])).unwrap(), NO_RECORDS);
        let t = parse("g.V().hasLabel('company').valueMap()").unwrap();
        let m = Value::Map(Default::default());
        assert_eq!(fill_in_sentence(&t, None, &rs(vec![m])), None);
    }

    #[test]
    fn humanize() {
        assert_eq!(humanize_property("registeredCapital"), "registered capital");
        assert_eq!(humanize_property("name"), "name");
    }
}
