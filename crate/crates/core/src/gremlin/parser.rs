//! Tokenizer and recursive-descent parser for the supported Gremlin subset.

use super::ast::*;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Float(f64),
    Dot,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Str(_) => "string literal".into(),
            Tok::Int(_) | Tok::Float(_) => "number".into(),
            Tok::Dot => "'.'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of script".into(),
        }
    }
}

/// Character offsets are counted in Unicode scalar values.
fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '.' => {
                toks.push((Tok::Dot, start));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, start));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, start));
                i += 1;
            }
            '\'' | '"' => {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return Err(SyntaxError::new(start, "unterminated string literal"));
                    };
                    i += 1;
                    match ch {
                        '\\' => {
                            let Some(&esc) = chars.get(i) else {
                                return Err(SyntaxError::new(i, "dangling escape"));
                            };
                            i += 1;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                'r' => '\r',
                                other => other,
                            });
                        }
                        ch if ch == quote => break,
                        ch => s.push(ch),
                    }
                }
                toks.push((Tok::Str(s), start));
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                i += 1;
                while chars.get(i).is_some_and(char::is_ascii_digit) {
                    i += 1;
                }
                let mut is_float = false;
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                    is_float = true;
                    i += 1;
                    while chars.get(i).is_some_and(char::is_ascii_digit) {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E'))
                    && chars
                        .get(i + 1)
                        .is_some_and(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
                {
                    is_float = true;
                    i += 2;
                    while chars.get(i).is_some_and(char::is_ascii_digit) {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                // Groovy numeric suffixes
                if matches!(chars.get(i), Some('L' | 'l')) {
                    i += 1;
                } else if matches!(chars.get(i), Some('d' | 'D' | 'f' | 'F')) {
                    is_float = true;
                    i += 1;
                }
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| SyntaxError::new(start, "bad number"))?)
                } else {
                    Tok::Int(text.parse().map_err(|_| SyntaxError::new(start, "integer out of range"))?)
                };
                toks.push((tok, start));
            }
            c if c.is_alphabetic() || c == '_' => {
                while chars.get(i).is_some_and(|c| c.is_alphanumeric() || *c == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
            }
            other => {
                return Err(SyntaxError::new(start, format!("unexpected character '{other}'")));
            }
        }
    }
    toks.push((Tok::Eof, chars.len()));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> SyntaxError {
        SyntaxError::new(
            self.offset(),
            format!("expected {what}, found {}", self.peek().describe()),
        )
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), SyntaxError> {
        let off = self.offset();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, off))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn script(&mut self) -> Result<Traversal, SyntaxError> {
        let (g, off) = self.ident("traversal source 'g'")?;
        if g != "g" {
            return Err(SyntaxError::new(off, "script must start with 'g'"));
        }
        self.expect(Tok::Dot, "'.' after 'g'")?;
        let (src, off) = self.ident("'V' or 'E'")?;
        let kind = match src.as_str() {
            "V" => SourceKind::V,
            "E" => SourceKind::E,
            _ => return Err(SyntaxError::new(off, format!("unsupported source step '{src}'"))),
        };
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.literal()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        let mut steps = Vec::new();
        while *self.peek() == Tok::Dot {
            self.bump();
            steps.push(self.step()?);
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("'.' or end of script"));
        }
        Ok(Traversal {
            source: Source { kind, args },
            steps,
        })
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let lit = match self.peek().clone() {
            Tok::Str(s) => Literal::Str(s),
            Tok::Int(i) => Literal::Int(i),
            Tok::Float(f) => Literal::Float(f),
            Tok::Ident(s) if s == "true" => Literal::Bool(true),
            Tok::Ident(s) if s == "false" => Literal::Bool(false),
            _ => return Err(self.unexpected("literal")),
        };
        self.bump();
        Ok(lit)
    }

    fn step(&mut self) -> Result<Step, SyntaxError> {
        let (name, off) = self.ident("step name")?;
        let op = match Op::from_name(&name) {
            Some(op) => op,
            None if name == "V" || name == "E" => {
                return Err(SyntaxError::new(off, format!("'{name}()' is only allowed as the source")));
            }
            None => return Err(SyntaxError::new(off, format!("unsupported step '{name}'"))),
        };
        self.expect(Tok::LParen, "'(' after step name")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.arg()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(Step { op, args })
    }

    fn arg(&mut self) -> Result<Arg, SyntaxError> {
        match self.peek().clone() {
            Tok::Str(_) | Tok::Int(_) | Tok::Float(_) => Ok(Arg::Lit(self.literal()?)),
            Tok::Ident(name) => {
                if name == "true" || name == "false" {
                    return Ok(Arg::Lit(self.literal()?));
                }
                if name == "__" {
                    self.bump();
                    self.expect(Tok::Dot, "'.' after '__'")?;
                    return self.anon();
                }
                if (name == "P" || name == "TextP") && *self.peek_at(1) == Tok::Dot {
                    self.bump();
                    self.bump();
                    let (pname, off) = self.ident("predicate name")?;
                    return self.predicate_body(&pname, off);
                }
                let next = self.peek_at(1).clone();
                if next == Tok::LParen {
                    if PredOp::from_name(&name).is_some() {
                        let off = self.offset();
                        self.bump();
                        return self.predicate_body(&name, off);
                    }
                    return self.anon();
                }
                // enum token, possibly dotted: Order.desc, T.label, Scope.local
                self.bump();
                let mut token = name;
                while *self.peek() == Tok::Dot {
                    if let Tok::Ident(part) = self.peek_at(1).clone() {
                        self.bump();
                        self.bump();
                        token.push('.');
                        token.push_str(&part);
                    } else {
                        return Err(self.unexpected("identifier"));
                    }
                }
                Ok(Arg::Token(token))
            }
            _ => Err(self.unexpected("step argument")),
        }
    }

    fn predicate_body(&mut self, name: &str, off: usize) -> Result<Arg, SyntaxError> {
        let op = PredOp::from_name(name)
            .ok_or_else(|| SyntaxError::new(off, format!("unknown predicate '{name}'")))?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.literal()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(Arg::Pred(Predicate { op, args }))
    }

    fn anon(&mut self) -> Result<Arg, SyntaxError> {
        let mut steps = vec![self.step()?];
        while *self.peek() == Tok::Dot {
            self.bump();
            steps.push(self.step()?);
        }
        Ok(Arg::Anon(AnonTraversal { steps }))
    }
}

/// Parses a script into a [`Traversal`]. Periods inside string literals are
/// part of the literal; whitespace between tokens is insignificant.
pub fn parse(script: &str) -> Result<Traversal, SyntaxError> {
    let toks = lex(script)?;
    Parser { toks, pos: 0 }.script()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_steps_after_source() {
        let t = parse("g.V().hasLabel('person').values('name')").unwrap();
        assert_eq!(t.source.kind, SourceKind::V);
        assert_eq!(
            t.steps.iter().map(|s| s.op).collect::<Vec<_>>(),
            vec![Op::HasLabel, Op::Values]
        );
    }

    #[test]
    fn periods_in_literals_do_not_split_steps() {
        let t = parse("g.V().has('company','name','Acme.Co').count()").unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].args[2].as_str(), Some("Acme.Co"));
    }

    #[test]
    fn empty_step_is_a_syntax_error_at_its_offset() {
        let err = parse("g.V()..out()").unwrap_err();
        assert_eq!(err.offset, 6);
    }

    #[test]
    fn whitespace_normalizes() {
        assert_eq!(parse("g . V() . count()").unwrap().pretty(), "g.V().count()");
    }

    #[test]
    fn nested_anonymous_traversals_round_trip() {
        let src = "g.V().coalesce(out('a'),out('b'))";
        let t = parse(src).unwrap();
        assert_eq!(t.pretty(), src);
        let src = "g.V().as('a').where(__.in('x').count().is(gt(2))).select('a').by(values('name'))";
        let t = parse(src).unwrap();
        assert_eq!(parse(&t.pretty()).unwrap(), t);
        assert_eq!(t.pretty(), src);
    }

    #[test]
    fn predicates_tokens_and_numbers() {
        let t = parse("g.V().has('c','cap',P.gt(1.5)).order().by('cap',Order.desc).limit(3L)").unwrap();
        assert!(matches!(&t.steps[0].args[2], Arg::Pred(p) if p.op == PredOp::Gt));
        assert_eq!(t.steps[2].args[1], Arg::Token("Order.desc".into()));
        assert_eq!(t.steps[3].args[0], Arg::Lit(Literal::Int(3)));
        assert_eq!(t.pretty(), "g.V().has('c','cap',gt(1.5)).order().by('cap',Order.desc).limit(3)");
    }

    #[test]
    fn rejects_unknown_steps_and_mid_traversal_sources() {
        assert!(parse("g.V().addV('x')").is_err());
        assert!(parse("g.V().out().V()").is_err());
        assert!(parse("V().count()").is_err());
        assert!(parse("g.V().values('a'").is_err());
        assert!(parse("g.V().values('a)").is_err());
    }

    #[test]
    fn escapes_survive_round_trip() {
        let t = parse(r#"g.V().has('name',"O'Brien \\ Co")"#).unwrap();
        assert_eq!(t.steps[0].args[1].as_str(), Some("O'Brien \\ Co"));
        assert_eq!(parse(&t.pretty()).unwrap(), t);
    }
}
