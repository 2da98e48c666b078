//! Formula parser.
//!
//! ```text
//! [] ~ ('Top | ('Pgrn = # 1, 'Cgrn = # 1))
//! 'Top : ([] ('TrafficLight @ 'normal -> ~ ('TrafficLight . 'normal : ('CarLight @ 'Cgrn))))
//! ```
//!
//! Quotes before names and `#` before values are optional. `[]`, `<>` and
//! `~` bind tightest, then `U` (left associative), `/\`, `\/` and `->`
//! (right associative).

use std::collections::BTreeMap;

use super::lexer::{Cursor, ParseError, Tok};
use super::model::literal;
use crate::analysis::{Formula, Proposition};
use crate::model::ActorPath;

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut c = Cursor::new(src)?;
    if c.at_end() {
        return Err(c.error("empty formula"));
    }
    let f = implies(&mut c)?;
    if !c.at_end() {
        return Err(c.unexpected("end of formula"));
    }
    Ok(f)
}

/// Parses a single proposition such as `Top.A @ loc` or `Top | x = 1`.
pub fn parse_proposition(src: &str) -> Result<Proposition, ParseError> {
    let mut c = Cursor::new(src)?;
    let pos = c.pos();
    match path_form(&mut c)? {
        Formula::Prop(p) if c.at_end() => Ok(p),
        Formula::Prop(_) => Err(c.unexpected("end of proposition")),
        _ => Err(ParseError::new(
            pos.0,
            pos.1,
            "expected a proposition, not a scope",
        )),
    }
}

fn implies(c: &mut Cursor) -> Result<Formula, ParseError> {
    let l = or(c)?;
    if c.eat_sym("->") {
        return Ok(Formula::implies(l, implies(c)?));
    }
    Ok(l)
}

fn or(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut l = and(c)?;
    while c.eat_sym("\\/") {
        l = Formula::or(l, and(c)?);
    }
    Ok(l)
}

fn and(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut l = until(c)?;
    while c.eat_sym("/\\") {
        l = Formula::and(l, until(c)?);
    }
    Ok(l)
}

fn until(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut l = unary(c)?;
    while c.eat_ident("U") {
        l = Formula::until(l, unary(c)?);
    }
    Ok(l)
}

fn unary(c: &mut Cursor) -> Result<Formula, ParseError> {
    if c.eat_sym("~") {
        return Ok(Formula::not(unary(c)?));
    }
    if c.eat_sym("[]") {
        return Ok(Formula::always(unary(c)?));
    }
    if c.eat_sym("<>") {
        return Ok(Formula::eventually(unary(c)?));
    }
    if c.eat_sym("(") {
        let f = implies(c)?;
        c.expect_sym(")")?;
        return Ok(f);
    }
    if c.eat_ident("True") {
        return Ok(Formula::True);
    }
    if c.eat_ident("False") {
        return Ok(Formula::False);
    }
    path_form(c)
}

fn name(c: &mut Cursor) -> Result<String, ParseError> {
    c.eat_sym("'");
    if c.is_ident("U") {
        return Err(c.error("`U` is reserved for the until operator"));
    }
    c.ident()
}

fn path_form(c: &mut Cursor) -> Result<Formula, ParseError> {
    if !matches!(c.peek(), Some(Tok::Ident(_)) | Some(Tok::Sym("'"))) {
        return Err(c.unexpected("a formula"));
    }
    let mut segs = vec![name(c)?];
    while c.eat_sym(".") {
        segs.push(name(c)?);
    }
    let actor = ActorPath::new(segs).expect("at least one segment");
    if c.eat_sym("@") {
        let location = name(c)?;
        return Ok(Formula::Prop(Proposition::Loc { actor, location }));
    }
    if c.eat_sym("|") {
        let parens = c.eat_sym("(");
        let mut assignments = BTreeMap::new();
        if !(parens && c.is_sym(")")) {
            loop {
                let pos = c.pos();
                let var = name(c)?;
                c.expect_sym("=")?;
                c.eat_sym("#");
                let v = literal(c)?;
                if assignments.insert(var.clone(), v).is_some() {
                    return Err(ParseError::new(
                        pos.0,
                        pos.1,
                        format!("`{var}` constrained twice"),
                    ));
                }
                if !c.eat_sym(",") {
                    break;
                }
            }
        }
        if parens {
            c.expect_sym(")")?;
        }
        return Ok(Formula::Prop(Proposition::Var { actor, assignments }));
    }
    if c.eat_sym(":") {
        return Ok(Formula::scope(actor, unary(c)?));
    }
    Err(c.unexpected("`@`, `|` or `:` after an actor path"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::desugar_scope;
    use crate::model::Value;

    fn path(s: &str) -> ActorPath {
        ActorPath::parse(s).unwrap()
    }

    fn loc(a: &str, l: &str) -> Formula {
        Formula::Prop(Proposition::Loc {
            actor: path(a),
            location: l.into(),
        })
    }

    fn var(a: &str, vs: &[(&str, i64)]) -> Formula {
        Formula::Prop(Proposition::Var {
            actor: path(a),
            assignments: vs
                .iter()
                .map(|(k, v)| (k.to_string(), Value::int(*v)))
                .collect(),
        })
    }

    #[test]
    fn safety_formula() {
        let f = parse_formula("[] ~ ('HierarchicalTrafficLight | ('Pgrn = # 1, 'Cgrn = # 1) )")
            .unwrap();
        let want = Formula::always(Formula::not(var(
            "HierarchicalTrafficLight",
            &[("Pgrn", 1), ("Cgrn", 1)],
        )));
        assert_eq!(f, want);
        assert_eq!(parse_formula("True").unwrap(), Formula::True);
        // quotes and `#` are optional
        assert_eq!(
            parse_formula("[] ~ (HierarchicalTrafficLight | (Pgrn = 1, Cgrn = 1))").unwrap(),
            want
        );
    }

    #[test]
    fn scoped_formula() {
        let src = "'HierarchicalTrafficLight : (
  [] ('TrafficLight @ 'normal ->
     ~ ('TrafficLight . 'normal : ('CarLight @ 'Cgrn /\\ 'PedestrianLight @ 'Pgreen))))";
        let f = parse_formula(src).unwrap();
        assert!(matches!(f, Formula::Scope(..)));
        let want = Formula::always(Formula::implies(
            loc("HierarchicalTrafficLight.TrafficLight", "normal"),
            Formula::not(Formula::and(
                loc(
                    "HierarchicalTrafficLight.TrafficLight.normal.CarLight",
                    "Cgrn",
                ),
                loc(
                    "HierarchicalTrafficLight.TrafficLight.normal.PedestrianLight",
                    "Pgreen",
                ),
            )),
        ));
        assert_eq!(desugar_scope(&f), want);
    }

    #[test]
    fn precedence() {
        let (p, q, r) = (loc("A", "p"), loc("A", "q"), loc("A", "r"));
        assert_eq!(
            parse_formula("A@p U A@q U A@r").unwrap(),
            Formula::until(Formula::until(p.clone(), q.clone()), r.clone())
        );
        assert_eq!(
            parse_formula("A@p -> A@q -> A@r").unwrap(),
            Formula::implies(p.clone(), Formula::implies(q.clone(), r.clone()))
        );
        assert_eq!(
            parse_formula("[] A@p /\\ <> A@q \\/ A@r").unwrap(),
            Formula::or(
                Formula::and(Formula::always(p.clone()), Formula::eventually(q.clone())),
                r
            )
        );
        assert_eq!(
            parse_formula("~ A@p U A@q").unwrap(),
            Formula::until(Formula::not(p), q)
        );
    }

    #[test]
    fn liveness_formula() {
        let f = parse_formula(
            "[]<> ('HierarchicalTrafficLight | ('Pgrn = # 1, 'Cgrn = # 0)) /\\ []<> ('HierarchicalTrafficLight | ('Pgrn = # 0, 'Cgrn = # 1))",
        )
        .unwrap();
        assert!(matches!(f, Formula::And(..)));
    }

    #[test]
    fn errors() {
        assert!(parse_formula("").is_err());
        assert!(parse_formula("[] (A @ p").is_err());
        let e = parse_formula("A @ p /\\ ").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_formula("A").is_err());
        assert!(parse_proposition("A : (A @ p)").is_err());
        assert_eq!(
            parse_proposition("A.B @ x").unwrap(),
            Proposition::Loc {
                actor: path("A.B"),
                location: "x".into()
            }
        );
    }
}
