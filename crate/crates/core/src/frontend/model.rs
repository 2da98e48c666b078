//! Model file parser.
//!
//! ```text
//! formatVersion: 1
//! composite Top {
//!   var Cred = 0;
//!   clock Clock { period = 1; offset = 0; emit = 1; }
//!   fsm Light {
//!     input Sec; output Cred;
//!     locations Off, On; initial Off;
//!     var count = 0;
//!     transition Off -> On { guard isPresent(Sec); output Cred = 1; set count = count + 1; }
//!   }
//!   setvar SetCred { variable = Cred; }
//!   connect Clock.output -> Light.Sec;
//!   connect Light.Cred -> SetCred.input;
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use super::lexer::{Cursor, ParseError, Tok};
use crate::model::{
    validate, ActorNode, BinaryOp, Connection, Container, Expression, Fsm, Modal, PortOwner,
    PortRef, Ports, TimeVal, Transition, UnaryOp, ValidationErrors, Value,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub format_version: u32,
    pub top: ActorNode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelFileError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
}

/// Parses and validates a model document.
pub fn parse_model(src: &str) -> Result<ModelDocument, ModelFileError> {
    let doc = parse_unchecked(src)?;
    validate(&doc.top)?;
    Ok(doc)
}

/// Parses without structural validation.
pub fn parse_unchecked(src: &str) -> Result<ModelDocument, ParseError> {
    let mut c = Cursor::new(src)?;
    if c.at_end() {
        return Err(c.error("empty model document"));
    }
    c.expect_keyword("formatVersion")?;
    c.expect_sym(":")?;
    let version = match c.bump() {
        Some(Tok::Int(n)) => n
            .parse::<u32>()
            .map_err(|_| c.error("bad format version"))?,
        _ => return Err(c.error("expected a format version number")),
    };
    if version != FORMAT_VERSION {
        return Err(c.error(format!("unsupported formatVersion {version}")));
    }
    let top = actor(&mut c)?;
    if !c.at_end() {
        return Err(c.unexpected("end of input"));
    }
    Ok(ModelDocument {
        format_version: version,
        top,
    })
}

const KINDS: &[&str] = &["composite", "modal", "fsm", "clock", "delay", "setvar"];

#[derive(Default)]
struct Decls {
    inputs: Vec<String>,
    outputs: Vec<String>,
    params: BTreeMap<String, Value>,
    vars: BTreeMap<String, Value>,
    settings: BTreeMap<String, Setting>,
    // fsm
    locations: Option<BTreeSet<String>>,
    initial: Option<String>,
    transitions: BTreeSet<Transition>,
    // containers
    inner: BTreeMap<String, ActorNode>,
    connections: BTreeSet<Connection>,
    controller: Option<String>,
    refinements: BTreeMap<String, String>,
}

#[derive(Clone)]
enum Setting {
    Time(TimeVal),
    Value(Value),
    Name(String),
}

fn actor(c: &mut Cursor) -> Result<ActorNode, ParseError> {
    let kind_pos = c.pos();
    let kind = c.ident()?;
    if !KINDS.contains(&kind.as_str()) {
        return Err(ParseError::new(
            kind_pos.0,
            kind_pos.1,
            format!(
                "unknown actor kind `{kind}` (expected one of {})",
                KINDS.join(", ")
            ),
        ));
    }
    let name = c.ident()?;
    c.expect_sym("{")?;
    let mut d = Decls::default();
    while !c.eat_sym("}") {
        if c.at_end() {
            return Err(c.unexpected("`}`"));
        }
        item(c, &kind, &mut d)?;
    }
    build(kind_pos, &kind, &name, d)
}

fn names(c: &mut Cursor) -> Result<Vec<String>, ParseError> {
    let mut out = vec![c.ident()?];
    while c.eat_sym(",") {
        out.push(c.ident()?);
    }
    Ok(out)
}

fn item(c: &mut Cursor, kind: &str, d: &mut Decls) -> Result<(), ParseError> {
    let pos = c.pos();
    let kw = c.ident()?;
    let fixed_ports = matches!(kind, "clock" | "delay" | "setvar");
    let container = matches!(kind, "composite" | "modal");
    match kw.as_str() {
        "input" | "output" | "inout" if !fixed_ports => {
            let ns = names(c)?;
            if kw != "output" {
                d.inputs.extend(ns.iter().cloned());
            }
            if kw != "input" {
                d.outputs.extend(ns);
            }
        }
        "param" | "var" => {
            let n = c.ident()?;
            c.expect_sym("=")?;
            let v = literal(c)?;
            let map = if kw == "param" {
                &mut d.params
            } else {
                &mut d.vars
            };
            if map.insert(n.clone(), v).is_some() {
                return Err(ParseError::new(
                    pos.0,
                    pos.1,
                    format!("duplicate {kw} `{n}`"),
                ));
            }
        }
        "period" | "offset" if kind == "clock" => {
            c.expect_sym("=")?;
            d.settings.insert(kw, Setting::Time(time_literal(c)?));
        }
        "delay" if kind == "delay" => {
            c.expect_sym("=")?;
            d.settings.insert(kw, Setting::Time(time_literal(c)?));
        }
        "emit" if kind == "clock" => {
            c.expect_sym("=")?;
            d.settings.insert(kw, Setting::Value(literal(c)?));
        }
        "variable" if kind == "setvar" => {
            c.expect_sym("=")?;
            d.settings.insert(kw, Setting::Name(c.ident()?));
        }
        "locations" if kind == "fsm" => {
            d.locations
                .get_or_insert_with(BTreeSet::new)
                .extend(names(c)?);
        }
        "initial" if kind == "fsm" => d.initial = Some(c.ident()?),
        "transition" if kind == "fsm" => {
            let t = transition(c)?;
            if !d.transitions.insert(t) {
                return Err(ParseError::new(pos.0, pos.1, "duplicate transition"));
            }
            return Ok(());
        }
        "controller" if kind == "modal" => d.controller = Some(c.ident()?),
        "refinement" if kind == "modal" => {
            let loc = c.ident()?;
            c.expect_sym("->")?;
            let a = c.ident()?;
            if d.refinements.insert(loc.clone(), a).is_some() {
                return Err(ParseError::new(
                    pos.0,
                    pos.1,
                    format!("duplicate refinement for `{loc}`"),
                ));
            }
        }
        "connect" if container => {
            let source = port_ref(c)?;
            c.expect_sym("->")?;
            let mut sinks = vec![port_ref(c)?];
            while c.eat_sym(",") {
                sinks.push(port_ref(c)?);
            }
            d.connections.insert(Connection::new(source, sinks));
        }
        k if container && KINDS.contains(&k) => return nested(c, pos, k, d),
        _ => {
            return Err(ParseError::new(
                pos.0,
                pos.1,
                format!("unexpected `{kw}` in {kind} actor"),
            ))
        }
    }
    c.expect_sym(";")
}

fn nested(
    c: &mut Cursor,
    pos: (usize, usize),
    kind: &str,
    d: &mut Decls,
) -> Result<(), ParseError> {
    let name = c.ident()?;
    c.expect_sym("{")?;
    let mut inner = Decls::default();
    while !c.eat_sym("}") {
        if c.at_end() {
            return Err(c.unexpected("`}`"));
        }
        item(c, kind, &mut inner)?;
    }
    let node = build(pos, kind, &name, inner)?;
    if d.inner.insert(name.clone(), node).is_some() {
        return Err(ParseError::new(
            pos.0,
            pos.1,
            format!("duplicate actor `{name}`"),
        ));
    }
    Ok(())
}

fn build(pos: (usize, usize), kind: &str, name: &str, d: Decls) -> Result<ActorNode, ParseError> {
    let err = |m: String| ParseError::new(pos.0, pos.1, m);
    let time = |key: &str, default: Option<TimeVal>| -> Result<TimeVal, ParseError> {
        match d.settings.get(key) {
            Some(Setting::Time(t)) => Ok(t.clone()),
            _ => default.ok_or_else(|| err(format!("{kind} `{name}` needs `{key} = ...;`"))),
        }
    };
    let ports = Ports::with(
        &d.inputs.iter().map(String::as_str).collect::<Vec<_>>(),
        &d.outputs.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    let no_vars = |what: &str| {
        if d.vars.is_empty() {
            Ok(())
        } else {
            Err(err(format!("{what} actors have no variables")))
        }
    };
    let mut node = match kind {
        "clock" => {
            no_vars("clock")?;
            let emit = match d.settings.get("emit") {
                Some(Setting::Value(v)) => v.clone(),
                _ => Value::int(1),
            };
            ActorNode::clock(
                name,
                time("period", None)?,
                time("offset", Some(TimeVal::zero()))?,
                emit,
            )
        }
        "delay" => {
            no_vars("delay")?;
            ActorNode::delay(name, time("delay", None)?)
        }
        "setvar" => {
            no_vars("setvar")?;
            match d.settings.get("variable") {
                Some(Setting::Name(v)) => ActorNode::set_variable(name, v),
                _ => return Err(err(format!("setvar `{name}` needs `variable = NAME;`"))),
            }
        }
        "fsm" => {
            let locations = d
                .locations
                .clone()
                .ok_or_else(|| err(format!("fsm `{name}` declares no locations")))?;
            let initial = d
                .initial
                .clone()
                .ok_or_else(|| err(format!("fsm `{name}` has no initial location")))?;
            ActorNode::fsm(
                name,
                ports,
                Fsm {
                    locations,
                    current: initial.clone(),
                    initial,
                    initial_variables: d.vars.clone(),
                    variables: d.vars.clone(),
                    transitions: d.transitions.clone(),
                },
            )
        }
        "composite" | "modal" => {
            let body = Container {
                inner: d.inner.clone(),
                connections: d.connections.clone(),
                initial_variables: d.vars.clone(),
                variables: d.vars.clone(),
            };
            if kind == "composite" {
                ActorNode::composite(name, ports, body)
            } else {
                let controller = d
                    .controller
                    .clone()
                    .ok_or_else(|| err(format!("modal `{name}` names no controller")))?;
                ActorNode::modal(
                    name,
                    ports,
                    Modal {
                        controller,
                        refinements: d.refinements.clone(),
                        body,
                    },
                )
            }
        }
        _ => unreachable!("kind checked by caller"),
    };
    node.parameters = d.params;
    Ok(node)
}

fn port_ref(c: &mut Cursor) -> Result<PortRef, ParseError> {
    let owner = c.ident()?;
    c.expect_sym(".")?;
    let port = c.ident()?;
    Ok(if owner == "parent" {
        PortRef::parent(&port)
    } else {
        PortRef {
            owner: PortOwner::Actor(owner),
            port,
        }
    })
}

fn transition(c: &mut Cursor) -> Result<Transition, ParseError> {
    let src = c.ident()?;
    c.expect_sym("->")?;
    let dst = c.ident()?;
    c.expect_sym("{")?;
    let mut t = Transition::new(&src, &dst, Expression::lit(true));
    let mut seen_guard = false;
    while !c.eat_sym("}") {
        let pos = c.pos();
        let kw = c.ident()?;
        match kw.as_str() {
            "guard" if !seen_guard => {
                t.guard = expression(c)?;
                seen_guard = true;
            }
            "output" | "set" => loop {
                let n = c.ident()?;
                c.expect_sym("=")?;
                let e = expression(c)?;
                let map = if kw == "output" {
                    &mut t.outputs
                } else {
                    &mut t.sets
                };
                if map.insert(n.clone(), e).is_some() {
                    return Err(ParseError::new(
                        pos.0,
                        pos.1,
                        format!("`{n}` assigned twice"),
                    ));
                }
                if !c.eat_sym(",") {
                    break;
                }
            },
            _ => {
                return Err(ParseError::new(
                    pos.0,
                    pos.1,
                    format!("unexpected `{kw}` in transition"),
                ))
            }
        }
        c.expect_sym(";")?;
    }
    Ok(t)
}

fn time_literal(c: &mut Cursor) -> Result<TimeVal, ParseError> {
    let pos = c.pos();
    let text = match c.bump() {
        Some(Tok::Int(s)) | Some(Tok::Decimal(s)) => {
            if c.is_sym("/") {
                c.bump();
                match c.bump() {
                    Some(Tok::Int(d)) => format!("{s}/{d}"),
                    _ => return Err(c.error("expected a denominator")),
                }
            } else {
                s
            }
        }
        _ => return Err(ParseError::new(pos.0, pos.1, "expected a time value")),
    };
    text.parse()
        .map_err(|e| ParseError::new(pos.0, pos.1, format!("{e}")))
}

/// A literal value, as printed by `Value`'s `Display`.
pub fn literal(c: &mut Cursor) -> Result<Value, ParseError> {
    let pos = c.pos();
    match expression(c)? {
        Expression::Lit(v) => Ok(v),
        _ => Err(ParseError::new(pos.0, pos.1, "expected a literal value")),
    }
}

pub fn expression(c: &mut Cursor) -> Result<Expression, ParseError> {
    or_expr(c)
}

fn or_expr(c: &mut Cursor) -> Result<Expression, ParseError> {
    let mut l = and_expr(c)?;
    while c.eat_sym("||") {
        l = Expression::bin(BinaryOp::Or, l, and_expr(c)?);
    }
    Ok(l)
}

fn and_expr(c: &mut Cursor) -> Result<Expression, ParseError> {
    let mut l = cmp_expr(c)?;
    while c.eat_sym("&&") {
        l = Expression::bin(BinaryOp::And, l, cmp_expr(c)?);
    }
    Ok(l)
}

fn cmp_expr(c: &mut Cursor) -> Result<Expression, ParseError> {
    let l = add_expr(c)?;
    let op = match c.peek() {
        Some(Tok::Sym("<")) => BinaryOp::Lt,
        Some(Tok::Sym("<=")) => BinaryOp::Le,
        Some(Tok::Sym(">")) => BinaryOp::Gt,
        Some(Tok::Sym(">=")) => BinaryOp::Ge,
        Some(Tok::Sym("==")) => BinaryOp::Eq,
        Some(Tok::Sym("!=")) => BinaryOp::Ne,
        _ => return Ok(l),
    };
    c.bump();
    Ok(Expression::bin(op, l, add_expr(c)?))
}

fn add_expr(c: &mut Cursor) -> Result<Expression, ParseError> {
    let mut l = mul_expr(c)?;
    loop {
        let op = if c.eat_sym("+") {
            BinaryOp::Add
        } else if c.eat_sym("-") {
            BinaryOp::Sub
        } else {
            return Ok(l);
        };
        l = Expression::bin(op, l, mul_expr(c)?);
    }
}

fn mul_expr(c: &mut Cursor) -> Result<Expression, ParseError> {
    let mut l = unary(c)?;
    while c.eat_sym("*") {
        l = Expression::bin(BinaryOp::Mul, l, unary(c)?);
    }
    Ok(l)
}

fn unary(c: &mut Cursor) -> Result<Expression, ParseError> {
    if c.eat_sym("!") {
        return Ok(Expression::Unary(UnaryOp::Not, Box::new(unary(c)?)));
    }
    if c.eat_sym("-") {
        // negative integer literals stay literals
        if let Some(Tok::Int(n)) = c.peek() {
            let v: BigInt = n.parse().map_err(|_| c.error("bad integer"))?;
            c.bump();
            return Ok(Expression::Lit(Value::Int(-v)));
        }
        return Ok(Expression::Unary(UnaryOp::Neg, Box::new(unary(c)?)));
    }
    atom(c)
}

fn atom(c: &mut Cursor) -> Result<Expression, ParseError> {
    let pos = c.pos();
    match c.peek().cloned() {
        Some(Tok::Int(n)) => {
            c.bump();
            let v: BigInt = n
                .parse()
                .map_err(|_| ParseError::new(pos.0, pos.1, "bad integer"))?;
            Ok(Expression::Lit(Value::Int(v)))
        }
        Some(Tok::Decimal(s)) => {
            c.bump();
            let t: TimeVal = s
                .parse()
                .map_err(|e| ParseError::new(pos.0, pos.1, format!("{e}")))?;
            Ok(Expression::Lit(Value::Time(t)))
        }
        Some(Tok::Str(s)) => {
            c.bump();
            Ok(Expression::Lit(Value::Str(s)))
        }
        Some(Tok::Sym("(")) => {
            c.bump();
            let e = expression(c)?;
            c.expect_sym(")")?;
            Ok(e)
        }
        Some(Tok::Ident(id)) => {
            c.bump();
            match id.as_str() {
                "true" => Ok(Expression::lit(true)),
                "false" => Ok(Expression::lit(false)),
                "isPresent" | "value" => {
                    c.expect_sym("(")?;
                    let p = c.ident()?;
                    c.expect_sym(")")?;
                    Ok(if id == "isPresent" {
                        Expression::is_present(&p)
                    } else {
                        Expression::port_value(&p)
                    })
                }
                "time" => {
                    c.expect_sym("(")?;
                    let t = time_literal(c)?;
                    c.expect_sym(")")?;
                    Ok(Expression::Lit(Value::Time(t)))
                }
                _ => Ok(Expression::var(&id)),
            }
        }
        _ => Err(c.unexpected("an expression")),
    }
}
