//! LTL to Büchi automata: negation normal form, tableau expansion into a
//! generalized automaton, then degeneralization.

use std::collections::BTreeSet;

use super::formula::{desugar_scope, Formula};
use super::prop::Proposition;

/// Propositions of a formula, indexed for label vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropTable {
    pub props: Vec<Proposition>,
}

impl PropTable {
    pub fn index(&mut self, p: &Proposition) -> usize {
        match self.props.iter().position(|q| q == p) {
            Some(i) => i,
            None => {
                self.props.push(p.clone());
                self.props.len() - 1
            }
        }
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }
}

/// Formula in negation normal form over indexed propositions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ltl {
    True,
    False,
    /// Proposition `i`, negated when the flag is false.
    Lit(usize, bool),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    /// Negation normal form of `f` (negated when `negate`), after scope
    /// desugaring.
    pub fn from_formula(f: &Formula, negate: bool, table: &mut PropTable) -> Ltl {
        nnf(&desugar_scope(f), negate, table)
    }
}

fn nnf(f: &Formula, neg: bool, t: &mut PropTable) -> Ltl {
    let b = Box::new;
    match f {
        Formula::True if neg => Ltl::False,
        Formula::True => Ltl::True,
        Formula::False if neg => Ltl::True,
        Formula::False => Ltl::False,
        Formula::Prop(p) => Ltl::Lit(t.index(p), !neg),
        Formula::Not(a) => nnf(a, !neg, t),
        Formula::And(x, y) if neg => Ltl::Or(b(nnf(x, true, t)), b(nnf(y, true, t))),
        Formula::And(x, y) => Ltl::And(b(nnf(x, false, t)), b(nnf(y, false, t))),
        Formula::Or(x, y) if neg => Ltl::And(b(nnf(x, true, t)), b(nnf(y, true, t))),
        Formula::Or(x, y) => Ltl::Or(b(nnf(x, false, t)), b(nnf(y, false, t))),
        Formula::Implies(x, y) if neg => Ltl::And(b(nnf(x, false, t)), b(nnf(y, true, t))),
        Formula::Implies(x, y) => Ltl::Or(b(nnf(x, true, t)), b(nnf(y, false, t))),
        Formula::Always(a) if neg => Ltl::Until(b(Ltl::True), b(nnf(a, true, t))),
        Formula::Always(a) => Ltl::Release(b(Ltl::False), b(nnf(a, false, t))),
        Formula::Eventually(a) if neg => Ltl::Release(b(Ltl::False), b(nnf(a, true, t))),
        Formula::Eventually(a) => Ltl::Until(b(Ltl::True), b(nnf(a, false, t))),
        Formula::Until(x, y) if neg => Ltl::Release(b(nnf(x, true, t)), b(nnf(y, true, t))),
        Formula::Until(x, y) => Ltl::Until(b(nnf(x, false, t)), b(nnf(y, false, t))),
        Formula::Scope(..) => nnf(&desugar_scope(f), neg, t),
    }
}

/// State-labeled Büchi automaton. A run reads letter `i` in its `i`-th
/// state, whose literals must agree with the letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buchi {
    /// Per state: literals (proposition, polarity) it requires.
    pub labels: Vec<Vec<(usize, bool)>>,
    pub initial: Vec<usize>,
    pub succ: Vec<Vec<usize>>,
    pub accepting: Vec<bool>,
}

impl Buchi {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_ok(&self, q: usize, letter: &[bool]) -> bool {
        self.labels[q].iter().all(|&(p, pol)| letter[p] == pol)
    }

    /// Whether the automaton accepts `word[..loop_start] (word[loop_start..])^ω`.
    pub fn accepts_lasso(&self, word: &[Vec<bool>], loop_start: usize) -> bool {
        let n = word.len();
        let next = |i: usize| if i + 1 < n { i + 1 } else { loop_start };
        let id = |i: usize, q: usize| i * self.len() + q;
        let total = n * self.len();
        let mut succ = vec![Vec::new(); total];
        for i in 0..n {
            for q in 0..self.len() {
                if !self.label_ok(q, &word[i]) {
                    continue;
                }
                let j = next(i);
                for &r in &self.succ[q] {
                    if self.label_ok(r, &word[j]) {
                        succ[id(i, q)].push(id(j, r));
                    }
                }
            }
        }
        let init: Vec<usize> = self
            .initial
            .iter()
            .filter(|&&q| n > 0 && self.label_ok(q, &word[0]))
            .map(|&q| id(0, q))
            .collect();
        let reach = |from: &[usize]| {
            let mut seen = vec![false; total];
            let mut stack: Vec<usize> = from.to_vec();
            while let Some(x) = stack.pop() {
                if !seen[x] {
                    seen[x] = true;
                    stack.extend(&succ[x]);
                }
            }
            seen
        };
        let reachable = reach(&init);
        (0..total).any(|x| reachable[x] && self.accepting[x % self.len()] && reach(&succ[x])[x])
    }
}

#[derive(Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Ltl>,
    new: BTreeSet<Ltl>,
    next: BTreeSet<Ltl>,
}

const INIT: usize = usize::MAX;

/// Tableau expansion; returns the generalized automaton's nodes.
fn expand(f: Ltl) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut work = vec![Node {
        incoming: BTreeSet::from([INIT]),
        old: BTreeSet::new(),
        new: BTreeSet::from([f]),
        next: BTreeSet::new(),
    }];
    while let Some(mut node) = work.pop() {
        let Some(eta) = node.new.pop_first() else {
            if let Some(nd) = nodes
                .iter_mut()
                .find(|nd| nd.old == node.old && nd.next == node.next)
            {
                nd.incoming.extend(node.incoming);
                continue;
            }
            let id = nodes.len();
            work.push(Node {
                incoming: BTreeSet::from([id]),
                old: BTreeSet::new(),
                new: node.next.clone(),
                next: BTreeSet::new(),
            });
            nodes.push(node);
            continue;
        };
        let add = |n: &mut Node, g: &Ltl| {
            if !n.old.contains(g) {
                n.new.insert(g.clone());
            }
        };
        match &eta {
            Ltl::False => {}
            Ltl::True => {
                node.old.insert(eta);
                work.push(node);
            }
            Ltl::Lit(p, pol) => {
                if !node.old.contains(&Ltl::Lit(*p, !pol)) {
                    node.old.insert(eta);
                    work.push(node);
                }
            }
            Ltl::And(a, b) => {
                add(&mut node, a);
                add(&mut node, b);
                node.old.insert(eta);
                work.push(node);
            }
            Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                let mut n1 = node.clone();
                let mut n2 = node;
                match &eta {
                    Ltl::Or(..) => {
                        add(&mut n1, a);
                        add(&mut n2, b);
                    }
                    Ltl::Until(..) => {
                        add(&mut n1, a);
                        n1.next.insert(eta.clone());
                        add(&mut n2, b);
                    }
                    _ => {
                        add(&mut n1, b);
                        n1.next.insert(eta.clone());
                        add(&mut n2, a);
                        add(&mut n2, b);
                    }
                }
                n1.old.insert(eta.clone());
                n2.old.insert(eta);
                work.push(n1);
                work.push(n2);
            }
        }
    }
    nodes
}

fn untils(f: &Ltl, out: &mut BTreeSet<Ltl>) {
    match f {
        Ltl::True | Ltl::False | Ltl::Lit(..) => {}
        Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Release(a, b) => {
            untils(a, out);
            untils(b, out);
        }
        Ltl::Until(a, b) => {
            out.insert(f.clone());
            untils(a, out);
            untils(b, out);
        }
    }
}

/// Büchi automaton accepting exactly the words satisfying `f`.
pub fn buchi_from_ltl(f: &Ltl) -> Buchi {
    let nodes = expand(f.clone());
    let mut us = BTreeSet::new();
    untils(f, &mut us);
    // one acceptance set per until subformula
    let sets: Vec<Vec<bool>> = us
        .iter()
        .map(|u| {
            let Ltl::Until(_, b) = u else { unreachable!() };
            nodes
                .iter()
                .map(|n| !n.old.contains(u) || n.old.contains(b))
                .collect()
        })
        .collect();
    let k = sets.len().max(1);
    let in_set = |i: usize, q: usize| sets.get(i).is_none_or(|s| s[q]);
    let n = nodes.len();
    let id = |q: usize, i: usize| q * k + i;
    let mut labels = Vec::with_capacity(n * k);
    let mut succ = Vec::with_capacity(n * k);
    let mut accepting = Vec::with_capacity(n * k);
    for q in 0..n {
        let lits: Vec<(usize, bool)> = nodes[q]
            .old
            .iter()
            .filter_map(|g| match g {
                Ltl::Lit(p, pol) => Some((*p, *pol)),
                _ => None,
            })
            .collect();
        for i in 0..k {
            labels.push(lits.clone());
            let j = if in_set(i, q) { (i + 1) % k } else { i };
            succ.push(
                (0..n)
                    .filter(|&r| nodes[r].incoming.contains(&q))
                    .map(|r| id(r, j))
                    .collect(),
            );
            accepting.push(i == k - 1 && in_set(i, q));
        }
    }
    let initial = (0..n)
        .filter(|&q| nodes[q].incoming.contains(&INIT))
        .map(|q| id(q, 0))
        .collect();
    Buchi {
        labels,
        initial,
        succ,
        accepting,
    }
}
