//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use de_fixpoint::analysis::buchi::PropTable;
use de_fixpoint::analysis::lasso::eval_lasso;
use de_fixpoint::analysis::ltl::{check_graph, graph_word, label_graph};
use de_fixpoint::analysis::{
    build_state_graph, prop_holds, Formula, GraphOptions, Proposition, Verdict,
};
use de_fixpoint::exec::{simulate, step, ExecError, ExecOptions, Snapshot, StepKind};
use de_fixpoint::fire::{compute_fixpoint, compute_fixpoint_with, enabled_snapshot, PortAddr};
use de_fixpoint::frontend::formula::{parse_formula, parse_proposition};
use de_fixpoint::model::{ActorPath, Side, TimeVal, Value};
use de_fixpoint::SystemState;

const SAFETY: &str = "[] ~ ('HierarchicalTrafficLight | ('Pgrn = # 1, 'Cgrn = # 1) )";
const SCOPED: &str = "'HierarchicalTrafficLight : (
  [] ('TrafficLight @ 'normal ->
     ~ ('TrafficLight . 'normal : ('CarLight @ 'Cgrn /\\ 'PedestrianLight @ 'Pgreen))))";
const LIVENESS: &str = "[]<> ('HierarchicalTrafficLight | ('Pgrn = # 1, 'Cgrn = # 0)) /\\ \
                        []<> ('HierarchicalTrafficLight | ('Pgrn = # 0, 'Cgrn = # 1))";

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn holds_on(model: &str, formula: &str) -> Result<(bool, usize), String> {
    let f = parse_formula(formula).map_err(|e| e.to_string())?;
    let g = build_state_graph(load(model), &GraphOptions::default()).map_err(|e| e.to_string())?;
    let r = check_graph(g, &f, &ExecOptions::default()).map_err(|e| e.to_string())?;
    Ok((r.verdict.holds(), r.states))
}

fn c1_safety() -> Outcome {
    let (holds, states) = holds_on("hierarchical_traffic_light", SAFETY)?;
    ensure(holds, || "safety fails".into())?;
    ensure(states < 10_000, || format!("{states} states"))?;
    let g =
        build_state_graph(load("hierarchical_traffic_light"), &GraphOptions::default()).unwrap();
    let p = parse_proposition("'HierarchicalTrafficLight | ('Pgrn = # 1, 'Cgrn = # 1)").unwrap();
    for (i, s) in g.states.iter().enumerate() {
        ensure(!prop_holds(&s.top, &p).unwrap(), || {
            format!("node {i} has both greens")
        })?;
    }
    let out = cli(&[
        "check",
        &model_path("hierarchical_traffic_light"),
        "--unbounded",
        "--formula",
        SAFETY,
    ]);
    ensure(out.code == 0, || format!("cli exit {}", out.code))?;
    Ok(format!("holds, {states} states, every node scanned"))
}

fn c2_scoped() -> Outcome {
    let (holds, states) = holds_on("hierarchical_traffic_light", SCOPED)?;
    ensure(holds, || "scoped safety fails".into())?;
    Ok(format!("holds, {states} states"))
}

fn c3_liveness() -> Outcome {
    let (holds, states) = holds_on("hierarchical_traffic_light", LIVENESS)?;
    ensure(holds, || "liveness fails".into())?;
    Ok(format!("holds, {states} states"))
}

fn c4_mutant() -> Outcome {
    let f = parse_formula(SAFETY).unwrap();
    let g = build_state_graph(load("mutant_traffic_light"), &GraphOptions::default())
        .map_err(|e| e.to_string())?;
    let r = check_graph(g, &f, &ExecOptions::default()).map_err(|e| e.to_string())?;
    let Verdict::Fails(cex) = r.verdict else {
        return Err("mutant satisfies the safety formula".into());
    };
    let witness: Vec<_> = cex.prefix.iter().chain(&cex.cycle).collect();
    let end = witness.last().unwrap().elapsed.clone();
    let trace = simulate(load("mutant_traffic_light"), &end, &ExecOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(trace.initial == witness[0].snapshot, || {
        "initial state differs".into()
    })?;
    for (k, w) in witness.iter().enumerate().skip(1) {
        let t = trace
            .steps
            .get(k - 1)
            .ok_or_else(|| format!("trace ends before witness step {k}"))?;
        ensure(
            t.elapsed == w.elapsed && t.microstep == w.microstep && t.snapshot == w.snapshot,
            || format!("witness step {k} differs from simulation"),
        )?;
    }
    // the step after the last witness state returns to the cycle start
    let mut s = load("mutant_traffic_light");
    for _ in 0..witness.len() {
        step(&mut s, &ExecOptions::default()).map_err(|e| e.to_string())?;
    }
    ensure(Snapshot::of(&s) == cex.cycle[0].snapshot, || {
        "cycle does not close".into()
    })?;
    let both = |snap: &Snapshot| {
        let v = |n| snap.variable("HierarchicalTrafficLight", n);
        v("Pgrn") == Some(&Value::int(1)) && v("Cgrn") == Some(&Value::int(1))
    };
    ensure(cex.cycle.iter().any(|c| both(&c.snapshot)), || {
        "cycle has no violating state".into()
    })?;
    Ok(format!(
        "fails; witness of {} states replayed exactly",
        witness.len()
    ))
}

fn c5_flat_oracle() -> Outcome {
    let table =
        std::fs::read_to_string(fixture("flat_traffic_light.oracle")).map_err(|e| e.to_string())?;
    let want: Vec<Vec<i64>> = table
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    let trace = simulate(
        load("flat_traffic_light"),
        &TimeVal::from_integer(10),
        &ExecOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let got: Vec<Vec<i64>> = trace
        .steps
        .iter()
        .filter(|e| e.kind == StepKind::Iteration)
        .map(|e| {
            let mut row = vec![e.elapsed.to_string().parse().unwrap()];
            for v in ["Cred", "Cyel", "Cgrn", "Pred", "Pgrn"] {
                match e.snapshot.variable("FlatTrafficLight", v) {
                    Some(Value::Int(i)) => row.push(i.try_into().unwrap()),
                    other => panic!("{v}: {other:?}"),
                }
            }
            row
        })
        .collect();
    ensure(got == want, || format!("trace {got:?}"))?;
    Ok(format!("{} rows match", want.len()))
}

fn c6_superdense() -> Outcome {
    let trace = simulate(
        load("zero_delay_chain"),
        &TimeVal::from_integer(5),
        &ExecOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let first_set = |var: &str| {
        trace
            .steps
            .iter()
            .find(|e| e.snapshot.variable("Chain", var) == Some(&Value::int(7)))
            .map(|e| (e.elapsed.to_string(), e.microstep))
    };
    let want = [
        ("direct", "1", 0),
        ("one", "1", 1),
        ("two", "1", 2),
        ("unit", "2", 0),
    ];
    for (var, t, n) in want {
        let got = first_set(var);
        ensure(got == Some((t.to_string(), n)), || {
            format!("{var} set at {got:?}")
        })?;
    }
    Ok("direct (1,0), one (1,1), two (1,2), unit (2,0)".into())
}

fn c7_confluence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut runs = 0;
    for name in FIXTURES {
        let inputs = iteration_inputs(load(name), 12);
        ensure(!inputs.is_empty(), || format!("{name}: no iterations"))?;
        for (k, base) in inputs.iter().enumerate() {
            let mut reference = base.clone();
            let d0 = compute_fixpoint(&mut reference).map_err(|e| e.to_string())?;
            let want = enabled_snapshot(&reference);
            for _ in 0..100 {
                let mut top = base.clone();
                let d = compute_fixpoint_with(&mut top, &mut |u| rng.gen_range(0..u.len()))
                    .map_err(|e| e.to_string())?;
                ensure(
                    enabled_snapshot(&top) == want && d.unknown_ports == d0.unknown_ports,
                    || format!("{name}: iteration {k} depends on rule order"),
                )?;
                ensure(d.iterations <= top.port_count(), || {
                    format!(
                        "{name}: {} applications > {} ports",
                        d.iterations,
                        top.port_count()
                    )
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} randomized fixed points agree"))
}

fn c8_causality() -> Outcome {
    let want: BTreeSet<PortAddr> = [
        ("Loop.A", Side::Input, "x"),
        ("Loop.A", Side::Output, "z"),
        ("Loop.B", Side::Input, "w"),
        ("Loop.B", Side::Output, "y"),
    ]
    .into_iter()
    .map(|(a, s, p)| PortAddr::new(ActorPath::parse(a).unwrap(), s, p))
    .collect();
    let mut s = load("causality_cycle");
    match step(&mut s, &ExecOptions::default()) {
        Err(ExecError::CausalityCycle { ports, .. }) => {
            let got: BTreeSet<_> = ports.into_iter().collect();
            ensure(got == want, || format!("ports {got:?}"))?;
        }
        other => return Err(format!("expected a causality cycle, got {other:?}")),
    }
    let path = model_path("causality_cycle");
    let out = cli(&["simulate", &path, "--until", "3"]);
    ensure(out.code == 3, || format!("exit {}", out.code))?;
    for p in &want {
        ensure(out.stderr.contains(&p.to_string()), || {
            format!("stderr lacks {p}: {}", out.stderr)
        })?;
    }
    ensure(
        out.stderr.matches(" (in)").count() + out.stderr.matches(" (out)").count() == 4,
        || format!("unexpected port list: {}", out.stderr),
    )?;
    let out = cli(&["simulate", &path, "--until", "3", "--bottom-as-absent"]);
    ensure(out.code == 0, || {
        format!("--bottom-as-absent exit {}: {}", out.code, out.stderr)
    })?;
    Ok("exit 3 with the 4 cyclic ports; completes with --bottom-as-absent".into())
}

/// FSM locations and variables inside `root`.
fn frozen_state(s: &SystemState, root: &ActorPath) -> Snapshot {
    let mut snap = Snapshot::of(s);
    let inside = |p: &ActorPath| p.segments().starts_with(root.segments());
    snap.locations.retain(|p, _| inside(p));
    snap.variables.retain(|(p, _), _| inside(p));
    snap.queue.clear();
    snap
}

fn c9_freeze() -> Outcome {
    let tl = ActorPath::parse("HierarchicalTrafficLight.TrafficLight").unwrap();
    let mut s = load("hierarchical_traffic_light");
    let (mut checked, mut switches) = (0, 0);
    let mut last_enabled = BTreeMap::new();
    for _ in 0..400 {
        let before = s.clone();
        let info = step(&mut s, &ExecOptions::default()).map_err(|e| e.to_string())?;
        for r in ["normal", "error"] {
            let path = tl.child(r);
            let was = before.top.effectively_enabled(&path).unwrap();
            if last_enabled.insert(r, was) == Some(!was) {
                switches += 1;
            }
            if was || info.kind != StepKind::Iteration {
                continue;
            }
            ensure(
                frozen_state(&before, &path) == frozen_state(&s, &path),
                || format!("{path} changed at t={} while disabled", s.elapsed),
            )?;
            checked += 1;
        }
    }
    ensure(switches >= 4, || format!("only {switches} mode switches"))?;
    Ok(format!(
        "{checked} frozen iterations across {switches} switches"
    ))
}

fn props_for(name: &str) -> [Proposition; 3] {
    let p = |s: &str| parse_proposition(s).unwrap();
    match name {
        "flat_traffic_light" => [
            p("FlatTrafficLight | Cgrn = 1"),
            p("FlatTrafficLight | Pgrn = 1"),
            p("FlatTrafficLight.CarLight @ Cyel"),
        ],
        "hierarchical_traffic_light" | "mutant_traffic_light" => [
            p("HierarchicalTrafficLight.TrafficLight @ error"),
            p("HierarchicalTrafficLight | Pgrn = 1"),
            p("HierarchicalTrafficLight.TrafficLight.normal.CarLight @ Cgrn"),
        ],
        "zero_delay_chain" => [
            p("Chain | direct = 7"),
            p("Chain | two = 0"),
            p("Chain | unit = 7"),
        ],
        _ => [p("Loop.A @ s"), p("Loop.B @ s"), p("Loop.A @ s")],
    }
}

fn ltl_suite(p: &Formula, q: &Formula, r: &Formula) -> Vec<Formula> {
    use Formula as F;
    let (p, q, r) = (p.clone(), q.clone(), r.clone());
    vec![
        F::True,
        F::False,
        p.clone(),
        F::not(p.clone()),
        F::and(p.clone(), q.clone()),
        F::or(p.clone(), q.clone()),
        F::implies(p.clone(), q.clone()),
        F::always(p.clone()),
        F::eventually(p.clone()),
        F::until(p.clone(), q.clone()),
        F::always(F::eventually(p.clone())),
        F::eventually(F::always(p.clone())),
        F::always(F::implies(p.clone(), F::eventually(q.clone()))),
        F::always(F::not(F::and(p.clone(), q.clone()))),
        F::until(F::until(p.clone(), q.clone()), r.clone()),
        F::not(F::until(p.clone(), q.clone())),
        F::always(F::implies(p.clone(), F::until(q.clone(), r.clone()))),
        F::eventually(F::and(p.clone(), F::always(q.clone()))),
        F::and(
            F::always(F::eventually(p.clone())),
            F::always(F::eventually(q.clone())),
        ),
        F::until(F::True, r.clone()),
        F::always(F::True),
        F::eventually(F::False),
        F::implies(
            F::not(F::always(F::eventually(F::or(p.clone(), q.clone())))),
            r.clone(),
        ),
        F::until(F::or(p.clone(), F::not(p.clone())), q.clone()),
        F::always(F::or(F::eventually(F::not(r.clone())), F::until(p, q))),
    ]
}

fn c10_ltl_oracle() -> Outcome {
    let mut total = 0;
    let mut failing = 0;
    for name in FIXTURES {
        let exec = ExecOptions {
            bottom_as_absent: name == "causality_cycle",
            ..Default::default()
        };
        let opts = GraphOptions {
            exec: exec.clone(),
            ..Default::default()
        };
        let g = build_state_graph(load(name), &opts).map_err(|e| e.to_string())?;
        let [p, q, r] = props_for(name).map(Formula::Prop);
        let mut table = PropTable::default();
        for f in [&p, &q, &r] {
            if let Formula::Prop(x) = f {
                table.index(x);
            }
        }
        let labels = label_graph(&g, &table).map_err(|e| e.to_string())?;
        let (word, loop_start) = graph_word(&g, &labels);
        for f in ltl_suite(&p, &q, &r) {
            let want = eval_lasso(&f, &table, &word, loop_start);
            let got = check_graph(g.clone(), &f, &exec).map_err(|e| e.to_string())?;
            ensure(got.verdict.holds() == want, || {
                format!(
                    "{name}: {f}: checker {} evaluator {want}",
                    got.verdict.holds()
                )
            })?;
            total += 1;
            failing += usize::from(!want);
        }
    }
    Ok(format!("{total} verdicts agree ({failing} failing)"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("safety holds on the hierarchical model", c1_safety),
        ("scoped normal-mode safety holds", c2_scoped),
        ("liveness holds", c3_liveness),
        (
            "mutant fails safety with a replayable counterexample",
            c4_mutant,
        ),
        ("flat trace matches the hand oracle", c5_flat_oracle),
        ("zero delays advance the microstep", c6_superdense),
        ("fixed point is confluent and bounded", c7_confluence),
        ("causality cycle reported with its ports", c8_causality),
        ("disabled refinements stay frozen", c9_freeze),
        ("nested DFS agrees with the lasso evaluator", c10_ltl_oracle),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t.elapsed();
        let r = match r {
            Ok(_) if dt >= Duration::from_secs(10) => Err(format!("took {dt:.2?}")),
            r => r,
        };
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{dt:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{dt:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
