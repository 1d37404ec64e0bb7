//! Brute-force checkers for the mechanism's defining properties at desk scale.
//!
//! Every checker returns a [`VerificationReport`] (serializable, with counts of
//! what was enumerated) and, on failure, a typed witness that can be fed back
//! through the engine and the transfer tables.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::{default_stage_cap, run, run_truthful, stage_bound, Strategy, Trace, Truthful};
use crate::io::{draw_to_file, trace_records};
use crate::lattice::{AwarenessLattice, Level};
use crate::outcomes::OutcomeId;
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::transfers::{MechanismTables, TransferError, TransferScheme, DEFAULT_PROFILE_CAP};
use crate::types::{AgentId, NatureDraw, PayoffType, TypeSystem};

pub mod dominance;
pub mod generate;
pub mod oracle;
mod play;

pub use dominance::{DominanceOptions, DominanceStats, DominanceWitness, OpponentModel};
pub use generate::{generate_instances, Bounds};
pub use oracle::oracle_m;

use play::{settle, Admissible, Play};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Nothing failed, but a cap cut the enumeration short.
    VerifiedUpToCap,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::VerifiedUpToCap => "verified-up-to-cap",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub property: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub status: Status,
    pub stats: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

impl VerificationReport {
    fn new(property: &str, scenario: Option<&str>) -> Self {
        Self {
            property: property.into(),
            scenario: scenario.map(str::to_string),
            status: Status::Pass,
            stats: BTreeMap::new(),
            notes: Vec::new(),
            counterexample: None,
        }
    }

    fn stat(&mut self, key: &str, v: usize) {
        self.stats.insert(key.into(), v);
    }

    fn fail(&mut self, counterexample: Value) {
        self.status = Status::Fail;
        self.counterexample = Some(counterexample);
    }

    fn capped(&mut self, note: String) {
        if self.status == Status::Pass {
            self.status = Status::VerifiedUpToCap;
        }
        self.notes.push(note);
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// A report plus the typed witness behind a failure.
#[derive(Debug, Clone)]
pub struct Check<W> {
    pub report: VerificationReport,
    pub witness: Option<W>,
}

fn error_check<W>(property: &str, scenario: Option<&str>, e: impl std::fmt::Display) -> Check<W> {
    let mut report = VerificationReport::new(property, scenario);
    report.status = Status::Fail;
    report.notes.push(e.to_string());
    Check {
        report,
        witness: None,
    }
}

fn profile_json(ts: &TypeSystem, p: &[PayoffType]) -> Value {
    Value::Object(
        p.iter()
            .map(|&t| {
                (
                    ts.agent_name(t.agent).to_string(),
                    Value::String(ts.label(t).to_string()),
                )
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfficiencyWitness {
    pub level: Level,
    pub profile: Vec<PayoffType>,
    pub chosen: OutcomeId,
    pub better: OutcomeId,
}

/// `f_0` maximises welfare at every level and profile.
pub fn check_efficiency<S: Scalar>(s: &Scenario<S>, cap: usize) -> Check<EfficiencyWitness> {
    let econ = s.economy();
    check_efficiency_with(s, cap, |_, p| {
        econ.efficient_outcome(p).expect("validated scenario")
    })
}

/// Same check for an arbitrary outcome map, e.g. a deliberately broken one.
pub fn check_efficiency_with<S: Scalar>(
    s: &Scenario<S>,
    cap: usize,
    f0: impl Fn(Level, &[PayoffType]) -> OutcomeId,
) -> Check<EfficiencyWitness> {
    let name = s.name.as_deref();
    let ts = &s.types;
    let econ = s.economy();
    let mut report = VerificationReport::new("efficiency", name);
    let needed = crate::transfers::table_size(ts);
    if needed > cap {
        return error_check(
            "efficiency",
            name,
            TransferError::CombinatorialCap { needed, cap },
        );
    }
    let mut profiles = 0;
    for level in ts.lattice().levels() {
        for p in ts.profiles_at(level) {
            profiles += 1;
            let chosen = f0(level, &p);
            let w = econ.welfare(chosen, &p).expect("validated scenario");
            for &x in s.outcomes.at(level) {
                let wx = econ.welfare(x, &p).expect("validated scenario");
                if wx > w {
                    report.stat("profiles", profiles);
                    report.fail(json!({
                        "level": ts.lattice().label(level),
                        "profile": profile_json(ts, &p),
                        "chosen": s.outcomes.label(chosen),
                        "chosen_welfare": w.to_exact_string(),
                        "better": s.outcomes.label(x),
                        "better_welfare": wx.to_exact_string(),
                    }));
                    return Check {
                        report,
                        witness: Some(EfficiencyWitness {
                            level,
                            profile: p,
                            chosen,
                            better: x,
                        }),
                    };
                }
            }
        }
    }
    report.stat("profiles", profiles);
    Check {
        report,
        witness: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunWitness {
    pub draw: NatureDraw,
    pub trace: Trace,
}

fn draw_trace_json<S: Scalar>(s: &Scenario<S>, d: &NatureDraw, t: &Trace) -> Value {
    json!({
        "draw": serde_json::to_value(draw_to_file(&s.types, d)).expect("serializable"),
        "trace": trace_records::<S>(s, t, None),
    })
}

/// The truthful run implements `f_0` of the true types projected to the pooled
/// initial awareness.
pub fn check_pooled_implementation<S: Scalar>(
    s: &Scenario<S>,
    draws: &[NatureDraw],
) -> Check<RunWitness> {
    let name = s.name.as_deref();
    let ts = &s.types;
    let econ = s.economy();
    let mut report = VerificationReport::new("pooled-implementation", name);
    for (k, d) in draws.iter().enumerate() {
        let trace = match run_truthful(ts, d) {
            Ok(t) => t,
            Err(e) => return error_check("pooled-implementation", name, e),
        };
        let pooled = ts.lattice().join_all(d.awareness.iter().copied());
        let projected: Vec<PayoffType> = d
            .true_types
            .iter()
            .map(|&t| ts.project(t, pooled).expect("validated scenario"))
            .collect();
        let expected = econ
            .efficient_outcome(&projected)
            .expect("validated scenario");
        let got = econ
            .efficient_outcome(trace.final_profile().expect("nonempty"))
            .expect("final profile sits at one level");
        if got != expected || trace.final_level() != Some(pooled) {
            report.stat("draws", k + 1);
            let mut cx = draw_trace_json(s, d, &trace);
            cx["expected_outcome"] = json!(s.outcomes.label(expected));
            cx["implemented_outcome"] = json!(s.outcomes.label(got));
            report.fail(cx);
            return Check {
                report,
                witness: Some(RunWitness {
                    draw: d.clone(),
                    trace,
                }),
            };
        }
    }
    report.stat("draws", draws.len());
    Check {
        report,
        witness: None,
    }
}

/// Every truthful run stops within three stages.
pub fn check_stage_bound<S: Scalar>(s: &Scenario<S>, draws: &[NatureDraw]) -> Check<RunWitness> {
    let name = s.name.as_deref();
    let mut report = VerificationReport::new("stages", name);
    let mut longest = 0;
    for d in draws {
        let trace = match run_truthful(&s.types, d) {
            Ok(t) => t,
            Err(e) => return error_check("stages", name, e),
        };
        longest = longest.max(trace.len());
        if trace.len() > 3 {
            report.stat("max_stages", longest);
            report.fail(draw_trace_json(s, d, &trace));
            return Check {
                report,
                witness: Some(RunWitness {
                    draw: d.clone(),
                    trace,
                }),
            };
        }
    }
    report.stat("draws", draws.len());
    report.stat("max_stages", longest);
    report.stat("general_bound", stage_bound(&s.types));
    Check {
        report,
        witness: None,
    }
}

/// Conditional dominance of truth-telling against every opponent behaviour.
pub fn check_conditional_dominance<S: Scalar>(
    s: &Scenario<S>,
    opts: DominanceOptions,
    table_cap: usize,
) -> Check<DominanceWitness<S>> {
    let name = s.name.as_deref();
    let tables = match s.tables(table_cap) {
        Ok(t) => t,
        Err(e) => return error_check("dominance", name, e),
    };
    let out = dominance::search(s.economy(), &tables, opts);
    let mut report = VerificationReport::new("dominance", name);
    let st = &out.stats;
    report.stat("work_items", st.work_items);
    report.stat("capped_items", st.capped_items);
    report.stat("information_sets", st.information_sets);
    report.stat("nodes", st.nodes);
    report.stat("terminals", st.terminals);
    report.stat("max_stages", st.max_stages);
    report.stat("stage_bound", stage_bound(&s.types));
    report.stat("bonus_sum_violations", st.bonus_sum_violations);
    if let Some(w) = &out.witness {
        report.fail(dominance_json(s, w));
    } else if st.bonus_sum_violations > 0 {
        report.status = Status::Fail;
        report
            .notes
            .push("awareness adjustments did not sum to zero".into());
    } else if st.max_stages > stage_bound(&s.types) {
        report.status = Status::Fail;
        report.notes.push("a run exceeded the stage bound".into());
    } else if out.capped() {
        report.capped(format!(
            "opponent-strategy enumeration truncated at {} nodes in {} of {} (agent, world, type, awareness) items",
            opts.cap, st.capped_items, st.work_items
        ));
    }
    Check {
        report,
        witness: out.witness,
    }
}

pub fn dominance_json<S: Scalar>(s: &Scenario<S>, w: &DominanceWitness<S>) -> Value {
    let ts = &s.types;
    json!({
        "agent": ts.agent_name(w.agent),
        "world_level": ts.lattice().label(ts.level(w.draw.true_types[w.agent.index()])),
        "true_type": ts.label(w.draw.true_types[w.agent.index()]),
        "awareness": draw_to_file(ts, &w.draw).awareness,
        "fork_stage": w.fork_stage,
        "truthful_trace": trace_records::<S>(s, &w.truthful_trace, None),
        "deviation_trace": trace_records::<S>(s, &w.deviation_trace, None),
        "truthful_utility": w.truthful_utility.to_exact_string(),
        "deviation_utility": w.deviation_utility.to_exact_string(),
        "violated": format!(
            "{} >= {}",
            w.truthful_utility.to_exact_string(),
            w.deviation_utility.to_exact_string()
        ),
    })
}

pub use dominance::replay as replay_dominance;

#[derive(Debug, Clone)]
pub struct DeficitWitness<S> {
    pub draw: NatureDraw,
    pub trace: Trace,
    pub transfer_sum: S,
}

#[derive(Debug, Clone, Copy)]
pub struct NoDeficitOptions {
    /// Node budget per (draw, deviating agent).
    pub cap: usize,
    pub deviations: bool,
}

impl Default for NoDeficitOptions {
    fn default() -> Self {
        Self {
            cap: 200_000,
            deviations: true,
        }
    }
}

/// `Σ_i f_i ≤ 0` on truthful traces of `draws` and, optionally, on every trace
/// where one agent deviates arbitrarily while the others stay truthful.
pub fn check_no_deficit<S: Scalar>(
    s: &Scenario<S>,
    scheme: &TransferScheme<S>,
    draws: &[NatureDraw],
    opts: NoDeficitOptions,
    table_cap: usize,
) -> Check<DeficitWitness<S>> {
    let name = s.name.as_deref();
    let ts = &s.types;
    let econ = s.economy();
    let tables = match MechanismTables::build(econ, scheme, table_cap) {
        Ok(t) => t,
        Err(e) => return error_check("no-deficit", name, e),
    };
    let adm = Admissible::new(ts);
    let n = ts.n_agents();
    let mut report = VerificationReport::new("no-deficit", name);
    let mut truthful = 0;
    let mut deviation_traces = 0;
    let mut capped = 0;
    let mut bonus_violations = 0;
    let mut max_stages = 0;

    let total = |play: &Play| -> (S, S) {
        let (_, f, bonus) = settle(econ, &tables, play);
        (f.into_iter().fold(S::zero(), |acc, x| acc + x), bonus)
    };

    for d in draws {
        let trace = match run_truthful(ts, d) {
            Ok(t) => t,
            Err(e) => return error_check("no-deficit", name, e),
        };
        truthful += 1;
        let r = match tables.transfers(ts, &trace) {
            Ok(r) => r,
            Err(e) => return error_check("no-deficit", name, e),
        };
        let sum = -r.surplus();
        let bonus: S = r
            .breakdown
            .iter()
            .fold(S::zero(), |acc, b| acc + b.bonus.clone());
        if bonus != S::zero() {
            bonus_violations += 1;
        }
        if sum > S::zero() {
            return deficit(report, s, d, trace, sum);
        }
        if !opts.deviations {
            continue;
        }
        for dev in 0..n {
            let mut nodes = 0usize;
            let mut stack = vec![Play::new()];
            while let Some(play) = stack.pop() {
                if play.stopped {
                    deviation_traces += 1;
                    max_stages = max_stages.max(play.stages());
                    let (sum, bonus) = total(&play);
                    if bonus != S::zero() {
                        bonus_violations += 1;
                    }
                    if sum > S::zero() {
                        return deficit(report, s, d, play.to_trace(n), sum);
                    }
                    continue;
                }
                nodes += 1;
                if nodes > opts.cap {
                    capped += 1;
                    break;
                }
                let profile: Vec<PayoffType> = (0..n)
                    .map(|j| {
                        let aware = match play.last_ann() {
                            Some(a) => ts.lattice().join(d.awareness[j], a),
                            None => d.awareness[j],
                        };
                        ts.project(d.true_types[j], aware)
                            .expect("validated scenario")
                    })
                    .collect();
                let aware_dev = match play.last_ann() {
                    Some(a) => ts.lattice().join(d.awareness[dev], a),
                    None => d.awareness[dev],
                };
                for &r in adm.options(&play, n, dev, aware_dev) {
                    let mut p = profile.clone();
                    p[dev] = r;
                    stack.push(play.child(ts, &p));
                }
            }
        }
    }
    report.stat("truthful_traces", truthful);
    report.stat("deviation_traces", deviation_traces);
    report.stat("capped_deviation_trees", capped);
    report.stat("bonus_sum_violations", bonus_violations);
    report.stat("max_stages", max_stages);
    report.stat("stage_bound", stage_bound(ts));
    if bonus_violations > 0 {
        report.status = Status::Fail;
        report
            .notes
            .push("awareness adjustments did not sum to zero".into());
    } else if max_stages > stage_bound(ts) {
        report.status = Status::Fail;
        report.notes.push("a run exceeded the stage bound".into());
    } else if capped > 0 {
        report.capped(format!(
            "unilateral-deviation enumeration truncated at {} nodes in {capped} trees",
            opts.cap
        ));
    }
    Check {
        report,
        witness: None,
    }
}

fn deficit<S: Scalar>(
    mut report: VerificationReport,
    s: &Scenario<S>,
    d: &NatureDraw,
    trace: Trace,
    sum: S,
) -> Check<DeficitWitness<S>> {
    let mut cx = draw_trace_json(s, d, &trace);
    cx["transfer_sum"] = json!(sum.to_exact_string());
    cx["violated"] = json!(format!("{} <= 0", sum.to_exact_string()));
    report.fail(cx);
    Check {
        report,
        witness: Some(DeficitWitness {
            draw: d.clone(),
            trace,
            transfer_sum: sum,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleWitness<S> {
    pub agent: AgentId,
    pub level: Level,
    pub table: S,
    pub oracle: S,
}

/// The bonus tables agree with the chain-enumeration oracle on every level.
pub fn check_m_oracle<S: Scalar>(s: &Scenario<S>, cap: usize) -> Check<OracleWitness<S>> {
    let name = s.name.as_deref();
    let econ = s.economy();
    let scheme = TransferScheme::new(s.scheme.groves.clone());
    let tables = match MechanismTables::build(econ, &scheme, cap) {
        Ok(t) => t,
        Err(e) => return error_check("m-oracle", name, e),
    };
    let mut report = VerificationReport::new("m-oracle", name);
    let ts = &s.types;
    let mut entries = 0;
    for a in ts.agent_ids() {
        for l in ts.lattice().levels() {
            let oracle = match oracle_m(econ, a, &scheme.groves, l, cap.saturating_mul(16)) {
                Ok(v) => v,
                Err(e) => return error_check("m-oracle", name, e),
            };
            let table = tables.bonus(a).get(l).clone();
            entries += 1;
            if table != oracle {
                report.stat("entries", entries);
                report.fail(json!({
                    "agent": ts.agent_name(a),
                    "level": ts.lattice().label(l),
                    "table": table.to_exact_string(),
                    "oracle": oracle.to_exact_string(),
                }));
                return Check {
                    report,
                    witness: Some(OracleWitness {
                        agent: a,
                        level: l,
                        table,
                        oracle,
                    }),
                };
            }
        }
    }
    report.stat("entries", entries);
    Check {
        report,
        witness: None,
    }
}

/// Exhaustive lattice laws on the precomputed tables.
pub fn check_lattice_laws(lat: &AwarenessLattice) -> Check<String> {
    let mut report = VerificationReport::new("lattice-laws", None);
    let ls: Vec<Level> = lat.levels().collect();
    let mut checked = 0;
    let bad = |msg: String| -> Check<String> {
        let mut r = VerificationReport::new("lattice-laws", None);
        r.fail(json!({ "law": msg.clone() }));
        Check {
            report: r,
            witness: Some(msg),
        }
    };
    for &a in &ls {
        if !lat.leq(a, a) {
            return bad(format!("reflexivity fails at {}", lat.label(a)));
        }
        if !lat.leq(lat.bottom(), a) || !lat.leq(a, lat.top()) {
            return bad(format!("{} is outside [bottom, top]", lat.label(a)));
        }
        for &b in &ls {
            checked += 1;
            let (j, m) = (lat.join(a, b), lat.meet(a, b));
            if a != b && lat.leq(a, b) && lat.leq(b, a) {
                return bad(format!(
                    "antisymmetry fails at {}, {}",
                    lat.label(a),
                    lat.label(b)
                ));
            }
            if j != lat.join(b, a) || m != lat.meet(b, a) {
                return bad(format!(
                    "commutativity fails at {}, {}",
                    lat.label(a),
                    lat.label(b)
                ));
            }
            if lat.join(a, m) != a || lat.meet(a, j) != a {
                return bad(format!(
                    "absorption fails at {}, {}",
                    lat.label(a),
                    lat.label(b)
                ));
            }
            if !lat.leq(a, j) || !lat.leq(b, j) || !lat.leq(m, a) || !lat.leq(m, b) {
                return bad(format!("bounds fail at {}, {}", lat.label(a), lat.label(b)));
            }
            if (lat.leq(a, b)) != (j == b) {
                return bad(format!(
                    "order/join mismatch at {}, {}",
                    lat.label(a),
                    lat.label(b)
                ));
            }
            for &c in &ls {
                if lat.leq(a, b) && lat.leq(b, c) && !lat.leq(a, c) {
                    return bad(format!(
                        "transitivity fails at {}, {}, {}",
                        lat.label(a),
                        lat.label(b),
                        lat.label(c)
                    ));
                }
                if lat.join(lat.join(a, b), c) != lat.join(a, lat.join(b, c))
                    || lat.meet(lat.meet(a, b), c) != lat.meet(a, lat.meet(b, c))
                {
                    return bad(format!(
                        "associativity fails at {}, {}, {}",
                        lat.label(a),
                        lat.label(b),
                        lat.label(c)
                    ));
                }
                if lat.leq(a, c) && lat.leq(b, c) && !lat.leq(j, c) {
                    return bad(format!(
                        "join not least at {}, {}",
                        lat.label(a),
                        lat.label(b)
                    ));
                }
                if lat.leq(c, a) && lat.leq(c, b) && !lat.leq(c, m) {
                    return bad(format!(
                        "meet not greatest at {}, {}",
                        lat.label(a),
                        lat.label(b)
                    ));
                }
            }
        }
    }
    report.stat("pairs", checked);
    Check {
        report,
        witness: None,
    }
}

/// Surjectivity, composition and identity of the projection family.
pub fn check_projection_laws(ts: &TypeSystem) -> Check<String> {
    let mut report = VerificationReport::new("projection-laws", None);
    let v = ts.validate();
    let lat = ts.lattice();
    let mut maps = 0;
    for a in ts.agent_ids() {
        for t in ts.all_types(a) {
            maps += lat.down_set(ts.level(t)).len();
        }
    }
    report.stat("projections", maps);
    if let Some(first) = v.violations.first() {
        let msg = ts.describe_violation(first);
        report.fail(json!({ "law": msg.clone(), "violations": v.violations.len() }));
        return Check {
            report,
            witness: Some(msg),
        };
    }
    Check {
        report,
        witness: None,
    }
}

/// Runs every strategy profile in `strategies` for `draw` and returns the trace;
/// convenience for replaying witnesses from tests and the CLI.
pub fn replay_run<S: Scalar>(
    s: &Scenario<S>,
    draw: &NatureDraw,
    strategies: &[&dyn Strategy],
) -> Result<Trace, String> {
    run(
        &s.types,
        draw,
        strategies,
        Some(default_stage_cap(&s.types)),
    )
    .map_err(|e| e.to_string())
}

/// The truthful strategy profile as trait objects.
pub fn truthful_profile(n: usize) -> Vec<&'static dyn Strategy> {
    static T: Truthful = Truthful;
    vec![&T; n]
}

/// Default caps, overridable through `ELABMECH_CAP`.
pub fn default_table_cap() -> usize {
    crate::transfers::cap_from_env(DEFAULT_PROFILE_CAP)
}
