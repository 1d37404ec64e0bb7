use std::collections::HashSet;

use elabmech::verify::{generate_instances, Bounds};
use elabmech::{
    enumerate_information_sets, run, run_truthful, stage_bound, AgentId, ElaborationState,
    InformationSet, NatureDraw, OwnPlay, Scenario, Strategy, Truthful, TypeSystem,
};

// Every information set of `agent` on paths where it tries every one of its
// types at every stage and keeps whatever the engine accepts.
fn oracle_sets(ts: &TypeSystem, draw: &NatureDraw, agent: AgentId) -> HashSet<InformationSet> {
    fn walk(
        ts: &TypeSystem,
        state: ElaborationState<'_>,
        agent: AgentId,
        out: &mut HashSet<InformationSet>,
    ) {
        if state.is_stopped() {
            return;
        }
        out.insert(state.information_set(agent));
        for mine in ts.all_types(agent) {
            let profile: Vec<_> = ts
                .agent_ids()
                .map(|a| {
                    if a == agent {
                        mine
                    } else {
                        state.agent_state(a).perceived_type
                    }
                })
                .collect();
            let mut next = state.clone();
            if next.step(&profile).is_ok() {
                walk(ts, next, agent, out);
            }
        }
    }
    let mut out = HashSet::new();
    walk(
        ts,
        ElaborationState::new(ts, draw).unwrap(),
        agent,
        &mut out,
    );
    out
}

#[test]
fn information_sets_match_the_brute_force_oracle() {
    let s: Scenario = elabmech::example1();
    let d = &s.draws()[0];
    let truthful = Truthful;
    let strategies: Vec<&dyn Strategy> = vec![&truthful; 3];
    for agent in s.types.agent_ids() {
        let got =
            enumerate_information_sets(&s.types, d, &strategies, agent, OwnPlay::Any, 1_000_000)
                .unwrap();
        let set: HashSet<_> = got.iter().cloned().collect();
        assert_eq!(set.len(), got.len(), "duplicates for agent {agent:?}");
        assert_eq!(set, oracle_sets(&s.types, d, agent), "agent {agent:?}");
    }
}

#[test]
fn information_sets_match_on_generated_instances() {
    let b = Bounds::parse("count=8,types=2").unwrap();
    for s in generate_instances::<elabmech::Money>(5, &b) {
        let truthful = Truthful;
        let strategies: Vec<&dyn Strategy> = vec![&truthful; s.types.n_agents()];
        for d in s.draws().iter().take(6) {
            let agent = AgentId(0);
            let got = enumerate_information_sets(
                &s.types,
                d,
                &strategies,
                agent,
                OwnPlay::Any,
                1_000_000,
            )
            .unwrap();
            let set: HashSet<_> = got.into_iter().collect();
            assert_eq!(set, oracle_sets(&s.types, d, agent));
        }
    }
}

#[test]
fn truthful_runs_take_at_most_three_stages() {
    let mut scenarios = vec![elabmech::example1::<elabmech::Money>()];
    scenarios.extend(generate_instances(42, &Bounds::default()));
    for s in &scenarios {
        for d in s.draws() {
            let t = run_truthful(&s.types, &d).unwrap();
            assert!(t.len() <= 3, "{:?}: {} stages", s.name, t.len());
            t.check(&s.types).unwrap();
        }
    }
}

// Agents that climb one covering step per stage.
struct Creep;

impl Strategy for Creep {
    fn report(&self, ts: &TypeSystem, h: &InformationSet) -> elabmech::PayoffType {
        let lat = ts.lattice();
        let target = match (h.own_past_reports.last(), h.announcements_seen.last()) {
            (Some(&prev), Some(&ann)) => {
                let p = ts.level(prev);
                let j = lat.join(p, ann);
                if j != p {
                    j
                } else {
                    lat.covering_pairs()
                        .into_iter()
                        .find(|&(lo, hi)| lo == p && lat.leq(hi, h.own_awareness))
                        .map_or(p, |(_, hi)| hi)
                }
            }
            _ => lat.bottom(),
        };
        ts.project(h.own_perceived_type, target).unwrap()
    }
}

#[test]
fn slow_elaboration_respects_the_general_bound() {
    let scenarios = generate_instances::<elabmech::Money>(9, &Bounds::default());
    let mut longest = 0;
    for s in &scenarios {
        let creep = Creep;
        let strategies: Vec<&dyn Strategy> = vec![&creep; s.types.n_agents()];
        for d in s.draws() {
            let t = run(&s.types, &d, &strategies, None).unwrap();
            t.check(&s.types).unwrap();
            assert!(t.len() <= stage_bound(&s.types));
            longest = longest.max(t.len());
        }
    }
    assert!(longest > 3);
}

#[test]
fn announcements_never_fall() {
    let s: Scenario = elabmech::example1();
    for d in s.draws() {
        let t = run_truthful(&s.types, &d).unwrap();
        for w in t.announcements.windows(2) {
            assert!(s.lattice().leq(w[0], w[1]));
        }
    }
}
