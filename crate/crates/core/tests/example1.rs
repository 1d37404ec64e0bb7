use elabmech::io::EXAMPLE1_JSON;
use elabmech::{parse_scenario, AgentId, MarginalMode, Money, Scenario, Scheme};

fn m(v: i64) -> Money {
    Money::from_integer(v)
}

fn labels(s: &Scenario, p: &[elabmech::PayoffType]) -> Vec<String> {
    p.iter().map(|&t| s.types.label(t).to_string()).collect()
}

#[test]
fn truthful_run_reproduces_the_published_numbers() {
    let s: Scenario = elabmech::example1();
    let tables = s.tables(10_000).unwrap();
    let (trace, r) = s.run_truthful(&s.draws()[0], &tables).unwrap();
    let lat = s.lattice();

    assert_eq!(trace.len(), 3);
    assert_eq!(lat.label(trace.announcements[0]), "{a,b,c}");
    assert_eq!(labels(&s, &trace.stages[0]), ["t1", "t2", "t3[]"]);
    assert_eq!(
        labels(&s, trace.final_profile().unwrap()),
        ["t1'", "t2'", "t3"]
    );

    assert_eq!(s.outcomes.label(r.outcome), "agent1_produces");
    assert_eq!(r.revealer, None);
    assert!(r.breakdown.iter().all(|b| b.bonus == m(0)));
    assert_eq!(r.transfers, vec![m(0), m(0), m(-80)]);
    assert_eq!(r.surplus(), m(80));
}

#[test]
fn welfare_of_the_final_profile_is_twenty() {
    let s: Scenario = elabmech::example1();
    let econ = s.economy();
    let tables = s.tables(10_000).unwrap();
    let (trace, r) = s.run_truthful(&s.draws()[0], &tables).unwrap();
    assert_eq!(
        econ.welfare(r.outcome, trace.final_profile().unwrap())
            .unwrap(),
        m(20)
    );
}

#[test]
fn literal_marginal_mode_charges_agent_two_more() {
    let s: Scenario = elabmech::example1();
    let s = s.with_scheme(Scheme::clarke(MarginalMode::Literal));
    let tables = s.tables(10_000).unwrap();
    let (trace, r) = s.run_truthful(&s.draws()[0], &tables).unwrap();
    let x = s
        .economy()
        .marginal_efficient_outcome(
            trace.final_profile().unwrap(),
            AgentId(1),
            MarginalMode::Literal,
        )
        .unwrap();
    assert_eq!(s.outcomes.label(x), "agent2_produces");
    assert_eq!(r.breakdown[1].y, m(-100));
    assert_eq!(r.transfers, vec![m(0), m(-80), m(-80)]);
}

#[test]
fn marking_both_producers_changes_agent_one_transfer() {
    let mut v: serde_json::Value = serde_json::from_str(EXAMPLE1_JSON).unwrap();
    v["outcomes"]["requires_agents"]["agent1_produces"] = serde_json::json!(["1"]);
    let s: Scenario = parse_scenario(&v.to_string()).unwrap();
    let tables = s.tables(10_000).unwrap();
    let (_, r) = s.run_truthful(&s.draws()[0], &tables).unwrap();
    assert_eq!(r.transfers, vec![m(86), m(0), m(-80)]);
}

#[test]
fn no_agent_reveals_first_on_the_example_draw() {
    let s: Scenario = elabmech::example1();
    let tables = s.tables(10_000).unwrap();
    let (trace, _) = s.run_truthful(&s.draws()[0], &tables).unwrap();
    assert_eq!(elabmech::first_full_revealer(&s.types, &trace), None);
}
