use elabmech::verify::{
    check_conditional_dominance, check_efficiency, check_efficiency_with, check_lattice_laws,
    check_no_deficit, check_pooled_implementation, check_projection_laws, check_stage_bound,
    default_table_cap, generate_instances, replay_dominance, Bounds, DominanceOptions,
    NoDeficitOptions, OpponentModel, Status,
};
use elabmech::{serialize_scenario, GrovesFamily, MarginalMode, Money, Scenario, TransferScheme};

fn cap() -> usize {
    default_table_cap()
}

#[test]
fn a_broken_outcome_rule_is_caught() {
    let s: Scenario = elabmech::example1();
    assert!(check_efficiency(&s, cap()).report.passed());
    let none = s.outcomes.by_label("none").unwrap();
    let c = check_efficiency_with(&s, cap(), |_, _| none);
    assert_eq!(c.report.status, Status::Fail);
    let w = c.witness.unwrap();
    assert_eq!(s.outcomes.label(w.better), "agent1_produces");
}

#[test]
fn a_generous_groves_term_runs_a_deficit() {
    let s: Scenario = elabmech::example1();
    let draws = s.draws();
    let opts = NoDeficitOptions::default();
    let clarke = TransferScheme::clarke(MarginalMode::Literal);
    assert!(check_no_deficit(&s, &clarke, &draws, opts, cap())
        .report
        .passed());
    let generous = TransferScheme::new(GrovesFamily::Constant(Money::from_integer(1000)));
    let c = check_no_deficit(&s, &generous, &draws, opts, cap());
    assert_eq!(c.report.status, Status::Fail);
    assert!(c.witness.unwrap().transfer_sum > Money::from_integer(0));
}

#[test]
fn dominance_holds_on_one_level_instances() {
    for s in generate_instances::<Money>(7, &Bounds::parse("count=20,levels=1").unwrap()) {
        for scheme in [
            TransferScheme::new(GrovesFamily::Zero),
            TransferScheme::default(),
        ] {
            let c = check_conditional_dominance(
                &s.with_scheme(scheme),
                DominanceOptions::default(),
                cap(),
            );
            assert!(
                c.report.passed(),
                "{}",
                serde_json::to_string(&c.report).unwrap()
            );
        }
    }
}

#[test]
fn dropping_the_bonus_breaks_some_instance_the_bonus_protects() {
    let mut found = false;
    for s in generate_instances::<Money>(42, &Bounds::default()) {
        let with = check_conditional_dominance(&s, DominanceOptions::default(), cap());
        if !with.report.passed() {
            continue;
        }
        let stripped = s.with_scheme(s.scheme.clone().without_bonus());
        let without = check_conditional_dominance(&stripped, DominanceOptions::default(), cap());
        if without.report.status == Status::Fail {
            found = true;
            break;
        }
    }
    assert!(found);
}

#[test]
fn counterexamples_replay_through_the_engine() {
    let mut seen = 0;
    let mut scenarios = vec![elabmech::example1::<Money>()];
    scenarios.extend(generate_instances(42, &Bounds::parse("count=20").unwrap()));
    for s in &scenarios {
        let tables = s.tables(cap()).unwrap();
        let c = check_conditional_dominance(s, DominanceOptions::default(), cap());
        if let Some(w) = c.witness {
            seen += 1;
            let (truthful, deviation) = replay_dominance(s.economy(), &tables, &w).unwrap();
            assert!(deviation > truthful);
            assert_eq!(truthful, w.truthful_utility);
            assert_eq!(deviation, w.deviation_utility);
        }
    }
    assert!(seen > 0);
}

#[test]
fn opponent_models_agree_on_small_instances() {
    let b = Bounds::parse("count=12,agents=2,types=2,outcomes=3").unwrap();
    for s in generate_instances::<Money>(21, &b) {
        let fa = check_conditional_dominance(&s, DominanceOptions::default(), cap());
        let opts = DominanceOptions {
            opponents: OpponentModel::AllAwareness,
            ..Default::default()
        };
        let all = check_conditional_dominance(&s, opts, cap());
        assert_eq!(fa.report.status, all.report.status, "{:?}", s.name);
        assert!(all.report.stats["work_items"] >= fa.report.stats["work_items"]);
    }
}

#[test]
fn sequential_and_parallel_searches_agree() {
    for s in generate_instances::<Money>(42, &Bounds::parse("count=10").unwrap()) {
        let par = check_conditional_dominance(&s, DominanceOptions::default(), cap());
        let seq = check_conditional_dominance(
            &s,
            DominanceOptions {
                sequential: true,
                ..Default::default()
            },
            cap(),
        );
        assert_eq!(par.report.status, seq.report.status);
        assert_eq!(par.report.stats, seq.report.stats);
        assert_eq!(par.report.counterexample, seq.report.counterexample);
    }
}

#[test]
fn a_tiny_cap_downgrades_instead_of_passing() {
    let s = generate_instances::<Money>(7, &Bounds::parse("count=20,levels=1").unwrap())
        .into_iter()
        .max_by_key(|s| {
            s.types
                .agent_ids()
                .map(|a| s.types.n_types(a))
                .product::<usize>()
        })
        .unwrap();
    let c = check_conditional_dominance(
        &s,
        DominanceOptions {
            cap: 1,
            ..Default::default()
        },
        cap(),
    );
    assert_eq!(c.report.status, Status::VerifiedUpToCap);
    assert!(!c.report.notes.is_empty());
}

#[test]
fn generation_is_deterministic() {
    let b = Bounds::default();
    let a: Vec<String> = generate_instances::<Money>(42, &b)
        .iter()
        .map(serialize_scenario)
        .collect();
    let c: Vec<String> = generate_instances::<Money>(42, &b)
        .iter()
        .map(serialize_scenario)
        .collect();
    assert_eq!(a, c);
    let d: Vec<String> = generate_instances::<Money>(43, &b)
        .iter()
        .map(serialize_scenario)
        .collect();
    assert_ne!(a, d);
    for text in &a {
        let back: Scenario = elabmech::parse_scenario(text).unwrap();
        assert_eq!(&serialize_scenario(&back), text);
    }
}

#[test]
fn simple_checks_pass_on_generated_instances() {
    for s in generate_instances::<Money>(42, &Bounds::default()) {
        let draws = s.draws();
        assert!(check_lattice_laws(s.lattice()).report.passed());
        assert!(check_projection_laws(&s.types).report.passed());
        assert!(check_efficiency(&s, cap()).report.passed());
        assert!(check_pooled_implementation(&s, &draws).report.passed());
        assert!(check_stage_bound(&s, &draws).report.passed());
    }
}
