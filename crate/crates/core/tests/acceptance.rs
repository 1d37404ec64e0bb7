//! One line per acceptance criterion: `criterion N: PASS|FAIL ...`.
//!
//! Pinned tolerances: money comparisons are exact rational equality (zero
//! tolerance); criterion 1 must finish in under 1 s, criterion 2 in at most
//! 600 s.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use elabmech::verify::{
    check_conditional_dominance, check_lattice_laws, check_m_oracle, check_no_deficit,
    check_pooled_implementation, check_projection_laws, check_stage_bound, default_table_cap,
    generate_instances, Bounds, DominanceOptions, NoDeficitOptions, Status, VerificationReport,
};
use elabmech::{first_full_revealer, GrovesFamily, MarginalMode, Money, Scenario, TransferScheme};

const SEED: u64 = 42;
const GOLDEN_LIMIT: Duration = Duration::from_secs(1);
const SWEEP_LIMIT: Duration = Duration::from_secs(600);

type Outcome = (bool, String);

fn instances() -> &'static Vec<Scenario> {
    static CELL: OnceLock<Vec<Scenario>> = OnceLock::new();
    CELL.get_or_init(|| generate_instances(SEED, &Bounds::default()))
}

fn suite() -> Vec<Scenario> {
    let mut v = vec![elabmech::example1::<Money>()];
    v.extend(instances().iter().cloned());
    v
}

struct Sweep {
    reports: Vec<(String, VerificationReport, bool)>,
    elapsed: Duration,
}

fn sweep() -> &'static Sweep {
    static CELL: OnceLock<Sweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let mut reports = Vec::new();
        for s in suite() {
            for (family, groves) in [
                ("zero", GrovesFamily::Zero),
                (
                    "clarke",
                    GrovesFamily::Clarke(MarginalMode::ExcludeParticipation),
                ),
            ] {
                let c = check_conditional_dominance(
                    &s.with_scheme(TransferScheme::new(groves)),
                    DominanceOptions::default(),
                    default_table_cap(),
                );
                let same_final = c.witness.as_ref().is_some_and(|w| {
                    w.truthful_trace.final_profile() == w.deviation_trace.final_profile()
                });
                reports.push((family.to_string(), c.report, same_final));
            }
        }
        Sweep {
            reports,
            elapsed: start.elapsed(),
        }
    })
}

fn deficits() -> &'static Vec<VerificationReport> {
    static CELL: OnceLock<Vec<VerificationReport>> = OnceLock::new();
    CELL.get_or_init(|| {
        let scheme = TransferScheme::clarke(MarginalMode::Literal);
        suite()
            .iter()
            .map(|s| {
                check_no_deficit(
                    s,
                    &scheme,
                    &s.draws(),
                    NoDeficitOptions::default(),
                    default_table_cap(),
                )
                .report
            })
            .collect()
    })
}

fn criterion_1_example1_golden() -> Outcome {
    let start = Instant::now();
    let s: Scenario = elabmech::example1();
    let tables = s.tables(default_table_cap()).unwrap();
    let (trace, r) = s.run_truthful(&s.draws()[0], &tables).unwrap();
    let elapsed = start.elapsed();
    let lat = s.lattice();
    let m = Money::from_integer;
    let anns: Vec<&str> = trace.announcements.iter().map(|&l| lat.label(l)).collect();
    let ok = anns.iter().all(|&a| a == "{a,b,c}")
        && trace.len() == 3
        && s.outcomes.label(r.outcome) == "agent1_produces"
        && r.transfers == vec![m(0), m(0), m(-80)]
        && r.surplus() == m(80)
        && r.breakdown.iter().all(|b| b.bonus == m(0))
        && first_full_revealer(&s.types, &trace).is_none()
        && elapsed < GOLDEN_LIMIT;
    let t: Vec<String> = r.transfers.iter().map(|x| x.to_string()).collect();
    (ok,
        format!(
            "announcements={anns:?} stages={} outcome={} transfers=({}) surplus={} revealer=none elapsed={:?}",
            trace.len(),
            s.outcomes.label(r.outcome),
            t.join(", "),
            r.surplus(),
            elapsed
        ),
    )
}

fn criterion_2_conditional_dominance() -> Outcome {
    let sw = sweep();
    let mut detail = Vec::new();
    let mut ok = sw.elapsed <= SWEEP_LIMIT;
    for family in ["zero", "clarke"] {
        let rs: Vec<_> = sw.reports.iter().filter(|(f, _, _)| f == family).collect();
        let fails = rs
            .iter()
            .filter(|(_, r, _)| r.status == Status::Fail)
            .count();
        let capped = rs
            .iter()
            .filter(|(_, r, _)| r.status == Status::VerifiedUpToCap)
            .count();
        let same_final = rs.iter().filter(|(_, _, s)| *s).count();
        let ex1 = rs[0].1.status.as_str();
        ok &= fails == 0 && capped == 0;
        detail.push(format!(
            "y={family}: {} instances, {fails} with counterexamples ({same_final} with identical final profiles), {capped} capped, example1={ex1}",
            rs.len()
        ));
    }
    (
        ok,
        format!("{}; elapsed={:?}", detail.join("; "), sw.elapsed),
    )
}

fn criterion_3_no_deficit() -> Outcome {
    let rs = deficits();
    let fails = rs.iter().filter(|r| !r.passed()).count();
    let truthful: usize = rs
        .iter()
        .map(|r| r.stats.get("truthful_traces").copied().unwrap_or(0))
        .sum();
    let deviations: usize = rs
        .iter()
        .map(|r| r.stats.get("deviation_traces").copied().unwrap_or(0))
        .sum();
    (fails == 0,
        format!("clarke literal: {} instances, {truthful} truthful and {deviations} deviation traces, {fails} failing", rs.len()),
    )
}

fn criterion_4_stage_counts() -> Outcome {
    let mut truthful_max = 0;
    let mut truthful_ok = true;
    let mut draws = 0;
    for s in suite() {
        let d = s.draws();
        draws += d.len();
        let c = check_stage_bound(&s, &d).report;
        truthful_ok &= c.passed();
        truthful_max = truthful_max.max(c.stats["max_stages"]);
    }
    let mut general_ok = true;
    let mut longest = 0;
    let mut all: Vec<&VerificationReport> = sweep().reports.iter().map(|(_, r, _)| r).collect();
    all.extend(deficits().iter());
    for r in all {
        let m = r.stats["max_stages"];
        longest = longest.max(m);
        general_ok &= m <= r.stats["stage_bound"];
    }
    (truthful_ok && general_ok,
        format!("truthful: {draws} draws, max {truthful_max} stages (limit 3); enumerated runs: max {longest} stages, all within 2 + |I|*height"),
    )
}

fn criterion_5_budget_neutrality() -> Outcome {
    let mut violations = 0;
    let mut all: Vec<&VerificationReport> = sweep().reports.iter().map(|(_, r, _)| r).collect();
    all.extend(deficits().iter());
    for r in &all {
        violations += r.stats["bonus_sum_violations"];
    }
    let mut truthful = 0;
    for s in suite() {
        let tables = s.tables(default_table_cap()).unwrap();
        for d in s.draws() {
            let (_, r) = s.run_truthful(&d, &tables).unwrap();
            truthful += 1;
            let a = r
                .breakdown
                .iter()
                .fold(Money::from_integer(0), |acc, b| acc + b.bonus);
            if a != Money::from_integer(0) {
                violations += 1;
            }
        }
    }
    (violations == 0,
        format!("sum of a_i checked on {truthful} truthful traces and every enumerated trace of {} searches; {violations} nonzero", all.len()),
    )
}

fn criterion_6_bonus_oracle() -> Outcome {
    let mut checked = 0;
    let mut entries = 0;
    let mut fails = 0;
    for s in suite() {
        if s.lattice().len() > 4 {
            continue;
        }
        for groves in [
            GrovesFamily::Zero,
            GrovesFamily::Clarke(MarginalMode::ExcludeParticipation),
        ] {
            let r = check_m_oracle(
                &s.with_scheme(TransferScheme::new(groves)),
                default_table_cap(),
            )
            .report;
            checked += 1;
            entries += r.stats.get("entries").copied().unwrap_or(0);
            fails += usize::from(!r.passed());
        }
    }
    (
        fails == 0 && checked > 0,
        format!("{checked} (instance, family) pairs, {entries} entries, {fails} mismatches"),
    )
}

fn criterion_7_projection_and_lattice_laws() -> Outcome {
    let mut fails = 0;
    let mut pairs = 0;
    let mut maps = 0;
    let mut n = 0;
    for s in suite().iter().chain(
        generate_instances::<Money>(SEED, &Bounds::parse("count=20,levels=1").unwrap()).iter(),
    ) {
        n += 1;
        let l = check_lattice_laws(s.lattice()).report;
        let p = check_projection_laws(&s.types).report;
        pairs += l.stats["pairs"];
        maps += p.stats["projections"];
        fails += usize::from(!l.passed()) + usize::from(!p.passed());
    }
    (
        fails == 0,
        format!("{n} scenarios, {pairs} level pairs, {maps} projection maps, {fails} failures"),
    )
}

fn criterion_8_pooled_implementation() -> Outcome {
    let mut draws = 0;
    let mut fails = 0;
    for s in suite() {
        let d = s.draws();
        draws += d.len();
        fails += usize::from(!check_pooled_implementation(&s, &d).report.passed());
    }
    (
        fails == 0,
        format!("{draws} draws, {fails} failing instances"),
    )
}

fn criterion_9_single_level_regression() -> Outcome {
    let flat = generate_instances::<Money>(SEED, &Bounds::parse("count=50,levels=1").unwrap());
    let mut fails = 0;
    let mut runs = 0;
    for s in &flat {
        for groves in [
            GrovesFamily::Zero,
            GrovesFamily::Clarke(MarginalMode::ExcludeParticipation),
        ] {
            let r = check_conditional_dominance(
                &s.with_scheme(TransferScheme::new(groves)),
                DominanceOptions::default(),
                default_table_cap(),
            )
            .report;
            runs += 1;
            fails += usize::from(!r.passed());
        }
    }
    (
        fails == 0,
        format!(
            "{} one-level instances, {runs} dominance checks (y=zero and clarke), {fails} failing",
            flat.len()
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1_example1_golden),
        (2, criterion_2_conditional_dominance),
        (3, criterion_3_no_deficit),
        (4, criterion_4_stage_counts),
        (5, criterion_5_budget_neutrality),
        (6, criterion_6_bonus_oracle),
        (7, criterion_7_projection_and_lattice_laws),
        (8, criterion_8_pooled_implementation),
        (9, criterion_9_single_level_regression),
    ];
    let mut failed = Vec::new();
    for (n, f) in criteria {
        let (ok, detail) = f();
        println!(
            "criterion {n}: {} {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
