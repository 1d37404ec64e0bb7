use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use elabmech::io::{trace_jsonl, EXAMPLE1_JSON};
use elabmech::transfers::cap_from_env;
use elabmech::verify::{
    self, Bounds, DominanceOptions, NoDeficitOptions, OpponentModel, VerificationReport,
};
use elabmech::{parse_scenario, GrovesFamily, MarginalMode, Money, Scalar, Scenario, Scheme};

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "elabmech",
    version,
    about = "Dynamic elaboration mechanisms under asymmetric awareness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file.
    Validate { file: PathBuf },
    /// Run the truthful mechanism on one draw and print the trace as JSON lines.
    Run {
        file: PathBuf,
        /// Index into the scenario's draw list.
        #[arg(long, default_value_t = 0)]
        draw: usize,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Check properties on a scenario file or on generated instances.
    Verify {
        file: Option<PathBuf>,
        /// `SEED,BOUNDS`, e.g. `42,default` or `7,count=5,agents=2`.
        #[arg(long, conflicts_with = "file")]
        generate: Option<String>,
        #[arg(long, value_enum, default_value_t = Property::All)]
        property: Property,
        /// Node budget per search work item.
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, value_enum, default_value_t = Opponents::FullyAware)]
        opponents: Opponents,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Run the built-in Example 1 end to end and check the published numbers.
    Example1,
}

#[derive(clap::Args)]
struct SchemeArgs {
    /// Override the scenario's transfer scheme.
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[arg(long, value_enum)]
    marginal_mode: Option<Mode>,
    /// Drop the awareness bonus terms.
    #[arg(long)]
    no_bonus: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    Clarke,
    VcgZero,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Literal,
    ExcludeParticipation,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    All,
    Efficiency,
    Pooled,
    Dominance,
    Nodeficit,
    Stages,
    MOracle,
    Laws,
}

#[derive(Clone, Copy, ValueEnum)]
enum Opponents {
    FullyAware,
    AllAwareness,
}

impl SchemeArgs {
    fn apply(&self, s: &Scenario) -> Scenario {
        let mode = match self.marginal_mode {
            Some(Mode::Literal) => Some(MarginalMode::Literal),
            Some(Mode::ExcludeParticipation) => Some(MarginalMode::ExcludeParticipation),
            None => None,
        };
        let mut scheme = s.scheme.clone();
        match self.scheme {
            Some(SchemeName::Clarke) => {
                scheme.groves = GrovesFamily::Clarke(mode.unwrap_or_default())
            }
            Some(SchemeName::VcgZero) => scheme.groves = GrovesFamily::Zero,
            None => {
                if let (Some(m), GrovesFamily::Clarke(_)) = (mode, &scheme.groves) {
                    scheme.groves = GrovesFamily::Clarke(m);
                }
            }
        }
        if self.no_bonus {
            scheme.awareness_bonus = false;
        }
        s.with_scheme(scheme)
    }
}

fn load(path: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { file } => match load(&file) {
            Ok(s) => {
                println!(
                    "ok: {} agents, {} levels, {} outcomes, {} draws",
                    s.types.n_agents(),
                    s.lattice().len(),
                    s.outcomes.len(),
                    s.draw_count()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_INPUT)
            }
        },
        Command::Run { file, draw, scheme } => {
            let s = match load(&file) {
                Ok(s) => scheme.apply(&s),
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            run(&s, draw)
        }
        Command::Verify {
            file,
            generate,
            property,
            cap,
            opponents,
            scheme,
        } => {
            let scenarios: Vec<Scenario> = match (file, generate) {
                (Some(f), None) => match load(&f) {
                    Ok(s) => vec![s],
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitCode::from(EXIT_INPUT);
                    }
                },
                (None, Some(g)) => {
                    let (seed, bounds) = g.split_once(',').unwrap_or((g.as_str(), "default"));
                    let seed: u64 = match seed.trim().parse() {
                        Ok(v) => v,
                        Err(_) => {
                            eprintln!("--generate: `{seed}` is not a seed");
                            return ExitCode::from(2);
                        }
                    };
                    match Bounds::parse(bounds) {
                        Ok(b) => verify::generate_instances(seed, &b),
                        Err(e) => {
                            eprintln!("--generate: {e}");
                            return ExitCode::from(2);
                        }
                    }
                }
                _ => {
                    eprintln!("verify needs a scenario file or --generate SEED,BOUNDS");
                    return ExitCode::from(2);
                }
            };
            let opponents = match opponents {
                Opponents::FullyAware => OpponentModel::FullyAware,
                Opponents::AllAwareness => OpponentModel::AllAwareness,
            };
            let scenarios: Vec<Scenario> = scenarios.iter().map(|s| scheme.apply(s)).collect();
            verify_all(&scenarios, property, cap, opponents)
        }
        Command::Example1 => example1(),
    }
}

fn run(s: &Scenario, draw: usize) -> ExitCode {
    let draws = s.draws();
    let Some(d) = draws.get(draw) else {
        eprintln!("draw {draw} out of range ({} draws)", draws.len());
        return ExitCode::from(EXIT_INPUT);
    };
    let tables = match s.tables(verify::default_table_cap()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match s.run_truthful(d, &tables) {
        Ok((trace, result)) => {
            print!("{}", trace_jsonl(s, &trace, Some(&result)));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn verify_all(
    scenarios: &[Scenario],
    property: Property,
    cap: Option<usize>,
    opponents: OpponentModel,
) -> ExitCode {
    let table_cap = verify::default_table_cap();
    let wants = |p: Property| property == Property::All || property == p;
    let mut reports: Vec<VerificationReport> = Vec::new();
    for s in scenarios {
        let draws = s.draws();
        if wants(Property::Laws) {
            for mut r in [
                verify::check_lattice_laws(s.lattice()).report,
                verify::check_projection_laws(&s.types).report,
            ] {
                r.scenario = s.name.clone();
                reports.push(r);
            }
        }
        if wants(Property::Efficiency) {
            reports.push(verify::check_efficiency(s, table_cap).report);
        }
        if wants(Property::Pooled) {
            reports.push(verify::check_pooled_implementation(s, &draws).report);
        }
        if wants(Property::Stages) {
            reports.push(verify::check_stage_bound(s, &draws).report);
        }
        if wants(Property::MOracle) {
            reports.push(verify::check_m_oracle(s, table_cap).report);
        }
        if wants(Property::Nodeficit) {
            let mut opts = NoDeficitOptions::default();
            opts.cap = cap.unwrap_or_else(|| cap_from_env(opts.cap));
            let scheme = Scheme::clarke(MarginalMode::Literal);
            reports.push(verify::check_no_deficit(s, &scheme, &draws, opts, table_cap).report);
        }
        if wants(Property::Dominance) {
            let mut opts = DominanceOptions {
                opponents,
                ..Default::default()
            };
            opts.cap = cap.unwrap_or_else(|| cap_from_env(opts.cap));
            reports.push(verify::check_conditional_dominance(s, opts, table_cap).report);
        }
    }
    for r in &reports {
        println!("{}", serde_json::to_string(r).expect("reports serialize"));
    }
    eprintln!(
        "{:<24} {:<22} {:<20} details",
        "scenario", "property", "status"
    );
    for r in &reports {
        let details: Vec<String> = r.stats.iter().map(|(k, v)| format!("{k}={v}")).collect();
        eprintln!(
            "{:<24} {:<22} {:<20} {}",
            r.scenario.as_deref().unwrap_or("-"),
            r.property,
            r.status.as_str(),
            details.join(" ")
        );
    }
    if reports.iter().all(VerificationReport::passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn example1() -> ExitCode {
    let s: Scenario = parse_scenario(EXAMPLE1_JSON).expect("built-in fixture parses");
    let tables = s
        .tables(verify::default_table_cap())
        .expect("small fixture");
    let draw = &s.draws()[0];
    let (trace, result) = s.run_truthful(draw, &tables).expect("truthful run");
    print!("{}", trace_jsonl(&s, &trace, Some(&result)));
    let lat = s.lattice();
    let m = |v: i64| Money::from_i64(v);
    let announced: Vec<&str> = trace.announcements.iter().map(|&l| lat.label(l)).collect();
    let mut problems = Vec::new();
    if announced.first() != Some(&"{a,b,c}") || trace.len() != 3 {
        problems.push(format!(
            "announcements {announced:?}, expected {{a,b,c}} and three stages"
        ));
    }
    if s.outcomes.label(result.outcome) != "agent1_produces" {
        problems.push(format!("outcome {}", s.outcomes.label(result.outcome)));
    }
    if result.transfers != vec![m(0), m(0), m(-80)] {
        problems.push("transfers differ from (0, 0, -80)".into());
    }
    if result.surplus() != m(80) {
        problems.push(format!("surplus {}", result.surplus()));
    }
    if result.revealer.is_some() || result.breakdown.iter().any(|b| b.bonus != m(0)) {
        problems.push("awareness adjustment is not zero".into());
    }
    if problems.is_empty() {
        eprintln!("example1: announcement {{a,b,c}}, outcome agent1_produces, transfers (0, 0, -80), surplus 80");
        ExitCode::SUCCESS
    } else {
        for p in problems {
            eprintln!("example1 mismatch: {p}");
        }
        ExitCode::from(EXIT_FAIL)
    }
}
