//! The dynamic direct elaboration mechanism as a deterministic state machine.
//!
//! Agents report types; the mediator announces the pooled awareness of the
//! reports; each agent's awareness rises to its initial level joined with the
//! announcement; later reports must elaborate the previous one at or above the
//! announced level. The run stops as soon as a profile repeats.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::lattice::Level;
use crate::types::{perceive, AgentId, AgentState, NatureDraw, PayoffType, TypeError, TypeSystem};

/// What agent `i` knows when it has to report at `stage` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InformationSet {
    pub agent: AgentId,
    pub stage: usize,
    pub own_awareness: Level,
    pub own_perceived_type: PayoffType,
    pub own_past_reports: Vec<PayoffType>,
    pub announcements_seen: Vec<Level>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inadmissible {
    WrongAgent,
    /// The report needs more awareness than the agent has.
    AboveAwareness,
    /// The report sits below the last announced pooled level.
    BelowAnnouncement,
    /// The report does not project to the agent's previous report.
    NotAnElaboration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("agent {agent} at stage {stage}: inadmissible report `{report}` ({reason:?})")]
    InadmissibleReport {
        agent: String,
        stage: usize,
        report: String,
        reason: Inadmissible,
    },
    #[error("run exceeded the stage cap of {0}")]
    StageOverflow(usize),
    #[error("expected {expected} reports, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("enumeration exceeded the cap of {0} nodes")]
    CapExceeded(usize),
    #[error("the run has already stopped")]
    AlreadyStopped,
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Reports admissible at `h`: at stage 1 anything the agent can describe; later
/// an elaboration of the previous report at or above the last announcement.
pub fn admissible_reports(ts: &TypeSystem, h: &InformationSet) -> Vec<PayoffType> {
    let lat = ts.lattice();
    match (h.own_past_reports.last(), h.announcements_seen.last()) {
        (Some(&prev), Some(&ann)) => ts
            .upset(prev, ann)
            .into_iter()
            .filter(|&t| lat.leq(ts.level(t), h.own_awareness))
            .collect(),
        _ => ts
            .all_types(h.agent)
            .filter(|&t| lat.leq(ts.level(t), h.own_awareness))
            .collect(),
    }
}

fn check_admissible(
    ts: &TypeSystem,
    h: &InformationSet,
    report: PayoffType,
) -> Result<(), Inadmissible> {
    let lat = ts.lattice();
    if report.agent != h.agent {
        return Err(Inadmissible::WrongAgent);
    }
    let level = ts.level(report);
    if !lat.leq(level, h.own_awareness) {
        return Err(Inadmissible::AboveAwareness);
    }
    if let (Some(&prev), Some(&ann)) = (h.own_past_reports.last(), h.announcements_seen.last()) {
        if !lat.leq(ann, level) {
            return Err(Inadmissible::BelowAnnouncement);
        }
        if ts.project(report, ts.level(prev)).ok() != Some(prev) {
            return Err(Inadmissible::NotAnElaboration);
        }
    }
    Ok(())
}

/// A deterministic reporting strategy.
pub trait Strategy: Send + Sync {
    fn report(&self, ts: &TypeSystem, h: &InformationSet) -> PayoffType;
}

impl<F> Strategy for F
where
    F: Fn(&TypeSystem, &InformationSet) -> PayoffType + Send + Sync,
{
    fn report(&self, ts: &TypeSystem, h: &InformationSet) -> PayoffType {
        self(ts, h)
    }
}

/// `σ*`: report the perceived true type at the current awareness.
#[derive(Debug, Clone, Copy, Default)]
pub struct Truthful;

impl Strategy for Truthful {
    fn report(&self, _ts: &TypeSystem, h: &InformationSet) -> PayoffType {
        h.own_perceived_type
    }
}

/// Plays a fixed move per announcement history, truthfully elsewhere.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    pub moves: HashMap<Vec<Level>, PayoffType>,
}

impl Strategy for Scripted {
    fn report(&self, _ts: &TypeSystem, h: &InformationSet) -> PayoffType {
        self.moves
            .get(&h.announcements_seen)
            .copied()
            .unwrap_or(h.own_perceived_type)
    }
}

/// One truthful strategy per agent.
pub fn truth_telling(ts: &TypeSystem) -> Vec<Truthful> {
    vec![Truthful; ts.n_agents()]
}

/// Sequence of reported profiles with the announcement after each stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Trace {
    pub stages: Vec<Vec<PayoffType>>,
    pub announcements: Vec<Level>,
    pub stopped: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// `τ*`, the last reported profile.
    pub fn final_profile(&self) -> Option<&[PayoffType]> {
        self.stages.last().map(Vec::as_slice)
    }

    pub fn final_level(&self) -> Option<Level> {
        self.announcements.last().copied()
    }

    /// First stage (0-based) at which `agent` reported a type at `level`.
    pub fn first_stage_at(&self, ts: &TypeSystem, agent: AgentId, level: Level) -> Option<usize> {
        self.stages
            .iter()
            .position(|p| ts.level(p[agent.index()]) == level)
    }

    /// Checks the structural invariants every engine trace satisfies.
    pub fn check(&self, ts: &TypeSystem) -> Result<(), String> {
        let lat = ts.lattice();
        if self.stages.len() != self.announcements.len() {
            return Err("one announcement per stage".into());
        }
        for (k, p) in self.stages.iter().enumerate() {
            if ts.pooled_awareness(p) != self.announcements[k] {
                return Err(format!(
                    "stage {}: announcement is not the pooled level",
                    k + 1
                ));
            }
            if k == 0 {
                continue;
            }
            let prev = &self.stages[k - 1];
            let ann = self.announcements[k - 1];
            for (t, &u) in p.iter().zip(prev) {
                let lt = ts.level(*t);
                if !lat.leq(ann, lt) || ts.project(*t, ts.level(u)).ok() != Some(u) {
                    return Err(format!(
                        "stage {}: {} is not an admissible elaboration",
                        k + 1,
                        ts.label(*t)
                    ));
                }
            }
            if !lat.leq(self.announcements[k - 1], self.announcements[k]) {
                return Err(format!("stage {}: announcement decreased", k + 1));
            }
        }
        let repeat = self.stages.len() >= 2
            && self.stages[self.stages.len() - 1] == self.stages[self.stages.len() - 2];
        if repeat != self.stopped {
            return Err("stopped flag disagrees with the repeat rule".into());
        }
        if self.stopped {
            let level = self.final_level().expect("nonempty");
            if self
                .final_profile()
                .expect("nonempty")
                .iter()
                .any(|&t| ts.level(t) != level)
            {
                return Err("final profile not at the pooled level".into());
            }
        }
        Ok(())
    }
}

/// Hard cap on stages: one more than the proven bound `2 + |I|·height(L)`.
pub fn default_stage_cap(ts: &TypeSystem) -> usize {
    stage_bound(ts) + 1
}

/// Every run stops within this many stages.
pub fn stage_bound(ts: &TypeSystem) -> usize {
    2 + ts.n_agents() * ts.lattice().height()
}

#[derive(Debug, Clone)]
pub struct ElaborationState<'a> {
    ts: &'a TypeSystem,
    draw: &'a NatureDraw,
    agents: Vec<AgentState>,
    initial: Vec<AgentState>,
    trace: Trace,
}

impl<'a> ElaborationState<'a> {
    pub fn new(ts: &'a TypeSystem, draw: &'a NatureDraw) -> Result<Self, EngineError> {
        ts.check_profile(&draw.true_types)?;
        if draw.awareness.len() != ts.n_agents() {
            return Err(EngineError::Arity {
                expected: ts.n_agents(),
                got: draw.awareness.len(),
            });
        }
        let bottom = ts.lattice().bottom();
        let agents = ts
            .agent_ids()
            .map(|a| perceive(ts, draw, a, bottom))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            ts,
            draw,
            initial: agents.clone(),
            agents,
            trace: Trace::default(),
        })
    }

    pub fn agent_state(&self, agent: AgentId) -> &AgentState {
        &self.agents[agent.index()]
    }

    pub fn is_stopped(&self) -> bool {
        self.trace.stopped
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Stage the next reports belong to (1-based).
    pub fn next_stage(&self) -> usize {
        self.trace.stages.len() + 1
    }

    pub fn information_set(&self, agent: AgentId) -> InformationSet {
        let st = &self.agents[agent.index()];
        InformationSet {
            agent,
            stage: self.next_stage(),
            own_awareness: st.current_awareness,
            own_perceived_type: st.perceived_type,
            own_past_reports: self.trace.stages.iter().map(|p| p[agent.index()]).collect(),
            announcements_seen: self.trace.announcements.clone(),
        }
    }

    pub fn admissible_reports(&self, agent: AgentId) -> Vec<PayoffType> {
        admissible_reports(self.ts, &self.information_set(agent))
    }

    /// Records one profile of reports, announces the pooled level and raises
    /// every agent's awareness to it.
    pub fn step(&mut self, reports: &[PayoffType]) -> Result<(), EngineError> {
        if self.trace.stopped {
            return Err(EngineError::AlreadyStopped);
        }
        if reports.len() != self.ts.n_agents() {
            return Err(EngineError::Arity {
                expected: self.ts.n_agents(),
                got: reports.len(),
            });
        }
        for agent in self.ts.agent_ids() {
            let h = self.information_set(agent);
            let r = reports[agent.index()];
            check_admissible(self.ts, &h, r).map_err(|reason| EngineError::InadmissibleReport {
                agent: self.ts.agent_name(agent).to_string(),
                stage: h.stage,
                report: if r.agent == agent {
                    self.ts.label(r).to_string()
                } else {
                    format!("{}:{}", self.ts.agent_name(r.agent), self.ts.label(r))
                },
                reason,
            })?;
        }
        let announcement = self.ts.pooled_awareness(reports);
        let repeat = self.trace.final_profile() == Some(reports);
        self.trace.stages.push(reports.to_vec());
        self.trace.announcements.push(announcement);
        self.trace.stopped = repeat;
        for agent in self.ts.agent_ids() {
            self.agents[agent.index()] = perceive(self.ts, self.draw, agent, announcement)?;
        }
        Ok(())
    }

    /// Initial awareness `ℓ_i` of `agent`.
    pub fn initial_awareness(&self, agent: AgentId) -> Level {
        self.initial[agent.index()].current_awareness
    }
}

/// Runs the mechanism until a profile repeats.
pub fn run(
    ts: &TypeSystem,
    draw: &NatureDraw,
    strategies: &[&dyn Strategy],
    stage_cap: Option<usize>,
) -> Result<Trace, EngineError> {
    if strategies.len() != ts.n_agents() {
        return Err(EngineError::Arity {
            expected: ts.n_agents(),
            got: strategies.len(),
        });
    }
    let cap = stage_cap.unwrap_or_else(|| default_stage_cap(ts));
    let mut state = ElaborationState::new(ts, draw)?;
    while !state.is_stopped() {
        if state.trace.len() >= cap {
            return Err(EngineError::StageOverflow(cap));
        }
        let reports: Vec<PayoffType> = ts
            .agent_ids()
            .map(|a| strategies[a.index()].report(ts, &state.information_set(a)))
            .collect();
        state.step(&reports)?;
    }
    Ok(state.into_trace())
}

/// Runs with every agent truthful.
pub fn run_truthful(ts: &TypeSystem, draw: &NatureDraw) -> Result<Trace, EngineError> {
    let truthful = Truthful;
    let strategies: Vec<&dyn Strategy> = vec![&truthful; ts.n_agents()];
    run(ts, draw, &strategies, None)
}

/// Which own-strategy completions count when enumerating information sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnPlay {
    /// Only information sets on the agent's truthful path, `H_i(σ*_i)`.
    Truthful,
    /// Information sets reachable under any own strategy.
    Any,
}

/// Information sets of `agent` reachable given the draw and the other agents'
/// strategies (the entry of `strategies` at `agent` is ignored).
pub fn enumerate_information_sets(
    ts: &TypeSystem,
    draw: &NatureDraw,
    strategies: &[&dyn Strategy],
    agent: AgentId,
    own: OwnPlay,
    cap: usize,
) -> Result<Vec<InformationSet>, EngineError> {
    let root = ElaborationState::new(ts, draw)?;
    let stage_cap = default_stage_cap(ts);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![root];
    let mut nodes = 0usize;
    while let Some(state) = stack.pop() {
        if state.is_stopped() {
            continue;
        }
        nodes += 1;
        if nodes > cap {
            return Err(EngineError::CapExceeded(cap));
        }
        if state.trace.len() >= stage_cap {
            return Err(EngineError::StageOverflow(stage_cap));
        }
        let h = state.information_set(agent);
        let own_moves = match own {
            OwnPlay::Truthful => vec![h.own_perceived_type],
            OwnPlay::Any => admissible_reports(ts, &h),
        };
        if seen.insert(h.clone()) {
            out.push(h);
        }
        let others: Vec<PayoffType> = ts
            .agent_ids()
            .map(|a| {
                if a == agent {
                    state.agents[a.index()].perceived_type
                } else {
                    strategies[a.index()].report(ts, &state.information_set(a))
                }
            })
            .collect();
        for mv in own_moves.into_iter().rev() {
            let mut next = state.clone();
            let mut reports = others.clone();
            reports[agent.index()] = mv;
            next.step(&reports)?;
            stack.push(next);
        }
    }
    out.sort_by(|a, b| {
        (a.stage, &a.own_past_reports, &a.announcements_seen).cmp(&(
            b.stage,
            &b.own_past_reports,
            &b.announcements_seen,
        ))
    });
    Ok(out)
}
