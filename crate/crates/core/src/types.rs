//! Payoff type spaces, projections between awareness levels, and nature's draw.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::lattice::{AwarenessLattice, Level};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u16);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent#{}", self.0)
    }
}

/// A payoff type of one agent. The level `λ(t)` is looked up through the
/// [`TypeSystem`] that issued the handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PayoffType {
    pub agent: AgentId,
    idx: u32,
}

impl PayoffType {
    pub fn index(self) -> usize {
        self.idx as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("no agents declared")]
    NoAgents,
    #[error("agent {agent}: type space at level `{level}` is empty")]
    EmptySpace { agent: String, level: String },
    #[error("agent {agent}: duplicate type id `{id}`")]
    DuplicateType { agent: String, id: String },
    #[error("agent {agent}: unknown type id `{id}`")]
    UnknownType { agent: String, id: String },
    #[error("agent {agent}: type `{id}` is declared at `{declared}`, not `{expected}`")]
    WrongLevel {
        agent: String,
        id: String,
        declared: String,
        expected: String,
    },
    #[error("level `{target}` is not below `{source_level}`")]
    NotComparable {
        source_level: String,
        target: String,
    },
    #[error("agent {agent}: projection of `{id}` to `{target}` is undefined")]
    ProjectionUndefined {
        agent: String,
        id: String,
        target: String,
    },
    #[error("unknown agent index {0}")]
    UnknownAgent(u16),
    #[error("profile has {got} entries for {expected} agents")]
    ProfileArity { expected: usize, got: usize },
}

/// Declared types of one agent: `(level, id)` pairs.
#[derive(Debug, Clone, Default)]
pub struct AgentTypesSpec {
    pub name: String,
    pub types: Vec<(Level, String)>,
}

/// One explicit projection map `r^{from}_{to}` for one agent.
#[derive(Debug, Clone)]
pub struct ProjectionSpec {
    pub agent: AgentId,
    pub from: Level,
    pub to: Level,
    pub map: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct AgentTypes {
    name: String,
    labels: Vec<String>,
    levels: Vec<Level>,
    by_label: HashMap<String, u32>,
    // spaces[level] = ids at that level, in declaration order
    spaces: Vec<Vec<u32>>,
    position: Vec<u32>,
    // proj[ty * n_levels + level]
    proj: Vec<Option<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectionViolation {
    /// Some type at `to` has no preimage at `from`.
    Surjectivity {
        agent: AgentId,
        from: Level,
        to: Level,
        missing: PayoffType,
    },
    /// `r^{mid}_{to} ∘ r^{from}_{mid} ≠ r^{from}_{to}` at `ty`.
    Composition {
        ty: PayoffType,
        via: Level,
        to: Level,
        direct: PayoffType,
        composed: PayoffType,
    },
    /// An explicit map sends `ty` to something other than itself at its own level.
    Identity { ty: PayoffType, got: PayoffType },
    /// Two explicit maps (or their forced compositions) disagree.
    Conflict {
        ty: PayoffType,
        to: Level,
        first: PayoffType,
        second: PayoffType,
    },
    /// No chain of explicit maps reaches `to` from `ty`.
    Missing { ty: PayoffType, to: Level },
}

#[derive(Debug, Clone, Default)]
pub struct ProjectionReport {
    pub violations: Vec<ProjectionViolation>,
}

impl ProjectionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-agent, per-level finite payoff type spaces `T_i^ℓ` and the projection
/// family `r^k_ℓ`, completed from explicit maps by composition.
#[derive(Debug, Clone)]
pub struct TypeSystem {
    lattice: Arc<AwarenessLattice>,
    agents: Vec<AgentTypes>,
    completion_issues: Vec<ProjectionViolation>,
}

impl TypeSystem {
    pub fn new(
        lattice: Arc<AwarenessLattice>,
        agents: Vec<AgentTypesSpec>,
        projections: &[ProjectionSpec],
    ) -> Result<Self, TypeError> {
        if agents.is_empty() {
            return Err(TypeError::NoAgents);
        }
        let n_levels = lattice.len();
        let mut built = Vec::with_capacity(agents.len());
        for spec in agents {
            let mut a = AgentTypes {
                name: spec.name.clone(),
                labels: Vec::new(),
                levels: Vec::new(),
                by_label: HashMap::new(),
                spaces: vec![Vec::new(); n_levels],
                position: Vec::new(),
                proj: Vec::new(),
            };
            for (level, id) in spec.types {
                let idx = a.labels.len() as u32;
                if a.by_label.insert(id.clone(), idx).is_some() {
                    return Err(TypeError::DuplicateType {
                        agent: spec.name,
                        id,
                    });
                }
                a.position.push(a.spaces[level.index()].len() as u32);
                a.spaces[level.index()].push(idx);
                a.labels.push(id);
                a.levels.push(level);
            }
            for l in lattice.levels() {
                if a.spaces[l.index()].is_empty() {
                    return Err(TypeError::EmptySpace {
                        agent: spec.name,
                        level: lattice.label(l).to_string(),
                    });
                }
            }
            a.proj = vec![None; a.labels.len() * n_levels];
            for t in 0..a.labels.len() {
                a.proj[t * n_levels + a.levels[t].index()] = Some(t as u32);
            }
            built.push(a);
        }

        let mut ts = Self {
            lattice,
            agents: built,
            completion_issues: Vec::new(),
        };

        // Resolve explicit maps into index form, checking ids and levels.
        let mut edges: Vec<(usize, Level, Level, HashMap<u32, u32>)> = Vec::new();
        for p in projections {
            let lat = &ts.lattice;
            if !lat.leq(p.to, p.from) {
                return Err(TypeError::NotComparable {
                    source_level: lat.label(p.from).to_string(),
                    target: lat.label(p.to).to_string(),
                });
            }
            if p.agent.index() >= ts.agents.len() {
                return Err(TypeError::UnknownAgent(p.agent.0));
            }
            let mut m = HashMap::new();
            for (src, dst) in &p.map {
                let s = ts.resolve_at(p.agent, src, p.from)?;
                let d = ts.resolve_at(p.agent, dst, p.to)?;
                if let Some(prev) = m.insert(s, d) {
                    if prev != d {
                        ts.completion_issues.push(ProjectionViolation::Conflict {
                            ty: PayoffType {
                                agent: p.agent,
                                idx: s,
                            },
                            to: p.to,
                            first: PayoffType {
                                agent: p.agent,
                                idx: prev,
                            },
                            second: PayoffType {
                                agent: p.agent,
                                idx: d,
                            },
                        });
                    }
                }
            }
            edges.push((p.agent.index(), p.from, p.to, m));
        }

        // Fixpoint: push every known projection through every explicit map.
        for ai in 0..ts.agents.len() {
            let agent_edges: Vec<&(usize, Level, Level, HashMap<u32, u32>)> =
                edges.iter().filter(|e| e.0 == ai).collect();
            let n_types = ts.agents[ai].labels.len();
            let mut changed = true;
            while changed {
                changed = false;
                for t in 0..n_types {
                    for (_, from, to, map) in &agent_edges {
                        let via = ts.agents[ai].proj[t * n_levels + from.index()];
                        let Some(via) = via else { continue };
                        let Some(&target) = map.get(&via) else {
                            continue;
                        };
                        let slot = &mut ts.agents[ai].proj[t * n_levels + to.index()];
                        match *slot {
                            None => {
                                *slot = Some(target);
                                changed = true;
                            }
                            Some(existing) if existing != target => {
                                let agent = AgentId(ai as u16);
                                let issue = if ts.agents[ai].levels[t] == *to {
                                    ProjectionViolation::Identity {
                                        ty: PayoffType {
                                            agent,
                                            idx: t as u32,
                                        },
                                        got: PayoffType { agent, idx: target },
                                    }
                                } else {
                                    ProjectionViolation::Conflict {
                                        ty: PayoffType {
                                            agent,
                                            idx: t as u32,
                                        },
                                        to: *to,
                                        first: PayoffType {
                                            agent,
                                            idx: existing,
                                        },
                                        second: PayoffType { agent, idx: target },
                                    }
                                };
                                if !ts.completion_issues.contains(&issue) {
                                    ts.completion_issues.push(issue);
                                }
                            }
                            Some(_) => {}
                        }
                    }
                }
            }
        }
        Ok(ts)
    }

    fn resolve_at(&self, agent: AgentId, id: &str, level: Level) -> Result<u32, TypeError> {
        let a = &self.agents[agent.index()];
        let idx = *a.by_label.get(id).ok_or_else(|| TypeError::UnknownType {
            agent: a.name.clone(),
            id: id.to_string(),
        })?;
        if a.levels[idx as usize] != level {
            return Err(TypeError::WrongLevel {
                agent: a.name.clone(),
                id: id.to_string(),
                declared: self.lattice.label(a.levels[idx as usize]).to_string(),
                expected: self.lattice.label(level).to_string(),
            });
        }
        Ok(idx)
    }

    pub fn lattice(&self) -> &AwarenessLattice {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> &Arc<AwarenessLattice> {
        &self.lattice
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_ids(&self) -> impl ExactSizeIterator<Item = AgentId> {
        (0..self.agents.len()).map(|i| AgentId(i as u16))
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agents[agent.index()].name
    }

    pub fn agent_by_name(&self, name: &str) -> Option<AgentId> {
        self.agents
            .iter()
            .position(|a| a.name == name)
            .map(|i| AgentId(i as u16))
    }

    pub fn n_types(&self, agent: AgentId) -> usize {
        self.agents[agent.index()].labels.len()
    }

    pub fn all_types(&self, agent: AgentId) -> impl Iterator<Item = PayoffType> {
        (0..self.n_types(agent) as u32).map(move |idx| PayoffType { agent, idx })
    }

    /// `λ(t)`.
    #[inline]
    pub fn level(&self, t: PayoffType) -> Level {
        self.agents[t.agent.index()].levels[t.index()]
    }

    pub fn label(&self, t: PayoffType) -> &str {
        &self.agents[t.agent.index()].labels[t.index()]
    }

    pub fn type_by_label(&self, agent: AgentId, id: &str) -> Result<PayoffType, TypeError> {
        let a = self
            .agents
            .get(agent.index())
            .ok_or(TypeError::UnknownAgent(agent.0))?;
        a.by_label
            .get(id)
            .map(|&idx| PayoffType { agent, idx })
            .ok_or_else(|| TypeError::UnknownType {
                agent: a.name.clone(),
                id: id.to_string(),
            })
    }

    /// `T_i^ℓ`.
    pub fn space(
        &self,
        agent: AgentId,
        level: Level,
    ) -> impl ExactSizeIterator<Item = PayoffType> + '_ {
        self.agents[agent.index()].spaces[level.index()]
            .iter()
            .map(move |&idx| PayoffType { agent, idx })
    }

    pub fn space_len(&self, agent: AgentId, level: Level) -> usize {
        self.agents[agent.index()].spaces[level.index()].len()
    }

    /// Position of `t` inside its own space `T_i^{λ(t)}`.
    #[inline]
    pub fn position(&self, t: PayoffType) -> usize {
        self.agents[t.agent.index()].position[t.index()] as usize
    }

    #[inline]
    fn raw_project(&self, t: PayoffType, target: Level) -> Option<PayoffType> {
        let a = &self.agents[t.agent.index()];
        a.proj[t.index() * self.lattice.len() + target.index()].map(|idx| PayoffType {
            agent: t.agent,
            idx,
        })
    }

    /// `r^{λ(t)}_{target}(t)`.
    pub fn project(&self, t: PayoffType, target: Level) -> Result<PayoffType, TypeError> {
        let from = self.level(t);
        if !self.lattice.leq(target, from) {
            return Err(TypeError::NotComparable {
                source_level: self.lattice.label(from).to_string(),
                target: self.lattice.label(target).to_string(),
            });
        }
        self.raw_project(t, target)
            .ok_or_else(|| TypeError::ProjectionUndefined {
                agent: self.agents[t.agent.index()].name.clone(),
                id: self.label(t).to_string(),
                target: self.lattice.label(target).to_string(),
            })
    }

    /// Every `t'` with `λ(t') ⊵ λ(t) ∨ at_or_above` that projects to `t`.
    /// With `at_or_above = λ(t)` this is `t↑`.
    pub fn upset(&self, t: PayoffType, at_or_above: Level) -> Vec<PayoffType> {
        let floor = self.lattice.join(self.level(t), at_or_above);
        let base = self.level(t);
        self.all_types(t.agent)
            .filter(|&u| self.lattice.leq(floor, self.level(u)))
            .filter(|&u| self.raw_project(u, base) == Some(t))
            .collect()
    }

    /// `λ̌(t)`: join of the levels of all components.
    pub fn pooled_awareness(&self, profile: &[PayoffType]) -> Level {
        self.lattice
            .join_all(profile.iter().map(|&t| self.level(t)))
    }

    /// Checks surjectivity, composition and identity of the projection family.
    pub fn validate(&self) -> ProjectionReport {
        let lat = &self.lattice;
        let mut violations = self.completion_issues.clone();
        for agent in self.agent_ids() {
            for t in self.all_types(agent) {
                let from = self.level(t);
                for to in lat.down_set(from) {
                    if self.raw_project(t, to).is_none() {
                        violations.push(ProjectionViolation::Missing { ty: t, to });
                    }
                }
            }
            for from in lat.levels() {
                for to in lat.down_set(from) {
                    for target in self.space(agent, to) {
                        let hit = self
                            .space(agent, from)
                            .any(|u| self.raw_project(u, to) == Some(target));
                        if !hit {
                            violations.push(ProjectionViolation::Surjectivity {
                                agent,
                                from,
                                to,
                                missing: target,
                            });
                        }
                    }
                }
            }
            for t in self.all_types(agent) {
                let top = self.level(t);
                for via in lat.down_set(top) {
                    let Some(mid) = self.raw_project(t, via) else {
                        continue;
                    };
                    for to in lat.down_set(via) {
                        let (Some(direct), Some(composed)) =
                            (self.raw_project(t, to), self.raw_project(mid, to))
                        else {
                            continue;
                        };
                        if direct != composed {
                            violations.push(ProjectionViolation::Composition {
                                ty: t,
                                via,
                                to,
                                direct,
                                composed,
                            });
                        }
                    }
                }
            }
        }
        ProjectionReport { violations }
    }

    pub fn describe_violation(&self, v: &ProjectionViolation) -> String {
        let lat = &self.lattice;
        let ty = |t: &PayoffType| format!("{}:{}", self.agent_name(t.agent), self.label(*t));
        match v {
            ProjectionViolation::Surjectivity {
                agent,
                from,
                to,
                missing,
            } => format!(
                "surjectivity: agent {} type `{}` at {} has no preimage at {}",
                self.agent_name(*agent),
                self.label(*missing),
                lat.label(*to),
                lat.label(*from)
            ),
            ProjectionViolation::Composition {
                ty: t,
                via,
                to,
                direct,
                composed,
            } => format!(
                "composition: {} projects to {} at {} directly but to {} via {}",
                ty(t),
                self.label(*direct),
                lat.label(*to),
                self.label(*composed),
                lat.label(*via)
            ),
            ProjectionViolation::Identity { ty: t, got } => {
                format!(
                    "identity: {} maps to {} at its own level",
                    ty(t),
                    self.label(*got)
                )
            }
            ProjectionViolation::Conflict {
                ty: t,
                to,
                first,
                second,
            } => format!(
                "conflict: {} projects to both {} and {} at {}",
                ty(t),
                self.label(*first),
                self.label(*second),
                lat.label(*to)
            ),
            ProjectionViolation::Missing { ty: t, to } => {
                format!("missing: no projection of {} to {}", ty(t), lat.label(*to))
            }
        }
    }

    /// Explicit one-step maps from each level to each covered level below it;
    /// completion by composition regenerates the full family.
    pub fn covering_projections(&self) -> Vec<ProjectionSpec> {
        let lat = &self.lattice;
        let mut out = Vec::new();
        for agent in self.agent_ids() {
            for (lo, hi) in lat.covering_pairs() {
                let map = self
                    .space(agent, hi)
                    .filter_map(|t| {
                        self.raw_project(t, lo)
                            .map(|u| (self.label(t).to_string(), self.label(u).to_string()))
                    })
                    .collect();
                out.push(ProjectionSpec {
                    agent,
                    from: hi,
                    to: lo,
                    map,
                });
            }
        }
        out
    }

    pub fn check_profile(&self, profile: &[PayoffType]) -> Result<(), TypeError> {
        if profile.len() != self.n_agents() {
            return Err(TypeError::ProfileArity {
                expected: self.n_agents(),
                got: profile.len(),
            });
        }
        if let Some((i, t)) = profile
            .iter()
            .enumerate()
            .find(|(i, t)| t.agent.index() != *i)
        {
            return Err(TypeError::UnknownType {
                agent: self.agents[i].name.clone(),
                id: format!("{}:{}", self.agent_name(t.agent), self.label(*t)),
            });
        }
        Ok(())
    }

    /// `|T^ℓ| = Π_i |T_i^ℓ|`, saturating.
    pub fn profile_count(&self, level: Level) -> usize {
        self.agent_ids()
            .map(|a| self.space_len(a, level))
            .fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// Every profile in `T^ℓ`, last agent varying fastest.
    pub fn profiles_at(&self, level: Level) -> Vec<Vec<PayoffType>> {
        let spaces: Vec<Vec<PayoffType>> = self
            .agent_ids()
            .map(|a| self.space(a, level).collect())
            .collect();
        let mut out = vec![Vec::with_capacity(spaces.len())];
        for space in &spaces {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    space.iter().map(move |&t| {
                        let mut p = prefix.clone();
                        p.push(t);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Nature's move: a true type per agent at a common world level (the lattice
/// top for real draws) and an initial awareness level per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NatureDraw {
    pub true_types: Vec<PayoffType>,
    pub awareness: Vec<Level>,
}

impl NatureDraw {
    /// The level every true type lives at, if they agree.
    pub fn world_level(&self, ts: &TypeSystem) -> Option<Level> {
        let first = ts.level(*self.true_types.first()?);
        self.true_types
            .iter()
            .all(|&t| ts.level(t) == first)
            .then_some(first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentState {
    pub agent: AgentId,
    pub current_awareness: Level,
    pub perceived_type: PayoffType,
}

/// State of `agent` once its awareness has been raised to `ℓ_i ∨ at_level`:
/// the perceived type is the true type projected to that level.
pub fn perceive(
    ts: &TypeSystem,
    draw: &NatureDraw,
    agent: AgentId,
    at_level: Level,
) -> Result<AgentState, TypeError> {
    let aware = ts.lattice().join(draw.awareness[agent.index()], at_level);
    let perceived_type = ts.project(draw.true_types[agent.index()], aware)?;
    Ok(AgentState {
        agent,
        current_awareness: aware,
        perceived_type,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Agent 0 on powerset {a,b}: two top types projecting to one type at {a}
    // and to distinct types at {b}.
    fn toy() -> TypeSystem {
        let lat = Arc::new(AwarenessLattice::powerset(&["a", "b"]).unwrap());
        let l = |s: &str| lat.level(s).unwrap();
        let spec = AgentTypesSpec {
            name: "0".into(),
            types: vec![
                (l("{}"), "e".into()),
                (l("{a}"), "a".into()),
                (l("{b}"), "b1".into()),
                (l("{b}"), "b2".into()),
                (l("{a,b}"), "x".into()),
                (l("{a,b}"), "y".into()),
            ],
        };
        let m = |pairs: &[(&str, &str)]| {
            pairs
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect()
        };
        let agent = AgentId(0);
        let projections = vec![
            ProjectionSpec {
                agent,
                from: l("{a,b}"),
                to: l("{a}"),
                map: m(&[("x", "a"), ("y", "a")]),
            },
            ProjectionSpec {
                agent,
                from: l("{a,b}"),
                to: l("{b}"),
                map: m(&[("x", "b1"), ("y", "b2")]),
            },
            ProjectionSpec {
                agent,
                from: l("{a}"),
                to: l("{}"),
                map: m(&[("a", "e")]),
            },
            ProjectionSpec {
                agent,
                from: l("{b}"),
                to: l("{}"),
                map: m(&[("b1", "e"), ("b2", "e")]),
            },
        ];
        TypeSystem::new(lat, vec![spec], &projections).unwrap()
    }

    #[test]
    fn completion_and_validation() {
        let ts = toy();
        let report = ts.validate();
        assert!(report.passed(), "{:?}", report.violations);
        let x = ts.type_by_label(AgentId(0), "x").unwrap();
        let bottom = ts.lattice().bottom();
        assert_eq!(ts.label(ts.project(x, bottom).unwrap()), "e");
        assert_eq!(ts.project(x, ts.level(x)).unwrap(), x);
    }

    #[test]
    fn project_rejects_upward_target() {
        let ts = toy();
        let a = ts.type_by_label(AgentId(0), "a").unwrap();
        let top = ts.lattice().top();
        assert!(matches!(
            ts.project(a, top),
            Err(TypeError::NotComparable { .. })
        ));
    }

    #[test]
    fn upset_counts_match_enumeration() {
        let ts = toy();
        let e = ts.type_by_label(AgentId(0), "e").unwrap();
        assert_eq!(ts.upset(e, ts.level(e)).len(), 6);
        let a = ts.type_by_label(AgentId(0), "a").unwrap();
        let names: Vec<&str> = ts
            .upset(a, ts.level(a))
            .into_iter()
            .map(|t| ts.label(t))
            .collect();
        assert_eq!(names, ["a", "x", "y"]);
        let b1 = ts.type_by_label(AgentId(0), "b1").unwrap();
        let names: Vec<&str> = ts
            .upset(b1, ts.lattice().top())
            .into_iter()
            .map(|t| ts.label(t))
            .collect();
        assert_eq!(names, ["x"]);
    }

    #[test]
    fn surjectivity_violation_is_reported() {
        let lat = Arc::new(AwarenessLattice::powerset(&["a"]).unwrap());
        let l = |s: &str| lat.level(s).unwrap();
        let spec = AgentTypesSpec {
            name: "0".into(),
            types: vec![
                (l("{}"), "p".into()),
                (l("{}"), "q".into()),
                (l("{a}"), "x".into()),
            ],
        };
        let proj = ProjectionSpec {
            agent: AgentId(0),
            from: l("{a}"),
            to: l("{}"),
            map: vec![("x".into(), "p".into())],
        };
        let ts = TypeSystem::new(lat, vec![spec], &[proj]).unwrap();
        let report = ts.validate();
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            ProjectionViolation::Surjectivity { missing, .. } => {
                assert_eq!(ts.label(*missing), "q")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_maps_are_reported() {
        let lat = Arc::new(
            AwarenessLattice::build(
                ["0", "1", "2"],
                &[("0".into(), "1".into()), ("1".into(), "2".into())],
            )
            .unwrap(),
        );
        let l = |s: &str| lat.level(s).unwrap();
        let spec = AgentTypesSpec {
            name: "0".into(),
            types: vec![
                (l("0"), "p".into()),
                (l("0"), "q".into()),
                (l("1"), "m".into()),
                (l("1"), "n".into()),
                (l("2"), "x".into()),
                (l("2"), "y".into()),
            ],
        };
        let m = |pairs: &[(&str, &str)]| {
            pairs
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect()
        };
        let agent = AgentId(0);
        let projections = vec![
            ProjectionSpec {
                agent,
                from: l("2"),
                to: l("1"),
                map: m(&[("x", "m"), ("y", "n")]),
            },
            ProjectionSpec {
                agent,
                from: l("1"),
                to: l("0"),
                map: m(&[("m", "p"), ("n", "q")]),
            },
            // disagrees with the composition for x
            ProjectionSpec {
                agent,
                from: l("2"),
                to: l("0"),
                map: m(&[("x", "q"), ("y", "q")]),
            },
        ];
        let ts = TypeSystem::new(lat, vec![spec], &projections).unwrap();
        let report = ts.validate();
        assert!(!report.passed());
        assert!(report.violations.iter().any(|v| matches!(
            v,
            ProjectionViolation::Conflict { .. } | ProjectionViolation::Composition { .. }
        )));
    }

    #[test]
    fn unknown_ids_name_the_offender() {
        let lat = Arc::new(AwarenessLattice::powerset(&["a"]).unwrap());
        let l = |s: &str| lat.level(s).unwrap();
        let spec = AgentTypesSpec {
            name: "0".into(),
            types: vec![(l("{}"), "p".into()), (l("{a}"), "x".into())],
        };
        let proj = ProjectionSpec {
            agent: AgentId(0),
            from: l("{a}"),
            to: l("{}"),
            map: vec![("ghost".into(), "p".into())],
        };
        let err = TypeSystem::new(lat, vec![spec], &[proj]).unwrap_err();
        assert_eq!(
            err,
            TypeError::UnknownType {
                agent: "0".into(),
                id: "ghost".into()
            }
        );
    }

    #[test]
    fn single_level_system_passes() {
        let lat = Arc::new(AwarenessLattice::build(["only"], &[]).unwrap());
        let spec = AgentTypesSpec {
            name: "0".into(),
            types: vec![(lat.bottom(), "p".into()), (lat.bottom(), "q".into())],
        };
        let ts = TypeSystem::new(lat, vec![spec], &[]).unwrap();
        assert!(ts.validate().passed());
    }

    #[test]
    fn perceive_joins_awareness() {
        let ts = toy();
        let lat = ts.lattice();
        let l = |s: &str| lat.level(s).unwrap();
        let y = ts.type_by_label(AgentId(0), "y").unwrap();
        let draw = NatureDraw {
            true_types: vec![y],
            awareness: vec![l("{b}")],
        };
        let s0 = perceive(&ts, &draw, AgentId(0), lat.bottom()).unwrap();
        assert_eq!(s0.current_awareness, l("{b}"));
        assert_eq!(ts.label(s0.perceived_type), "b2");
        let s1 = perceive(&ts, &draw, AgentId(0), l("{a}")).unwrap();
        assert_eq!(s1.current_awareness, lat.top());
        assert_eq!(s1.perceived_type, y);
    }
}
