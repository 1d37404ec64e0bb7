//! Exhaustive check of conditional dominance of truth-telling.
//!
//! For every agent `i`, every perceived world level `W`, every type of `i` at
//! `W` and every initial awareness of `i` below `W`, the search walks the
//! truthful path of `i` against all opponent behaviour. At each information
//! set where `i`'s awareness has reached `W` it forks: truthful continuation
//! against a deviation that differs now. Opponents see only the announcement
//! history (and their own reports, which that history determines), so while
//! both branches share the history the opponents' moves are shared; once the
//! histories split the branches are independent and the test reduces to
//! `min truthful < max deviation`.
//!
//! Opponents are modelled as fully aware at `W` by default: their admissible
//! sets only grow with awareness and their types never restrict reports, so
//! this covers every opponent draw below `W`.

use std::cell::Cell;
use std::collections::HashMap;

use rayon::prelude::*;

use super::play::{for_each_profile, settle, state_key, Admissible, Memo, Play};
use crate::engine::{run, stage_bound, Scripted, Strategy, Trace, Truthful};
use crate::lattice::Level;
use crate::outcomes::Economy;
use crate::scalar::Scalar;
use crate::transfers::MechanismTables;
use crate::types::{AgentId, NatureDraw, PayoffType, TypeSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OpponentModel {
    /// Opponents aware of the whole perceived world.
    #[default]
    FullyAware,
    /// Every opponent awareness profile below the perceived world.
    AllAwareness,
}

#[derive(Debug, Clone, Copy)]
pub struct DominanceOptions {
    /// Node budget per work item.
    pub cap: usize,
    pub opponents: OpponentModel,
    /// Skip the rayon fan-out.
    pub sequential: bool,
}

impl Default for DominanceOptions {
    fn default() -> Self {
        Self {
            cap: 2_000_000,
            opponents: OpponentModel::FullyAware,
            sequential: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DominanceWitness<S> {
    pub agent: AgentId,
    /// True types at the perceived world level and initial awareness.
    pub draw: NatureDraw,
    pub fork_stage: usize,
    pub opponent_scripts: Vec<Scripted>,
    pub deviation: Scripted,
    pub truthful_trace: Trace,
    pub deviation_trace: Trace,
    pub truthful_utility: S,
    pub deviation_utility: S,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DominanceStats {
    pub work_items: usize,
    pub capped_items: usize,
    pub information_sets: usize,
    pub nodes: usize,
    pub terminals: usize,
    pub max_stages: usize,
    pub bonus_sum_violations: usize,
}

impl DominanceStats {
    fn merge(&mut self, o: &DominanceStats) {
        self.work_items += o.work_items;
        self.capped_items += o.capped_items;
        self.information_sets += o.information_sets;
        self.nodes += o.nodes;
        self.terminals += o.terminals;
        self.max_stages = self.max_stages.max(o.max_stages);
        self.bonus_sum_violations += o.bonus_sum_violations;
    }
}

#[derive(Debug, Clone)]
pub struct DominanceOutcome<S> {
    pub stats: DominanceStats,
    pub witness: Option<DominanceWitness<S>>,
}

impl<S> DominanceOutcome<S> {
    pub fn capped(&self) -> bool {
        self.stats.capped_items > 0
    }
}

#[derive(Debug, Clone)]
struct World {
    agent: usize,
    level: Level,
    tau: PayoffType,
    init: Vec<Level>,
}

struct Capped;

struct Search<'a, S> {
    econ: Economy<'a, S>,
    tables: &'a MechanismTables<S>,
    adm: &'a Admissible,
    world: World,
    n: usize,
    cap: usize,
    nodes: Cell<usize>,
    stats: DominanceStats,
    min_memo: Memo<S>,
    max_memo: Memo<S>,
}

struct Violation<S> {
    fork_stage: usize,
    truthful: Play,
    deviation: Play,
    u_truthful: S,
    u_deviation: S,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn ts(&self) -> &'a TypeSystem {
        self.econ.types
    }

    fn tick(&self) -> Result<(), Capped> {
        let v = self.nodes.get() + 1;
        self.nodes.set(v);
        if v > self.cap {
            Err(Capped)
        } else {
            Ok(())
        }
    }

    fn aware(&self, play: &Play, j: usize) -> Level {
        match play.last_ann() {
            Some(a) => self.ts().lattice().join(self.world.init[j], a),
            None => self.world.init[j],
        }
    }

    fn truthful(&self, play: &Play) -> PayoffType {
        let aware = self.aware(play, self.world.agent);
        self.ts()
            .project(self.world.tau, aware)
            .expect("perceived type exists below the world level")
    }

    fn options(&self, play: &Play, j: usize) -> &'a [PayoffType] {
        self.adm.options(play, self.n, j, self.aware(play, j))
    }

    fn utility(&mut self, play: &Play) -> S {
        let (x, f, bonus_sum) = settle(self.econ, self.tables, play);
        let v = self
            .econ
            .value(self.world.tau, x)
            .expect("scenario value table is complete");
        self.stats.terminals += 1;
        self.stats.max_stages = self.stats.max_stages.max(play.stages());
        if bonus_sum != S::zero() {
            self.stats.bonus_sum_violations += 1;
        }
        v + f[self.world.agent].clone()
    }

    fn lists<'s>(&self, play: &Play, own: &'s [PayoffType]) -> Vec<&'s [PayoffType]>
    where
        'a: 's,
    {
        (0..self.n)
            .map(|j| {
                if j == self.world.agent {
                    own
                } else {
                    self.options(play, j)
                }
            })
            .collect()
    }

    /// Extreme utility over all continuations; `own_free` lets `i` deviate.
    fn extreme(&mut self, play: &Play, own_free: bool) -> Result<(S, Vec<PayoffType>), Capped> {
        if play.stopped {
            return Ok((self.utility(play), Vec::new()));
        }
        self.tick()?;
        let key = state_key(self.ts(), play, self.n);
        let memo = if own_free {
            &self.max_memo
        } else {
            &self.min_memo
        };
        if let Some(hit) = memo.get(&key) {
            let stages = play.stages() + hit.1.len() / self.n;
            self.stats.max_stages = self.stats.max_stages.max(stages);
            return Ok(hit.clone());
        }
        let truth = [self.truthful(play)];
        let own = if own_free {
            self.options(play, self.world.agent)
        } else {
            &truth[..]
        };
        let refs = self.lists(play, own);
        let mut best: Option<(S, Vec<PayoffType>)> = None;
        let ts = self.ts();
        for_each_profile(&refs, |p| {
            let child = play.child(ts, p);
            let (u, mut cont) = self.extreme(&child, own_free)?;
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    if own_free {
                        u > *b
                    } else {
                        u < *b
                    }
                }
            };
            if better {
                let mut path = p.to_vec();
                path.append(&mut cont);
                best = Some((u, path));
            }
            Ok::<bool, Capped>(false)
        })?;
        let best = best.expect("admissible sets are never empty");
        let memo = if own_free {
            &mut self.max_memo
        } else {
            &mut self.min_memo
        };
        memo.insert(key, best.clone());
        Ok(best)
    }

    fn extend(&self, play: &Play, path: &[PayoffType]) -> Play {
        let mut p = play.clone();
        for prof in path.chunks(self.n) {
            p.push(self.ts(), prof);
        }
        p
    }

    /// Both branches share the announcement history so far.
    fn joint(
        &mut self,
        a: &Play,
        b: &Play,
        fork_stage: usize,
    ) -> Result<Option<Violation<S>>, Capped> {
        if a.stopped || b.stopped || a.anns != b.anns {
            let (ua, pa) = self.extreme(a, false)?;
            let (ub, pb) = self.extreme(b, true)?;
            if ub > ua {
                return Ok(Some(Violation {
                    fork_stage,
                    truthful: self.extend(a, &pa),
                    deviation: self.extend(b, &pb),
                    u_truthful: ua,
                    u_deviation: ub,
                }));
            }
            return Ok(None);
        }
        self.tick()?;
        let i = self.world.agent;
        let truth = [self.truthful(a)];
        let own_b: Vec<PayoffType> = self.options(b, i).to_vec();
        let opp = self.lists(a, &truth);
        let ts = self.ts();
        let mut found = None;
        for_each_profile(&opp, |p| {
            let a2 = a.child(ts, p);
            let mut q = p.to_vec();
            for &d in &own_b {
                q[i] = d;
                let b2 = b.child(ts, &q);
                if let Some(v) = self.joint(&a2, &b2, fork_stage)? {
                    found = Some(v);
                    return Ok(true);
                }
            }
            Ok::<bool, Capped>(false)
        })?;
        Ok(found)
    }

    fn fork(&mut self, s: &Play) -> Result<Option<Violation<S>>, Capped> {
        self.stats.information_sets += 1;
        let i = self.world.agent;
        let truth = self.truthful(s);
        let devs: Vec<PayoffType> = self
            .options(s, i)
            .iter()
            .copied()
            .filter(|&d| d != truth)
            .collect();
        if devs.is_empty() {
            return Ok(None);
        }
        let truth_arr = [truth];
        let opp = self.lists(s, &truth_arr);
        let ts = self.ts();
        let stage = s.stages() + 1;
        let mut found = None;
        for_each_profile(&opp, |p| {
            let a = s.child(ts, p);
            let mut q = p.to_vec();
            for &d in &devs {
                q[i] = d;
                let b = s.child(ts, &q);
                if let Some(v) = self.joint(&a, &b, stage)? {
                    found = Some(v);
                    return Ok(true);
                }
            }
            Ok::<bool, Capped>(false)
        })?;
        Ok(found)
    }

    /// Walks every information set on `i`'s truthful path.
    fn prefix(&mut self, s: &Play) -> Result<Option<Violation<S>>, Capped> {
        if s.stopped {
            return Ok(None);
        }
        self.tick()?;
        if self.aware(s, self.world.agent) == self.world.level {
            if let Some(v) = self.fork(s)? {
                return Ok(Some(v));
            }
        }
        let truth = [self.truthful(s)];
        let lists = self.lists(s, &truth);
        let ts = self.ts();
        let mut found = None;
        for_each_profile(&lists, |p| {
            if let Some(v) = self.prefix(&s.child(ts, p))? {
                found = Some(v);
                return Ok(true);
            }
            Ok::<bool, Capped>(false)
        })?;
        Ok(found)
    }
}

fn worlds(ts: &TypeSystem, model: OpponentModel) -> Vec<World> {
    let lat = ts.lattice();
    let n = ts.n_agents();
    let mut out = Vec::new();
    for agent in ts.agent_ids() {
        for &level in lat.topo_ascending() {
            let below = lat.down_set(level);
            for tau in ts.space(agent, level) {
                for &own in &below {
                    let mut profiles: Vec<Vec<Level>> = vec![Vec::new()];
                    for j in 0..n {
                        let choices: Vec<Level> = if j == agent.index() {
                            vec![own]
                        } else {
                            match model {
                                OpponentModel::FullyAware => vec![level],
                                OpponentModel::AllAwareness => below.clone(),
                            }
                        };
                        profiles = profiles
                            .into_iter()
                            .flat_map(|p| {
                                choices.iter().map(move |&c| {
                                    let mut q = p.clone();
                                    q.push(c);
                                    q
                                })
                            })
                            .collect();
                    }
                    for init in profiles {
                        out.push(World {
                            agent: agent.index(),
                            level,
                            tau,
                            init,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs the search. The witness, when present, is the first violation in
/// canonical work-item order and has been replayed through the engine.
pub fn search<S: Scalar>(
    econ: Economy<'_, S>,
    tables: &MechanismTables<S>,
    opts: DominanceOptions,
) -> DominanceOutcome<S> {
    let ts = econ.types;
    let adm = Admissible::new(ts);
    let items = worlds(ts, opts.opponents);
    let work = |w: &World| -> (DominanceStats, Option<(World, Violation<S>)>) {
        let mut s = Search {
            econ,
            tables,
            adm: &adm,
            world: w.clone(),
            n: ts.n_agents(),
            cap: opts.cap,
            nodes: Cell::new(0),
            stats: DominanceStats {
                work_items: 1,
                ..Default::default()
            },
            min_memo: HashMap::new(),
            max_memo: HashMap::new(),
        };
        let r = s.prefix(&Play::new());
        s.stats.nodes = s.nodes.get();
        match r {
            Ok(v) => (s.stats, v.map(|v| (w.clone(), v))),
            Err(Capped) => {
                s.stats.capped_items = 1;
                (s.stats, None)
            }
        }
    };
    let results: Vec<_> = if opts.sequential {
        items.iter().map(work).collect()
    } else {
        items.par_iter().map(work).collect()
    };
    let mut stats = DominanceStats::default();
    let mut witness = None;
    for (st, v) in results {
        stats.merge(&st);
        if witness.is_none() {
            if let Some((w, v)) = v {
                witness = Some(build_witness(econ, tables, &w, v));
            }
        }
    }
    DominanceOutcome { stats, witness }
}

fn build_witness<S: Scalar>(
    econ: Economy<'_, S>,
    tables: &MechanismTables<S>,
    w: &World,
    v: Violation<S>,
) -> DominanceWitness<S> {
    let ts = econ.types;
    let n = ts.n_agents();
    let mut opponent_scripts = vec![Scripted::default(); n];
    for j in ts.agent_ids().filter(|j| j.index() != w.agent) {
        v.truthful.script(n, j, &mut opponent_scripts[j.index()]);
        v.deviation.script(n, j, &mut opponent_scripts[j.index()]);
    }
    let mut deviation = Scripted::default();
    v.deviation
        .script(n, AgentId(w.agent as u16), &mut deviation);
    let true_types = ts
        .agent_ids()
        .map(|j| {
            if j.index() == w.agent {
                w.tau
            } else {
                ts.space(j, w.level).next().expect("nonempty space")
            }
        })
        .collect();
    let draw = NatureDraw {
        true_types,
        awareness: w.init.clone(),
    };
    let witness = DominanceWitness {
        agent: AgentId(w.agent as u16),
        draw,
        fork_stage: v.fork_stage,
        opponent_scripts,
        deviation,
        truthful_trace: v.truthful.to_trace(n),
        deviation_trace: v.deviation.to_trace(n),
        truthful_utility: v.u_truthful,
        deviation_utility: v.u_deviation,
    };
    debug_assert!(replay(econ, tables, &witness).is_ok());
    witness
}

/// Replays a witness through the engine; returns the two utilities when both
/// traces and the violated inequality are reproduced.
pub fn replay<S: Scalar>(
    econ: Economy<'_, S>,
    tables: &MechanismTables<S>,
    w: &DominanceWitness<S>,
) -> Result<(S, S), String> {
    let ts = econ.types;
    let i = w.agent.index();
    let truthful = Truthful;
    let mut strategies: Vec<&dyn Strategy> = w
        .opponent_scripts
        .iter()
        .map(|s| s as &dyn Strategy)
        .collect();
    strategies[i] = &truthful;
    let cap = Some(stage_bound(ts) + 1);
    let a = run(ts, &w.draw, &strategies, cap).map_err(|e| e.to_string())?;
    strategies[i] = &w.deviation;
    let b = run(ts, &w.draw, &strategies, cap).map_err(|e| e.to_string())?;
    if a != w.truthful_trace {
        return Err("truthful trace not reproduced".into());
    }
    if b != w.deviation_trace {
        return Err("deviation trace not reproduced".into());
    }
    let tau = w.draw.true_types[i];
    let util = |t: &Trace| -> Result<S, String> {
        let r = tables.transfers(ts, t).map_err(|e| e.to_string())?;
        let v = econ.value(tau, r.outcome).map_err(|e| e.to_string())?;
        Ok(v + r.transfers[i].clone())
    };
    let (ua, ub) = (util(&a)?, util(&b)?);
    if ua != w.truthful_utility || ub != w.deviation_utility {
        return Err("utilities not reproduced".into());
    }
    if ub <= ua {
        return Err("inequality not violated on replay".into());
    }
    Ok((ua, ub))
}
