//! Deterministic pseudorandom scenarios for property sweeps.
//!
//! Types are built from hidden features: every join-irreducible level adds one
//! coordinate, plus a base coordinate visible everywhere. A type at level `ℓ`
//! is the restriction of a top type to the coordinates visible at `ℓ`, so the
//! projection family is surjective and compositional by construction.

use std::fmt;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{AwarenessLattice, Level};
use crate::outcomes::{Outcome, OutcomeSpaces, ValueTable};
use crate::scalar::Scalar;
use crate::scenario::{DrawSpec, Scenario};
use crate::transfers::TransferScheme;
use crate::types::{AgentId, AgentTypesSpec, ProjectionSpec, TypeSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub count: usize,
    pub min_agents: usize,
    pub max_agents: usize,
    /// Largest powerset base.
    pub max_items: usize,
    /// Largest explicit lattice.
    pub max_explicit: usize,
    pub max_types: usize,
    pub max_outcomes: usize,
    /// Values are drawn from `[-value_range, value_range]`.
    pub value_range: i64,
    pub single_level: bool,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            count: 50,
            min_agents: 2,
            max_agents: 3,
            max_items: 2,
            max_explicit: 4,
            max_types: 3,
            max_outcomes: 4,
            value_range: 100,
            single_level: false,
        }
    }
}

impl Bounds {
    /// `"default"` or comma-separated `key=value` overrides, e.g.
    /// `"count=10,agents=2,types=2"`. Keys: count, agents, min-agents, items,
    /// explicit, types, outcomes, values, levels (1 forces single-level).
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut b = Bounds::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "default" {
                continue;
            }
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("`{v}` is not a count"))?;
            match k.trim() {
                "count" => b.count = n,
                "agents" => b.max_agents = n,
                "min-agents" => b.min_agents = n,
                "items" => b.max_items = n,
                "explicit" => b.max_explicit = n,
                "types" => b.max_types = n,
                "outcomes" => b.max_outcomes = n,
                "values" => b.value_range = n as i64,
                "levels" => b.single_level = n == 1,
                other => return Err(format!("unknown bound `{other}`")),
            }
        }
        if b.min_agents == 0 || b.max_agents < b.min_agents {
            return Err("agent bounds must satisfy 1 <= min-agents <= agents".into());
        }
        if b.max_agents > 3
            || b.max_items > 2
            || b.max_explicit > 4
            || b.max_types > 3
            || b.max_outcomes > 4
        {
            return Err("bounds exceed the supported desk scale (agents<=3, items<=2, explicit<=4, types<=3, outcomes<=4)".into());
        }
        if b.max_types == 0 || b.max_outcomes == 0 || b.max_explicit == 0 {
            return Err("types, outcomes and explicit must be positive".into());
        }
        Ok(b)
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "count={},min-agents={},agents={},items={},explicit={},types={},outcomes={},values={},levels={}",
            self.count,
            self.min_agents,
            self.max_agents,
            self.max_items,
            self.max_explicit,
            self.max_types,
            self.max_outcomes,
            self.value_range,
            if self.single_level { 1 } else { 0 }
        )
    }
}

fn pick_lattice(rng: &mut ChaCha8Rng, b: &Bounds) -> (AwarenessLattice, Option<Vec<String>>) {
    if b.single_level {
        return if rng.random_bool(0.5) {
            (
                AwarenessLattice::powerset::<&str>(&[]).expect("one point"),
                Some(Vec::new()),
            )
        } else {
            (
                AwarenessLattice::build(["l0"], &[]).expect("one point"),
                None,
            )
        };
    }
    let mut shapes = Vec::new();
    for k in 0..=b.max_items {
        shapes.push(Shape::Powerset(k));
    }
    for k in 1..=b.max_explicit {
        shapes.push(Shape::Chain(k));
    }
    if b.max_explicit >= 4 {
        shapes.push(Shape::Diamond);
    }
    match shapes[rng.random_range(0..shapes.len())] {
        Shape::Powerset(k) => {
            let items: Vec<String> = ["a", "b"][..k].iter().map(|s| s.to_string()).collect();
            (
                AwarenessLattice::powerset(&items).expect("powerset"),
                Some(items),
            )
        }
        Shape::Chain(k) => {
            let labels: Vec<String> = (0..k).map(|i| format!("l{i}")).collect();
            let order: Vec<(String, String)> = labels
                .windows(2)
                .map(|w| (w[0].clone(), w[1].clone()))
                .collect();
            (
                AwarenessLattice::build(&labels, &order).expect("chain"),
                None,
            )
        }
        Shape::Diamond => {
            let order = [
                ("lo", "left"),
                ("lo", "right"),
                ("left", "hi"),
                ("right", "hi"),
            ]
            .map(|(a, b)| (a.to_string(), b.to_string()));
            (
                AwarenessLattice::build(["lo", "left", "right", "hi"], &order).expect("diamond"),
                None,
            )
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Powerset(usize),
    Chain(usize),
    Diamond,
}

fn join_irreducibles(lat: &AwarenessLattice) -> Vec<Level> {
    lat.levels()
        .filter(|&l| {
            l != lat.bottom() && {
                let below = lat.down_set(l).into_iter().filter(|&m| m != l);
                lat.join_all(below) != l
            }
        })
        .collect()
}

fn one<S: Scalar>(rng: &mut ChaCha8Rng, b: &Bounds, name: String) -> Scenario<S> {
    let (lattice, powerset_items) = pick_lattice(rng, b);
    let lat = Arc::new(lattice);
    let n_agents = rng.random_range(b.min_agents..=b.max_agents);
    let features = join_irreducibles(&lat);
    // coordinate 0 is the base; coordinate k + 1 belongs to features[k]
    let visible = |l: Level| -> Vec<usize> {
        std::iter::once(0)
            .chain(
                features
                    .iter()
                    .enumerate()
                    .filter(|(_, &j)| lat.leq(j, l))
                    .map(|(k, _)| k + 1),
            )
            .collect()
    };

    let mut specs = Vec::new();
    let mut projections = Vec::new();
    for a in 0..n_agents {
        let want = rng.random_range(1..=b.max_types);
        let mut tops: Vec<Vec<u8>> = Vec::new();
        for _ in 0..want * 3 {
            if tops.len() == want {
                break;
            }
            let v: Vec<u8> = (0..=features.len())
                .map(|_| rng.random_range(0..3u8))
                .collect();
            if !tops.contains(&v) {
                tops.push(v);
            }
        }
        let mut types = Vec::new();
        let mut per_level = Vec::new();
        for l in lat.levels() {
            let vis = visible(l);
            let mut distinct: Vec<Vec<u8>> = Vec::new();
            for t in &tops {
                let r: Vec<u8> = vis.iter().map(|&c| t[c]).collect();
                if !distinct.contains(&r) {
                    distinct.push(r);
                }
            }
            for k in 0..distinct.len() {
                types.push((l, format!("{}#{k}", lat.label(l))));
            }
            per_level.push(distinct);
        }
        for (lo, hi) in lat.covering_pairs() {
            let (vis_lo, vis_hi) = (visible(lo), visible(hi));
            let map = per_level[hi.index()]
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let down: Vec<u8> = vis_lo
                        .iter()
                        .map(|c| {
                            r[vis_hi
                                .iter()
                                .position(|x| x == c)
                                .expect("visible below is visible above")]
                        })
                        .collect();
                    let target = per_level[lo.index()]
                        .iter()
                        .position(|x| *x == down)
                        .expect("restriction exists");
                    (
                        format!("{}#{k}", lat.label(hi)),
                        format!("{}#{target}", lat.label(lo)),
                    )
                })
                .collect();
            projections.push(ProjectionSpec {
                agent: AgentId(a as u16),
                from: hi,
                to: lo,
                map,
            });
        }
        specs.push(AgentTypesSpec {
            name: (a + 1).to_string(),
            types,
        });
    }
    let ts = TypeSystem::new(lat.clone(), specs, &projections).expect("generated type system");

    let n_out = rng.random_range(1..=b.max_outcomes);
    let levels: Vec<Level> = lat.levels().collect();
    let mut outcomes = Vec::new();
    let mut per_level = vec![Vec::new(); lat.len()];
    for k in 0..n_out {
        let first = if k == 0 {
            lat.bottom()
        } else {
            levels[rng.random_range(0..levels.len())]
        };
        let requires_agents = if k == 0 {
            Vec::new()
        } else {
            (0..n_agents)
                .filter(|_| rng.random_bool(0.3))
                .map(|a| AgentId(a as u16))
                .collect()
        };
        outcomes.push(Outcome {
            label: format!("x{k}"),
            requires_agents,
        });
        for l in lat.up_set(first) {
            per_level[l.index()].push(k);
        }
    }
    let spaces =
        OutcomeSpaces::new(&lat, outcomes, per_level, n_agents).expect("nested by construction");
    let mut values = ValueTable::empty(&ts, spaces.len());
    for a in ts.agent_ids() {
        for t in ts.all_types(a) {
            for &x in spaces.at(ts.level(t)) {
                values.set(
                    t,
                    x,
                    S::from_i64(rng.random_range(-b.value_range..=b.value_range)),
                );
            }
        }
    }
    let mut s = Scenario::new(
        Some(name),
        ts,
        spaces,
        values,
        DrawSpec::All,
        TransferScheme::default(),
    )
    .expect("generated scenarios validate");
    s.powerset_items = powerset_items;
    s
}

/// `bounds.count` scenarios from `seed`; the same inputs give the same list.
pub fn generate_instances<S: Scalar>(seed: u64, bounds: &Bounds) -> Vec<Scenario<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..bounds.count)
        .map(|k| one(&mut rng, bounds, format!("gen-{seed}-{k}")))
        .collect()
}
