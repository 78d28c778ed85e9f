//! The embedded discrete-time default cascade.
//!
//! Each step reveals one hidden out-link of the default set. Its target is a
//! uniformly chosen unrevealed in-stub. The target's revealed-loss count `l`
//! goes up by one; if it was one loss from default and the policy says so, its
//! buffer `c` goes up by one too. It defaults when `c <= l`, and its out-links
//! join the hidden pool. The cascade stops when the pool is empty.

mod exact;
mod policy;

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::network::{NodePopulation, StubPool};

pub use exact::{exact_expectation, Expectation};
pub use policy::{InterventionPolicy, ThresholdTable};

/// `(i, j, c, l)` for a surviving initially vulnerable node.
pub type StateIndex = (u32, u32, u32, u32);

/// Number of surviving initially vulnerable nodes per state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateAggregate {
    pub counts: BTreeMap<StateIndex, u64>,
}

impl StateAggregate {
    pub fn get(&self, s: StateIndex) -> u64 {
        self.counts.get(&s).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub k: u64,
    pub defaults: u64,
    pub interventions: u64,
    pub hidden: u64,
}

/// What one call to [`ContagionState::step`] did to the selected node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepEvent {
    pub node: usize,
    pub intervened: bool,
    pub defaulted: bool,
}

#[derive(Debug, Clone)]
pub struct ContagionState<'a> {
    pop: &'a NodePopulation,
    equity: Vec<u32>,
    revealed: Vec<u32>,
    defaulted: Vec<bool>,
    pool: StubPool,
    hidden: u64,
    k: u64,
    interventions: u64,
    defaults: u64,
    initial_defaults: u64,
}

impl<'a> ContagionState<'a> {
    /// Time-zero state: nodes with zero equity are in default.
    pub fn new(pop: &'a NodePopulation) -> Self {
        let equity: Vec<u32> = pop.nodes().iter().map(|v| v.equity).collect();
        let defaulted: Vec<bool> = equity.iter().map(|&c| c == 0).collect();
        let hidden = pop.nodes().iter().filter(|v| v.equity == 0).map(|v| v.out_degree as u64).sum();
        let defaults = defaulted.iter().filter(|&&d| d).count() as u64;
        Self {
            pop,
            equity,
            revealed: vec![0; pop.n()],
            defaulted,
            pool: StubPool::new(pop),
            hidden,
            k: 0,
            interventions: 0,
            defaults,
            initial_defaults: defaults,
        }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn hidden(&self) -> u64 {
        self.hidden
    }

    pub fn interventions(&self) -> u64 {
        self.interventions
    }

    pub fn defaults(&self) -> u64 {
        self.defaults
    }

    pub fn initial_defaults(&self) -> u64 {
        self.initial_defaults
    }

    pub fn equity(&self, v: usize) -> u32 {
        self.equity[v]
    }

    pub fn revealed(&self, v: usize) -> u32 {
        self.revealed[v]
    }

    pub fn is_defaulted(&self, v: usize) -> bool {
        self.defaulted[v]
    }

    pub fn is_finished(&self) -> bool {
        self.hidden == 0
    }

    /// Hidden out-links counted from scratch: out-degree of the default set
    /// minus links revealed so far.
    pub fn recount_hidden(&self) -> i64 {
        let out: u64 = self
            .pop
            .nodes()
            .iter()
            .zip(&self.defaulted)
            .filter(|(_, &d)| d)
            .map(|(v, _)| v.out_degree as u64)
            .sum();
        out as i64 - self.k as i64
    }

    pub fn aggregate(&self) -> StateAggregate {
        let mut counts = BTreeMap::new();
        for (v, node) in self.pop.nodes().iter().enumerate() {
            if node.is_vulnerable() && !self.defaulted[v] {
                let key = (node.in_degree, node.out_degree, self.equity[v], self.revealed[v]);
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        StateAggregate { counts }
    }

    /// Reveals one hidden link.
    pub fn step<R: Rng + ?Sized>(&mut self, policy: &InterventionPolicy, rng: &mut R) -> Result<StepEvent> {
        if self.hidden == 0 {
            return Err(Error::Logic("step called on a finished cascade".into()));
        }
        let w = self.pool.draw(rng)?;
        Ok(self.reveal(w, policy))
    }

    /// Applies one revelation whose target is already chosen; the caller
    /// must have consumed the in-stub.
    fn reveal(&mut self, w: usize, policy: &InterventionPolicy) -> StepEvent {
        let node = self.pop.nodes()[w];
        let before = self.revealed[w];
        self.revealed[w] += 1;
        let mut event = StepEvent { node: w, intervened: false, defaulted: false };
        if !self.defaulted[w] {
            let c = self.equity[w];
            // Invulnerable nodes never reach distance one: c > i >= l + 1.
            if c == before + 1 && policy.intervene(self.k, self.pop.n(), node.in_degree, node.out_degree, c) {
                self.equity[w] += 1;
                self.interventions += 1;
                event.intervened = true;
            }
            if self.equity[w] <= self.revealed[w] {
                self.defaulted[w] = true;
                self.defaults += 1;
                self.hidden += node.out_degree as u64;
                event.defaulted = true;
            }
        }
        self.hidden -= 1;
        self.k += 1;
        event
    }
}

/// Extra outputs of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Scaled times `τ`; the state is recorded after step `⌊τ·n⌋`.
    pub snapshot_times: Vec<f64>,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub n: usize,
    pub m: u64,
    pub steps: u64,
    pub interventions: u64,
    pub defaults: u64,
    pub initial_defaults: u64,
    /// `(τ, S)` for each requested time reached before termination.
    pub snapshots: Vec<(f64, StateAggregate)>,
    pub trace: Vec<TraceRow>,
}

impl RunOutcome {
    pub fn default_fraction(&self) -> f64 {
        self.defaults as f64 / self.n as f64
    }

    pub fn intervention_fraction(&self) -> f64 {
        self.interventions as f64 / self.n as f64
    }

    /// `T / m`, zero for a network without links.
    pub fn time_fraction(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.steps as f64 / self.m as f64
        }
    }

    pub fn objective(&self, cost: f64) -> f64 {
        cost * self.intervention_fraction() + self.default_fraction()
    }
}

pub fn run<R: Rng + ?Sized>(pop: &NodePopulation, policy: &InterventionPolicy, rng: &mut R) -> RunOutcome {
    run_with(pop, policy, rng, &RunOptions::default())
}

pub fn run_with<R: Rng + ?Sized>(
    pop: &NodePopulation,
    policy: &InterventionPolicy,
    rng: &mut R,
    options: &RunOptions,
) -> RunOutcome {
    let mut state = ContagionState::new(pop);
    let mut marks: Vec<(u64, f64)> =
        options.snapshot_times.iter().map(|&tau| ((tau * pop.n() as f64).floor() as u64, tau)).collect();
    marks.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut next_mark = 0;
    let mut snapshots = Vec::new();
    let mut trace = Vec::new();
    let row = |s: &ContagionState| TraceRow {
        k: s.k,
        defaults: s.defaults,
        interventions: s.interventions,
        hidden: s.hidden,
    };
    loop {
        while next_mark < marks.len() && marks[next_mark].0 == state.k {
            snapshots.push((marks[next_mark].1, state.aggregate()));
            next_mark += 1;
        }
        if options.trace {
            trace.push(row(&state));
        }
        if state.is_finished() {
            break;
        }
        state.step(policy, rng).expect("hidden links imply available in-stubs");
    }
    RunOutcome {
        n: pop.n(),
        m: pop.m(),
        steps: state.k,
        interventions: state.interventions,
        defaults: state.defaults,
        initial_defaults: state.initial_defaults,
        snapshots,
        trace,
    }
}

/// Writes a trace as CSV with header `k,D,IT,D_minus`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> Result<()> {
    writeln!(out, "k,D,IT,D_minus")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.k, r.defaults, r.interventions, r.hidden)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::EmpiricalCounts;
    use crate::network::Node;
    use crate::rng::stream;

    fn pop(counts: &[((u32, u32, u32), u64)]) -> NodePopulation {
        NodePopulation::instantiate(&EmpiricalCounts::from_counts(counts.iter().copied()).unwrap()).unwrap()
    }

    #[test]
    fn no_initial_defaults_means_nothing_happens() {
        let p = pop(&[((2, 2, 1), 5)]);
        let out = run(&p, &InterventionPolicy::None, &mut stream(3));
        assert_eq!((out.steps, out.defaults, out.interventions), (0, 0, 0));
        let mut s = ContagionState::new(&p);
        assert!(s.step(&InterventionPolicy::None, &mut stream(3)).is_err());
    }

    #[test]
    fn hit_on_defaulted_or_invulnerable_node_changes_nothing_else() {
        // Node 0 defaulted with a self-loop-capable stub; node 1 invulnerable.
        let p = NodePopulation::from_nodes(vec![
            Node { in_degree: 1, out_degree: 2, equity: 0 },
            Node { in_degree: 1, out_degree: 0, equity: 5 },
        ])
        .unwrap();
        for seed in 0..20 {
            let mut s = ContagionState::new(&p);
            let before = s.aggregate();
            let ev = s.step(&InterventionPolicy::Complete, &mut stream(seed)).unwrap();
            assert!(!ev.intervened && !ev.defaulted);
            assert_eq!(s.aggregate(), before);
            assert_eq!(s.k(), 1);
        }
    }

    #[test]
    fn distance_two_hit_only_reveals() {
        let p = NodePopulation::from_nodes(vec![
            Node { in_degree: 0, out_degree: 1, equity: 0 },
            Node { in_degree: 2, out_degree: 1, equity: 2 },
        ])
        .unwrap();
        let mut s = ContagionState::new(&p);
        let ev = s.step(&InterventionPolicy::Complete, &mut stream(0)).unwrap();
        assert_eq!(ev.node, 1);
        assert!(!ev.intervened);
        assert_eq!(s.aggregate().get((2, 1, 2, 1)), 1);
    }

    #[test]
    fn intervention_at_full_buffer_makes_node_invulnerable() {
        // (2,2,2,1) hit under intervention becomes (2,2,3,2).
        let p = NodePopulation::from_nodes(vec![
            Node { in_degree: 0, out_degree: 2, equity: 0 },
            Node { in_degree: 2, out_degree: 0, equity: 2 },
        ])
        .unwrap();
        let out = run(&p, &InterventionPolicy::Complete, &mut stream(0));
        assert_eq!((out.steps, out.interventions, out.defaults), (2, 1, 1));
        let mut s = ContagionState::new(&p);
        s.step(&InterventionPolicy::Complete, &mut stream(0)).unwrap();
        s.step(&InterventionPolicy::Complete, &mut stream(0)).unwrap();
        assert_eq!(s.aggregate().get((2, 0, 3, 2)), 1);
        let out = run(&p, &InterventionPolicy::None, &mut stream(0));
        assert_eq!((out.steps, out.interventions, out.defaults), (2, 0, 2));
    }

    #[test]
    fn complete_policy_stops_all_new_defaults() {
        let p = pop(&[((2, 2, 0), 20), ((2, 2, 1), 30), ((2, 2, 2), 50), ((3, 3, 1), 10)]);
        for seed in 0..50 {
            let out = run(&p, &InterventionPolicy::Complete, &mut stream(seed));
            assert_eq!(out.defaults, out.initial_defaults);
            assert_eq!(out.steps, 40);
        }
    }

    #[test]
    fn incremental_counters_match_recount() {
        let p = pop(&[((1, 1, 0), 4), ((2, 2, 1), 10), ((3, 3, 2), 6), ((2, 2, 3), 3)]);
        let vulnerable = p.nodes().iter().filter(|v| v.is_vulnerable()).count() as u64;
        for seed in 0..30 {
            let mut s = ContagionState::new(&p);
            let policy = if seed % 2 == 0 { InterventionPolicy::None } else { InterventionPolicy::Complete };
            let mut prev = (0, 0);
            while !s.is_finished() {
                s.step(&policy, &mut stream(seed)).unwrap();
                assert_eq!(s.recount_hidden(), s.hidden() as i64);
                let vulnerable_defaults = (0..p.n())
                    .filter(|&v| p.nodes()[v].is_vulnerable() && s.is_defaulted(v))
                    .count() as u64;
                assert_eq!(s.aggregate().total() + vulnerable_defaults, vulnerable);
                assert!(s.interventions() <= s.k());
                assert!(s.defaults() >= prev.0 && s.interventions() >= prev.1);
                prev = (s.defaults(), s.interventions());
                let revealed: u64 = (0..p.n()).map(|v| s.revealed(v) as u64).sum();
                assert_eq!(revealed, s.k());
                for v in 0..p.n() {
                    let node = p.nodes()[v];
                    assert!(s.revealed(v) <= node.in_degree);
                    if node.is_vulnerable() {
                        assert_eq!(s.is_defaulted(v), s.equity(v) <= s.revealed(v));
                    }
                }
            }
            assert!(s.k() <= p.m());
        }
    }

    #[test]
    fn snapshots_and_trace() {
        let p = pop(&[((2, 2, 0), 20), ((2, 2, 2), 80)]);
        let opts = RunOptions { snapshot_times: vec![0.0, 0.1, 0.3], trace: true };
        let out = run_with(&p, &InterventionPolicy::None, &mut stream(5), &opts);
        assert_eq!(out.snapshots[0].1.get((2, 2, 2, 0)), 80);
        assert_eq!(out.trace.len() as u64, out.steps + 1);
        assert_eq!(out.trace.last().unwrap().hidden, 0);
        let mut buf = Vec::new();
        write_trace_csv(&out.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,D,IT,D_minus\n0,20,0,40\n"));
    }

    #[test]
    fn same_seed_same_outcome() {
        let p = pop(&[((2, 2, 0), 20), ((2, 2, 2), 80)]);
        let a = run(&p, &InterventionPolicy::None, &mut stream(9));
        let b = run(&p, &InterventionPolicy::None, &mut stream(9));
        assert_eq!(a, b);
    }
}
