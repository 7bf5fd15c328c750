//! Simulated synchronous message layer and its accounting.
//!
//! A message carries exactly one primal payload: a state iterate `ξ` during
//! the state-consensus rounds, or a half-vectorized `θ` during the
//! covariance step. Dual variables have no payload variant, and the schema
//! check below rejects anything whose shape or tagging is off.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::graph::SensorGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    State,
    Covariance,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::State => "state",
            Phase::Covariance => "covariance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `ξ_{i,t,l}`, `n` scalars.
    State(DVector<f64>),
    /// `θ_{i,t}`, `n(n+1)/2` scalars.
    Covariance(DVector<f64>),
}

impl Payload {
    pub fn phase(&self) -> Phase {
        match self {
            Payload::State(_) => Phase::State,
            Payload::Covariance(_) => Phase::Covariance,
        }
    }

    pub fn values(&self) -> &DVector<f64> {
        match self {
            Payload::State(v) | Payload::Covariance(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub t: usize,
    /// Present for state-phase messages only.
    pub sub_iteration: Option<usize>,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommRecord {
    pub messages: u64,
    pub scalars: u64,
}

/// Per-(step, node, phase) message and scalar counts.
#[derive(Debug, Clone, Default)]
pub struct CommLedger {
    records: BTreeMap<(usize, usize, Phase), CommRecord>,
    schema_violations: u64,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, t: usize, node: usize, phase: Phase, messages: u64, scalars: u64) {
        let r = self.records.entry((t, node, phase)).or_default();
        r.messages += messages;
        r.scalars += scalars;
    }

    pub fn get(&self, t: usize, node: usize, phase: Phase) -> CommRecord {
        self.records.get(&(t, node, phase)).copied().unwrap_or_default()
    }

    /// `((t, node, phase), counts)` in ascending key order.
    pub fn records(&self) -> impl Iterator<Item = (usize, usize, Phase, CommRecord)> + '_ {
        self.records.iter().map(|(&(t, i, p), &r)| (t, i, p, r))
    }

    pub fn totals(&self) -> CommRecord {
        self.records.values().fold(CommRecord::default(), |a, r| CommRecord {
            messages: a.messages + r.messages,
            scalars: a.scalars + r.scalars,
        })
    }

    pub fn phase_totals(&self, phase: Phase) -> CommRecord {
        self.records.iter().filter(|(k, _)| k.2 == phase).fold(CommRecord::default(), |a, (_, r)| CommRecord {
            messages: a.messages + r.messages,
            scalars: a.scalars + r.scalars,
        })
    }

    pub fn schema_violations(&self) -> u64 {
        self.schema_violations
    }
}

/// One synchronous round's mailbox: every node posts one message, then each
/// node reads what its neighbors posted.
#[derive(Debug)]
pub struct Wire {
    state_dim: usize,
    half_vec_len: usize,
    slots: Vec<Option<Message>>,
    ledger: CommLedger,
}

impl Wire {
    pub fn new(n_nodes: usize, state_dim: usize) -> Self {
        Self {
            state_dim,
            half_vec_len: state_dim * (state_dim + 1) / 2,
            slots: vec![None; n_nodes],
            ledger: CommLedger::new(),
        }
    }

    fn validate(&self, msg: &Message) -> std::result::Result<(), String> {
        if msg.sender >= self.slots.len() {
            return Err(format!("unknown sender {}", msg.sender));
        }
        if self.slots[msg.sender].is_some() {
            return Err(format!("node {} already posted this round", msg.sender));
        }
        let (want_len, want_sub) = match msg.payload.phase() {
            Phase::State => (self.state_dim, true),
            Phase::Covariance => (self.half_vec_len, false),
        };
        if msg.payload.values().len() != want_len {
            return Err(format!(
                "{} payload of {} scalars, expected {want_len}",
                msg.payload.phase().as_str(),
                msg.payload.values().len()
            ));
        }
        if msg.sub_iteration.is_some() != want_sub {
            return Err(format!("{} message with sub_iteration {:?}", msg.payload.phase().as_str(), msg.sub_iteration));
        }
        if let Some(other) = self.slots.iter().flatten().next() {
            if other.t != msg.t
                || other.sub_iteration != msg.sub_iteration
                || other.payload.phase() != msg.payload.phase()
            {
                return Err("messages from different rounds mixed on the wire".into());
            }
        }
        Ok(())
    }

    /// Posts `msg` to all of the sender's neighbors and books
    /// `degree(sender)` messages in the ledger.
    pub fn broadcast(&mut self, graph: &SensorGraph, msg: Message) -> Result<()> {
        if let Err(why) = self.validate(&msg) {
            self.ledger.schema_violations += 1;
            return Err(Error::WireSchema(why));
        }
        let deg = graph.degree(msg.sender) as u64;
        let len = msg.payload.values().len() as u64;
        self.ledger.record(msg.t, msg.sender, msg.payload.phase(), deg, deg * len);
        let sender = msg.sender;
        self.slots[sender] = Some(msg);
        Ok(())
    }

    /// Payload node `sender` posted this round.
    pub fn received(&self, sender: usize) -> Option<&DVector<f64>> {
        self.slots[sender].as_ref().map(|m| m.payload.values())
    }

    /// `Σ_{j∈N_i} (own − received_j)`.
    pub fn disagreement(&self, graph: &SensorGraph, i: usize, own: &DVector<f64>) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(own.len());
        for &j in graph.neighbors(i) {
            let other = self
                .received(j)
                .ok_or_else(|| Error::WireSchema(format!("node {i} expected a message from neighbor {j}")))?;
            acc += own - other;
        }
        Ok(acc)
    }

    pub fn end_round(&mut self) {
        self.slots.iter_mut().for_each(|s| *s = None);
    }

    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> CommLedger {
        self.ledger
    }
}
