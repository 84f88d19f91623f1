//! MGM: two synchronous iterations per step. Values are exchanged, every
//! agent reports its best unilateral gain, and only agents whose gain beats
//! all neighbors' gains replace their value.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sync::{beats, expected_messages, Iteration, Mailbox, Role, SyncKind};
use crate::problem::{AgentId, Cost, ProblemInstance, Value};
use crate::sim::{Agent, Ctx, MoveKind, Payload};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MgmMsg {
    Value { step: u64, value: Value },
    Gain { step: u64, gain: Cost },
}

impl Payload for MgmMsg {
    fn kind(&self) -> &'static str {
        match self {
            MgmMsg::Value { .. } => "value",
            MgmMsg::Gain { .. } => "gain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    AwaitValues,
    AwaitGains,
}

pub struct MgmAgent<'a> {
    inst: &'a ProblemInstance,
    id: AgentId,
    value: Value,
    step: u64,
    stage: Stage,
    view: BTreeMap<AgentId, Value>,
    best: (Value, Cost),
    mailbox: Mailbox<MgmMsg>,
}

impl<'a> MgmAgent<'a> {
    pub fn new(inst: &'a ProblemInstance, id: AgentId, mut rng: ChaCha8Rng) -> Self {
        Self {
            inst,
            id,
            value: rng.random_range(0..inst.domain_size(id)),
            step: 1,
            stage: Stage::AwaitValues,
            view: BTreeMap::new(),
            best: (0, 0),
            mailbox: Mailbox::default(),
        }
    }

    pub fn with_value(mut self, value: Value) -> Self {
        self.value = value;
        self
    }

    fn neighbors(&self) -> &'a [AgentId] {
        self.inst.neighbors(self.id)
    }

    fn broadcast(&self, ctx: &mut Ctx<MgmMsg>, msg: MgmMsg) {
        for &k in self.neighbors() {
            ctx.send(k, msg.clone());
        }
    }

    fn advance(&mut self, ctx: &mut Ctx<MgmMsg>) {
        loop {
            match self.stage {
                Stage::AwaitValues => {
                    let need = expected_messages(self.neighbors(), Iteration::Mgm(1), Role::Unpaired);
                    if !self.mailbox.has_all(self.step, &need) {
                        return;
                    }
                    for (k, msg) in self.mailbox.take(self.step, SyncKind::Value) {
                        if let MgmMsg::Value { value, .. } = msg {
                            self.view.insert(k, value);
                        }
                    }
                    self.best = self
                        .inst
                        .best_unilateral(self.id, self.value, &self.view)
                        .expect("complete neighbor view");
                    ctx.charge(self.inst.unilateral_checks(self.id));
                    self.broadcast(
                        ctx,
                        MgmMsg::Gain {
                            step: self.step,
                            gain: self.best.1,
                        },
                    );
                    self.stage = Stage::AwaitGains;
                }
                Stage::AwaitGains => {
                    let need = expected_messages(self.neighbors(), Iteration::Mgm(2), Role::Unpaired);
                    if !self.mailbox.has_all(self.step, &need) {
                        return;
                    }
                    let gains = self.mailbox.take(self.step, SyncKind::Gain);
                    let gain = self.best.1;
                    let wins = gains.iter().all(|(&k, msg)| match msg {
                        MgmMsg::Gain { gain: g, .. } => beats(gain, self.id, *g, k),
                        MgmMsg::Value { .. } => unreachable!(),
                    });
                    if gain > 0 && wins {
                        self.value = self.best.0;
                        ctx.select(MoveKind::Unilateral, self.step, self.value, gain);
                    }
                    self.step += 1;
                    self.stage = Stage::AwaitValues;
                    self.broadcast(
                        ctx,
                        MgmMsg::Value {
                            step: self.step,
                            value: self.value,
                        },
                    );
                }
            }
        }
    }
}

impl Agent for MgmAgent<'_> {
    type Msg = MgmMsg;

    fn value(&self) -> Value {
        self.value
    }

    fn progress(&self) -> u64 {
        self.step - 1
    }

    fn is_waiting(&self) -> bool {
        !self.neighbors().is_empty()
    }

    fn on_start(&mut self, ctx: &mut Ctx<MgmMsg>) {
        if self.neighbors().is_empty() {
            return;
        }
        self.broadcast(
            ctx,
            MgmMsg::Value {
                step: 1,
                value: self.value,
            },
        );
    }

    fn on_message(&mut self, from: AgentId, msg: MgmMsg, ctx: &mut Ctx<MgmMsg>) {
        let (step, kind) = match msg {
            MgmMsg::Value { step, .. } => (step, SyncKind::Value),
            MgmMsg::Gain { step, .. } => (step, SyncKind::Gain),
        };
        debug_assert!(step >= self.step, "message from a finished step");
        self.mailbox.put(step, kind, from, msg);
        self.advance(ctx);
    }
}
