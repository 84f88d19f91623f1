//! MGM-2: five synchronous iterations per step.
//!
//! 1. After all neighbor values arrive, each agent becomes an offerer with
//!    probability `q` and sends its local view to one random neighbor;
//!    everyone else gets a no-offer notice.
//! 2. Non-offerers accept the offer with the best positive bilateral gain
//!    and reject the rest; offerers reject every offer they got.
//! 3. Paired agents hold the agreed joint move, unpaired agents compute their
//!    best unilateral move.
//! 4. Everyone broadcasts its gain (the pair's gain for paired agents).
//! 5. Unpaired agents move if they beat all neighbors. Paired agents tell
//!    their partner whether the pair gain beats all of their own outside
//!    neighbors, and the pair moves only if both approve.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sync::{beats, expected_messages, Iteration, Mailbox, Role, SyncKind};
use crate::problem::{AgentId, Cost, Overlay, ProblemInstance, Value};
use crate::sim::{Agent, Ctx, MoveKind, Note, Payload};

#[derive(Debug, Clone, PartialEq)]
pub struct Mgm2Params {
    /// Probability of becoming an offerer in a step.
    pub q: f64,
    /// Forced offer decisions, `(step, agent) -> target`; `None` forces a
    /// non-offer. Unlisted decisions are drawn at random.
    pub script: BTreeMap<(u64, AgentId), Option<AgentId>>,
}

impl Default for Mgm2Params {
    fn default() -> Self {
        Self {
            q: 0.5,
            script: BTreeMap::new(),
        }
    }
}

/// Offerer's local view, enough for the receiver to evaluate joint moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfferInfo {
    pub value: Value,
    pub domain_size: usize,
    pub neighbor_values: BTreeMap<AgentId, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mgm2Msg {
    Value { step: u64, value: Value },
    Offer { step: u64, offer: Option<OfferInfo> },
    Accept { step: u64, offerer_value: Value, receiver_value: Value, gain: Cost },
    Reject { step: u64 },
    Gain { step: u64, gain: Cost },
    Approval { step: u64, approve: bool },
}

impl Mgm2Msg {
    fn slot(&self) -> (u64, SyncKind) {
        match *self {
            Mgm2Msg::Value { step, .. } => (step, SyncKind::Value),
            Mgm2Msg::Offer { step, .. } => (step, SyncKind::Offer),
            Mgm2Msg::Accept { step, .. } | Mgm2Msg::Reject { step } => (step, SyncKind::Response),
            Mgm2Msg::Gain { step, .. } => (step, SyncKind::Gain),
            Mgm2Msg::Approval { step, .. } => (step, SyncKind::Approval),
        }
    }
}

impl Payload for Mgm2Msg {
    fn kind(&self) -> &'static str {
        match self {
            Mgm2Msg::Value { .. } => "value",
            Mgm2Msg::Offer { offer: Some(_), .. } => "offer",
            Mgm2Msg::Offer { offer: None, .. } => "no-offer",
            Mgm2Msg::Accept { .. } => "accept",
            Mgm2Msg::Reject { .. } => "reject",
            Mgm2Msg::Gain { .. } => "gain",
            Mgm2Msg::Approval { approve: true, .. } => "approve",
            Mgm2Msg::Approval { approve: false, .. } => "disapprove",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    AwaitValues,
    AwaitOffers,
    AwaitResponse,
    Evaluate,
    AwaitGains,
    AwaitApproval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Plan {
    mine: Value,
    partner: Option<(AgentId, Value)>,
    gain: Cost,
}

pub struct Mgm2Agent<'a> {
    inst: &'a ProblemInstance,
    params: &'a Mgm2Params,
    id: AgentId,
    rng: ChaCha8Rng,
    value: Value,
    step: u64,
    stage: Stage,
    role: Role,
    view: BTreeMap<AgentId, Value>,
    plan: Plan,
    approve: bool,
    mailbox: Mailbox<Mgm2Msg>,
}

impl<'a> Mgm2Agent<'a> {
    pub fn new(
        inst: &'a ProblemInstance,
        params: &'a Mgm2Params,
        id: AgentId,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let value = rng.random_range(0..inst.domain_size(id));
        Self {
            inst,
            params,
            id,
            rng,
            value,
            step: 1,
            stage: Stage::AwaitValues,
            role: Role::Unpaired,
            view: BTreeMap::new(),
            plan: Plan {
                mine: value,
                partner: None,
                gain: 0,
            },
            approve: false,
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

    fn ready(&self, iteration: u8) -> bool {
        let need = expected_messages(self.neighbors(), Iteration::Mgm2(iteration), self.role);
        self.mailbox.has_all(self.step, &need)
    }

    fn broadcast(&self, ctx: &mut Ctx<Mgm2Msg>, msg: Mgm2Msg) {
        for &k in self.neighbors() {
            ctx.send(k, msg.clone());
        }
    }

    fn offer_target(&mut self) -> Option<AgentId> {
        if let Some(&forced) = self.params.script.get(&(self.step, self.id)) {
            return forced;
        }
        let nb = self.neighbors();
        if self.rng.random_bool(self.params.q) {
            Some(nb[self.rng.random_range(0..nb.len())])
        } else {
            None
        }
    }

    fn send_offers(&mut self, ctx: &mut Ctx<Mgm2Msg>) {
        let step = self.step;
        let target = self.offer_target();
        for &k in self.neighbors() {
            let offer = (Some(k) == target).then(|| OfferInfo {
                value: self.value,
                domain_size: self.inst.domain_size(self.id),
                neighbor_values: self.view.clone(),
            });
            ctx.send(k, Mgm2Msg::Offer { step, offer });
        }
        if let Some(t) = target {
            ctx.charge(self.neighbors().len() as u64);
            ctx.note(Note::Offer { step, to: t });
            self.role = Role::Offerer { target: t };
        } else {
            self.role = Role::Unpaired;
        }
    }

    fn answer_offers(&mut self, ctx: &mut Ctx<Mgm2Msg>) {
        let step = self.step;
        let offers: BTreeMap<AgentId, OfferInfo> = self
            .mailbox
            .take(step, SyncKind::Offer)
            .into_iter()
            .filter_map(|(k, m)| match m {
                Mgm2Msg::Offer { offer: Some(info), .. } => Some((k, info)),
                _ => None,
            })
            .collect();
        let mut best: Option<(AgentId, Value, Value, Cost)> = None;
        if self.role == Role::Unpaired {
            for (&k, info) in &offers {
                let outside = Overlay {
                    primary: &self.view,
                    fallback: &info.neighbor_values,
                };
                let (mine, theirs, gain) = self
                    .inst
                    .best_bilateral(self.id, k, self.value, info.value, &outside)
                    .expect("offer comes from a neighbor");
                ctx.charge(self.inst.bilateral_checks(self.id, k));
                if gain > 0 && best.is_none_or(|b| gain > b.3) {
                    best = Some((k, mine, theirs, gain));
                }
            }
        }
        for &k in offers.keys() {
            match best {
                Some((p, mine, theirs, gain)) if p == k => ctx.send(
                    k,
                    Mgm2Msg::Accept {
                        step,
                        offerer_value: theirs,
                        receiver_value: mine,
                        gain,
                    },
                ),
                _ => ctx.send(k, Mgm2Msg::Reject { step }),
            }
        }
        if let Some((p, mine, theirs, gain)) = best {
            self.role = Role::Paired { partner: p };
            self.plan = Plan {
                mine,
                partner: Some((p, theirs)),
                gain,
            };
            ctx.note(Note::Paired {
                step,
                offerer: p,
                receiver: self.id,
            });
        }
    }

    fn end_step(&mut self, ctx: &mut Ctx<Mgm2Msg>) {
        self.step += 1;
        self.stage = Stage::AwaitValues;
        self.role = Role::Unpaired;
        self.broadcast(
            ctx,
            Mgm2Msg::Value {
                step: self.step,
                value: self.value,
            },
        );
    }

    fn advance(&mut self, ctx: &mut Ctx<Mgm2Msg>) {
        loop {
            let step = self.step;
            match self.stage {
                Stage::AwaitValues => {
                    if !self.ready(1) {
                        return;
                    }
                    for (k, m) in self.mailbox.take(step, SyncKind::Value) {
                        if let Mgm2Msg::Value { value, .. } = m {
                            self.view.insert(k, value);
                        }
                    }
                    self.send_offers(ctx);
                    self.stage = Stage::AwaitOffers;
                }
                Stage::AwaitOffers => {
                    if !self.ready(2) {
                        return;
                    }
                    self.answer_offers(ctx);
                    self.stage = match self.role {
                        Role::Offerer { .. } => Stage::AwaitResponse,
                        _ => Stage::Evaluate,
                    };
                }
                Stage::AwaitResponse => {
                    if !self.ready(3) {
                        return;
                    }
                    let Role::Offerer { target } = self.role else {
                        unreachable!()
                    };
                    let mut resp = self.mailbox.take(step, SyncKind::Response);
                    match resp.remove(&target) {
                        Some(Mgm2Msg::Accept {
                            offerer_value,
                            receiver_value,
                            gain,
                            ..
                        }) => {
                            self.role = Role::Paired { partner: target };
                            self.plan = Plan {
                                mine: offerer_value,
                                partner: Some((target, receiver_value)),
                                gain,
                            };
                        }
                        _ => self.role = Role::Unpaired,
                    }
                    self.stage = Stage::Evaluate;
                }
                Stage::Evaluate => {
                    if self.role == Role::Unpaired {
                        let (v, g) = self
                            .inst
                            .best_unilateral(self.id, self.value, &self.view)
                            .expect("complete neighbor view");
                        ctx.charge(self.inst.unilateral_checks(self.id));
                        self.plan = Plan {
                            mine: v,
                            partner: None,
                            gain: g,
                        };
                    }
                    self.broadcast(
                        ctx,
                        Mgm2Msg::Gain {
                            step,
                            gain: self.plan.gain,
                        },
                    );
                    self.stage = Stage::AwaitGains;
                }
                Stage::AwaitGains => {
                    if !self.ready(4) {
                        return;
                    }
                    let gains: BTreeMap<AgentId, Cost> = self
                        .mailbox
                        .take(step, SyncKind::Gain)
                        .into_iter()
                        .map(|(k, m)| match m {
                            Mgm2Msg::Gain { gain, .. } => (k, gain),
                            _ => unreachable!(),
                        })
                        .collect();
                    let gain = self.plan.gain;
                    let partner = self.plan.partner.map(|p| p.0);
                    let wins = gains
                        .iter()
                        .filter(|(&k, _)| Some(k) != partner)
                        .all(|(&k, &g)| beats(gain, self.id, g, k));
                    match self.role {
                        Role::Paired { partner } => {
                            self.approve = gain > 0 && wins;
                            ctx.send(
                                partner,
                                Mgm2Msg::Approval {
                                    step,
                                    approve: self.approve,
                                },
                            );
                            self.stage = Stage::AwaitApproval;
                        }
                        _ => {
                            if gain > 0 && wins {
                                self.value = self.plan.mine;
                                ctx.select(MoveKind::Unilateral, step, self.value, gain);
                            }
                            self.end_step(ctx);
                        }
                    }
                }
                Stage::AwaitApproval => {
                    if !self.ready(5) {
                        return;
                    }
                    let Role::Paired { partner } = self.role else {
                        unreachable!()
                    };
                    let theirs = match self.mailbox.take(step, SyncKind::Approval).remove(&partner) {
                        Some(Mgm2Msg::Approval { approve, .. }) => approve,
                        _ => unreachable!(),
                    };
                    if self.approve && theirs {
                        let (p, pv) = self.plan.partner.expect("paired plan");
                        self.value = self.plan.mine;
                        ctx.select_pair(step, self.value, p, pv, self.plan.gain);
                    }
                    self.end_step(ctx);
                }
            }
        }
    }
}

impl Agent for Mgm2Agent<'_> {
    type Msg = Mgm2Msg;

    fn value(&self) -> Value {
        self.value
    }

    fn progress(&self) -> u64 {
        self.step - 1
    }

    fn is_waiting(&self) -> bool {
        !self.neighbors().is_empty()
    }

    fn on_start(&mut self, ctx: &mut Ctx<Mgm2Msg>) {
        if self.neighbors().is_empty() {
            return;
        }
        self.broadcast(
            ctx,
            Mgm2Msg::Value {
                step: 1,
                value: self.value,
            },
        );
    }

    fn on_message(&mut self, from: AgentId, msg: Mgm2Msg, ctx: &mut Ctx<Mgm2Msg>) {
        let (step, kind) = msg.slot();
        debug_assert!(step >= self.step, "message from a finished step");
        self.mailbox.put(step, kind, from, msg);
        self.advance(ctx);
    }
}
