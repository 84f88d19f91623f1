//! LAMDLS-2: alternating ordering phases (DOCS coloring on random docsIds)
//! and pair-selection phases, driven entirely by message arrivals.
//!
//! Every message carries the sender's step counter. Messages that belong to
//! a later phase are parked in `pending` and replayed after each state
//! change, so arbitrary reordering by the network is tolerated.

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::problem::{AgentId, Cost, Overlay, ProblemInstance, Value};
use crate::sim::{Agent, Ctx, MoveKind, Note, Payload};

#[derive(Debug, Clone, PartialEq)]
pub struct Lamdls2Params {
    /// Let agents pick a value while choosing their color.
    pub docs_value_selection: bool,
    /// Forced docsIds, `(step, agent) -> id`. Step 1 defaults to the agent
    /// index, later steps to a uniform draw in (0, 1).
    pub docs_script: BTreeMap<(u64, AgentId), f64>,
}

impl Default for Lamdls2Params {
    fn default() -> Self {
        Self {
            docs_value_selection: true,
            docs_script: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfferPayload {
    pub value: Value,
    pub domain_size: usize,
    pub neighbor_values: BTreeMap<AgentId, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LamdlsMsg {
    DocsId { sc: u64, docs_id: f64, value: Value },
    Color { sc: u64, color: u32, value: Value },
    /// Sent after a value selection; `sc` is the sender's new counter.
    Value { sc: u64, value: Value },
    Offer { sc: u64, offer: OfferPayload },
    /// Answer to an accepted offer, sent instead of a value message.
    Reply { sc: u64, your_value: Value, my_value: Value, gain: Cost },
}

impl Payload for LamdlsMsg {
    fn kind(&self) -> &'static str {
        match self {
            LamdlsMsg::DocsId { .. } => "docsid",
            LamdlsMsg::Color { .. } => "color",
            LamdlsMsg::Value { .. } => "value",
            LamdlsMsg::Offer { .. } => "offer",
            LamdlsMsg::Reply { .. } => "reply",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    AwaitDocs,
    Ordering,
    Pairing,
    /// Isolated agents stop after their first selection.
    Done,
}

/// Total order on docsIds: ties go to the smaller agent id.
fn precedes(a: (f64, AgentId), b: (f64, AgentId)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

pub struct Lamdls2Agent<'a> {
    inst: &'a ProblemInstance,
    params: &'a Lamdls2Params,
    id: AgentId,
    rng: ChaCha8Rng,
    value: Value,
    sc: u64,
    phase: Phase,
    docs_id: f64,
    nb_docs: Vec<Option<f64>>,
    color: Option<u32>,
    nb_colors: Vec<Option<u32>>,
    /// Last known step counter of each neighbor.
    v: Vec<u64>,
    view: BTreeMap<AgentId, Value>,
    /// Freshness of each `view` entry: `(sc, rank within the step)`.
    version: Vec<(u64, u8)>,
    sn: Option<AgentId>,
    offers: BTreeMap<AgentId, OfferPayload>,
    pending: Vec<(AgentId, LamdlsMsg)>,
}

impl<'a> Lamdls2Agent<'a> {
    pub fn new(
        inst: &'a ProblemInstance,
        params: &'a Lamdls2Params,
        id: AgentId,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let value = rng.random_range(0..inst.domain_size(id));
        let deg = inst.degree(id);
        Self {
            inst,
            params,
            id,
            rng,
            value,
            sc: 1,
            phase: Phase::Ordering,
            docs_id: 0.0,
            nb_docs: vec![None; deg],
            color: None,
            nb_colors: vec![None; deg],
            v: vec![1; deg],
            view: BTreeMap::new(),
            version: vec![(0, 0); deg],
            sn: None,
            offers: BTreeMap::new(),
            pending: Vec::new(),
        }
    }

    pub fn with_value(mut self, value: Value) -> Self {
        self.value = value;
        self
    }

    fn neighbors(&self) -> &'a [AgentId] {
        self.inst.neighbors(self.id)
    }

    fn pos(&self, j: AgentId) -> usize {
        self.neighbors()
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("{j} is not a neighbor of {}", self.id))
    }

    fn key(&self) -> (f64, AgentId) {
        (self.docs_id, self.id)
    }

    fn nb_key(&self, p: usize) -> (f64, AgentId) {
        (self.nb_docs[p].expect("docsId known"), self.neighbors()[p])
    }

    fn draw_docs_id(&mut self) -> f64 {
        if let Some(&forced) = self.params.docs_script.get(&(self.sc, self.id)) {
            return forced;
        }
        if self.sc == 1 {
            self.id as f64
        } else {
            self.rng.sample(Open01)
        }
    }

    fn learn(&mut self, j: AgentId, value: Value, version: (u64, u8)) {
        let p = self.pos(j);
        self.v[p] = self.v[p].max(version.0);
        if version > self.version[p] || !self.view.contains_key(&j) {
            self.version[p] = version;
            self.view.insert(j, value);
        }
    }

    fn broadcast(&self, ctx: &mut Ctx<LamdlsMsg>, msg: LamdlsMsg, skip: Option<AgentId>) {
        for &k in self.neighbors() {
            if Some(k) != skip {
                ctx.send(k, msg.clone());
            }
        }
    }

    fn consumable(&self, msg: &LamdlsMsg) -> bool {
        match *msg {
            LamdlsMsg::DocsId { sc, .. } => self.phase == Phase::AwaitDocs && sc == self.sc,
            LamdlsMsg::Color { sc, .. } => self.phase == Phase::Ordering && sc == self.sc,
            LamdlsMsg::Value { .. } => true,
            LamdlsMsg::Offer { sc, .. } | LamdlsMsg::Reply { sc, .. } => {
                self.phase == Phase::Pairing && sc == self.sc
            }
        }
    }

    fn handle(&mut self, from: AgentId, msg: LamdlsMsg, ctx: &mut Ctx<LamdlsMsg>) {
        match msg {
            LamdlsMsg::DocsId { sc, docs_id, value } => {
                let p = self.pos(from);
                self.nb_docs[p] = Some(docs_id);
                self.learn(from, value, (sc, 0));
                if self.nb_docs.iter().all(Option::is_some) {
                    self.start_ordering(ctx);
                }
            }
            LamdlsMsg::Color { sc, color, value } => {
                let p = self.pos(from);
                self.nb_colors[p] = Some(color);
                self.learn(from, value, (sc, 1));
                self.ordering_check(ctx);
            }
            LamdlsMsg::Value { sc, value } => {
                self.learn(from, value, (sc, 0));
                if self.phase != Phase::Pairing {
                    return;
                }
                if self.sn == Some(from) && sc == self.sc + 1 {
                    // the selected neighbor paired with someone else
                    self.select_unilaterally(ctx);
                } else {
                    self.pair_check(ctx);
                }
            }
            LamdlsMsg::Offer { sc, offer } => {
                debug_assert!(self.sn.is_none(), "offer received while offering");
                self.learn(from, offer.value, (sc, 1));
                self.offers.insert(from, offer);
                self.pair_check(ctx);
            }
            LamdlsMsg::Reply {
                sc,
                your_value,
                my_value,
                gain,
            } => {
                assert_eq!(self.sn, Some(from), "reply from a neighbor that got no offer");
                self.learn(from, my_value, (sc + 1, 0));
                self.value = your_value;
                ctx.select_pair(sc, your_value, from, my_value, gain);
                self.complete_step(ctx, None);
            }
        }
    }

    fn start_ordering(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        self.phase = Phase::Ordering;
        self.color = None;
        self.nb_colors.iter_mut().for_each(|c| *c = None);
        let me = self.key();
        if (0..self.nb_docs.len()).all(|p| precedes(me, self.nb_key(p))) {
            self.set_color(1, false, ctx);
        }
        self.ordering_check(ctx);
    }

    fn set_color(&mut self, color: u32, select: bool, ctx: &mut Ctx<LamdlsMsg>) {
        self.color = Some(color);
        ctx.note(Note::Color {
            step: self.sc,
            color,
        });
        if select && self.params.docs_value_selection && self.view.len() == self.neighbors().len() {
            let (v, gain) = self
                .inst
                .best_unilateral(self.id, self.value, &self.view)
                .expect("complete neighbor view");
            ctx.charge(self.inst.unilateral_checks(self.id));
            self.value = v;
            ctx.select(MoveKind::Ordering, self.sc, v, gain);
        }
        self.broadcast(
            ctx,
            LamdlsMsg::Color {
                sc: self.sc,
                color,
                value: self.value,
            },
            None,
        );
    }

    fn ordering_check(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        if self.color.is_none() {
            let me = self.key();
            let ready = (0..self.nb_colors.len())
                .all(|p| !precedes(self.nb_key(p), me) || self.nb_colors[p].is_some());
            if !ready {
                return;
            }
            let color = (1..)
                .find(|c| !self.nb_colors.contains(&Some(*c)))
                .expect("a free color exists");
            self.set_color(color, true, ctx);
        }
        if self.nb_colors.iter().all(Option::is_some) {
            self.phase = Phase::Pairing;
            self.sn = None;
            self.offers.clear();
            self.pair_check(ctx);
        }
    }

    /// Whether every neighbor with a smaller color outside `except` has
    /// completed the current step.
    fn predecessors_done(&self, except: &BTreeMap<AgentId, OfferPayload>) -> bool {
        let co = self.color.expect("colored");
        self.neighbors().iter().enumerate().all(|(p, j)| {
            self.nb_colors[p].expect("colored") >= co
                || except.contains_key(j)
                || self.v[p] > self.sc
        })
    }

    fn pair_check(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        if self.sn.is_some() {
            return;
        }
        if !self.offers.is_empty() {
            if self.predecessors_done(&self.offers) {
                self.accept_offer(ctx);
            }
            return;
        }
        if !self.predecessors_done(&BTreeMap::new()) {
            return;
        }
        let co = self.color.expect("colored");
        let target = (0..self.neighbors().len())
            .filter(|&p| self.nb_colors[p] == Some(co + 1) && self.v[p] == self.sc)
            .min_by(|&a, &b| {
                let (ka, kb) = (self.nb_key(a), self.nb_key(b));
                ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
            })
            .map(|p| self.neighbors()[p]);
        match target {
            Some(sn) => {
                self.sn = Some(sn);
                ctx.charge(self.neighbors().len() as u64);
                ctx.note(Note::Offer { step: self.sc, to: sn });
                ctx.send(
                    sn,
                    LamdlsMsg::Offer {
                        sc: self.sc,
                        offer: OfferPayload {
                            value: self.value,
                            domain_size: self.inst.domain_size(self.id),
                            neighbor_values: self.view.clone(),
                        },
                    },
                );
            }
            None => self.select_unilaterally(ctx),
        }
    }

    fn accept_offer(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        let partner = *self
            .offers
            .keys()
            .min_by(|&&a, &&b| {
                let ka = self.nb_key(self.pos(a));
                let kb = self.nb_key(self.pos(b));
                ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
            })
            .expect("pending offers");
        let offer = self.offers.remove(&partner).expect("pending offers");
        let outside = Overlay {
            primary: &self.view,
            fallback: &offer.neighbor_values,
        };
        let (mine, theirs, gain) = self
            .inst
            .best_bilateral(self.id, partner, self.value, offer.value, &outside)
            .expect("offer comes from a neighbor");
        ctx.charge(self.inst.bilateral_checks(self.id, partner));
        let step = self.sc;
        self.value = mine;
        ctx.select_pair(step, mine, partner, theirs, gain);
        ctx.note(Note::Paired {
            step,
            offerer: partner,
            receiver: self.id,
        });
        self.view.insert(partner, theirs);
        ctx.send(
            partner,
            LamdlsMsg::Reply {
                sc: step,
                your_value: theirs,
                my_value: mine,
                gain,
            },
        );
        self.complete_step(ctx, Some(partner));
    }

    fn select_unilaterally(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        let (v, gain) = self
            .inst
            .best_unilateral(self.id, self.value, &self.view)
            .expect("complete neighbor view");
        ctx.charge(self.inst.unilateral_checks(self.id));
        self.value = v;
        ctx.select(MoveKind::Unilateral, self.sc, v, gain);
        ctx.note(Note::Unilateral { step: self.sc });
        self.complete_step(ctx, None);
    }

    /// Ends the pair phase: bump the counter, announce the value, and start
    /// the docsId exchange of the next step.
    fn complete_step(&mut self, ctx: &mut Ctx<LamdlsMsg>, partner: Option<AgentId>) {
        self.sc += 1;
        self.sn = None;
        self.offers.clear();
        if self.neighbors().is_empty() {
            self.phase = Phase::Done;
            return;
        }
        self.broadcast(
            ctx,
            LamdlsMsg::Value {
                sc: self.sc,
                value: self.value,
            },
            partner,
        );
        self.docs_id = self.draw_docs_id();
        self.nb_docs.iter_mut().for_each(|d| *d = None);
        self.phase = Phase::AwaitDocs;
        self.broadcast(
            ctx,
            LamdlsMsg::DocsId {
                sc: self.sc,
                docs_id: self.docs_id,
                value: self.value,
            },
            None,
        );
    }

    fn drain(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        while let Some(idx) = self.pending.iter().position(|(_, m)| self.consumable(m)) {
            let (from, msg) = self.pending.remove(idx);
            self.handle(from, msg, ctx);
        }
    }

    pub fn color(&self) -> Option<u32> {
        self.color
    }
}

/// Edges of the six-agent demonstration graph, 0-based.
pub const DEMO_EDGES: [(AgentId, AgentId); 7] = [(0, 2), (0, 3), (0, 4), (1, 3), (1, 5), (3, 4), (3, 5)];

/// The demonstration graph with 3 values per agent and costs in 1..=20.
pub fn demo_instance(seed: u64) -> ProblemInstance {
    let mut rng = crate::seeds::rng(&[seed, crate::seeds::tag("demo")]);
    let mut b = crate::problem::InstanceBuilder::new(vec![3; 6]);
    for &(i, j) in &DEMO_EDGES {
        let table = (0..3)
            .map(|_| (0..3).map(|_| rng.random_range(1..=20)).collect())
            .collect();
        b.push_edge(i, j, table);
    }
    b.build().expect("valid demonstration graph")
}

/// docsIds of the demonstration's second step, in agent order.
pub const DEMO_STEP2_IDS: [f64; 6] = [0.6, 0.2, 0.5, 0.1, 0.4, 0.3];

/// Script that forces the demonstration's second-step docsIds.
pub fn demo_script() -> BTreeMap<(u64, AgentId), f64> {
    DEMO_STEP2_IDS
        .iter()
        .enumerate()
        .map(|(a, &id)| ((2, a), id))
        .collect()
}

impl Agent for Lamdls2Agent<'_> {
    type Msg = LamdlsMsg;

    fn value(&self) -> Value {
        self.value
    }

    fn progress(&self) -> u64 {
        self.sc - 1
    }

    fn is_waiting(&self) -> bool {
        self.phase != Phase::Done
    }

    fn on_start(&mut self, ctx: &mut Ctx<LamdlsMsg>) {
        if self.neighbors().is_empty() {
            self.phase = Phase::Pairing;
            self.select_unilaterally(ctx);
            return;
        }
        self.docs_id = self.draw_docs_id();
        for p in 0..self.neighbors().len() {
            let j = self.neighbors()[p];
            self.nb_docs[p] = Some(
                self.params
                    .docs_script
                    .get(&(1, j))
                    .copied()
                    .unwrap_or(j as f64),
            );
        }
        self.start_ordering(ctx);
    }

    fn on_message(&mut self, from: AgentId, msg: LamdlsMsg, ctx: &mut Ctx<LamdlsMsg>) {
        self.pending.push((from, msg));
        self.drain(ctx);
    }
}
