use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fmt;

use rand_chacha::ChaCha8Rng;

use super::latency::{sample_delay, LatencyModel};
use super::trace::{sample_curve, AgentMeters, Annotation, Move, MoveKind, Note, Outcome, RunMeta, Trace};
use super::Nclo;
use crate::problem::{AgentId, Cost, ProblemInstance, Value};

/// Message body exchanged by an algorithm.
pub trait Payload: Clone + fmt::Debug {
    /// Wire kind, used for the per-kind message counts.
    fn kind(&self) -> &'static str;
}

/// A message-driven agent state machine. Handlers report their work through
/// the [`Ctx`]; the engine owns clocks, delivery and recording.
pub trait Agent {
    type Msg: Payload;

    fn value(&self) -> Value;
    /// Number of completed algorithm steps.
    fn progress(&self) -> u64;
    /// Whether the agent still expects messages to make progress.
    fn is_waiting(&self) -> bool;
    fn on_start(&mut self, ctx: &mut Ctx<Self::Msg>);
    fn on_message(&mut self, from: AgentId, msg: Self::Msg, ctx: &mut Ctx<Self::Msg>);
}

struct PendingMove {
    step: u64,
    kind: MoveKind,
    changes: Vec<(AgentId, Value)>,
    gain: Cost,
    pair: Option<(AgentId, AgentId)>,
}

/// Handler context: collects outgoing messages, charged NCLOs, value
/// selections and annotations for one handler invocation.
pub struct Ctx<M> {
    me: AgentId,
    now: Nclo,
    outbox: Vec<(AgentId, M)>,
    charged: Nclo,
    moves: Vec<PendingMove>,
    notes: Vec<Note>,
}

impl<M> Ctx<M> {
    fn new(me: AgentId, now: Nclo) -> Self {
        Self {
            me,
            now,
            outbox: Vec::new(),
            charged: 0,
            moves: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn me(&self) -> AgentId {
        self.me
    }

    /// Local clock at the start of the handler.
    pub fn now(&self) -> Nclo {
        self.now
    }

    pub fn send(&mut self, to: AgentId, msg: M) {
        self.outbox.push((to, msg));
    }

    pub fn charge(&mut self, nclos: Nclo) {
        self.charged += nclos;
    }

    /// Records a unilateral value selection made by this agent.
    pub fn select(&mut self, kind: MoveKind, step: u64, value: Value, gain: Cost) {
        self.moves.push(PendingMove {
            step,
            kind,
            changes: vec![(self.me, value)],
            gain,
            pair: None,
        });
    }

    /// Records a joint move of this agent and `partner`. Both partners may
    /// record the same move; the earliest record is kept.
    pub fn select_pair(
        &mut self,
        step: u64,
        mine: Value,
        partner: AgentId,
        theirs: Value,
        gain: Cost,
    ) {
        let (lo, hi) = (self.me.min(partner), self.me.max(partner));
        let mut changes = vec![(self.me, mine), (partner, theirs)];
        changes.sort_unstable();
        self.moves.push(PendingMove {
            step,
            kind: MoveKind::Bilateral,
            changes,
            gain,
            pair: Some((lo, hi)),
        });
    }

    pub fn note(&mut self, note: Note) {
        self.notes.push(note);
    }
}

/// Details of a message at send time, handed to a [`DelaySource`].
#[derive(Debug, Clone, Copy)]
pub struct SendInfo {
    pub msg_id: u64,
    pub sender: AgentId,
    pub receiver: AgentId,
    pub send_nclo: Nclo,
    /// Undelivered messages in the system.
    pub in_transit: usize,
    pub kind: &'static str,
}

pub trait DelaySource {
    fn delay(&mut self, info: &SendInfo) -> Nclo;
}

/// Samples a [`LatencyModel`] from its own random stream.
pub struct ModelDelays {
    pub model: LatencyModel,
    pub rng: ChaCha8Rng,
}

impl DelaySource for ModelDelays {
    fn delay(&mut self, info: &SendInfo) -> Nclo {
        sample_delay(&self.model, info.in_transit, &mut self.rng)
    }
}

impl<F: FnMut(&SendInfo) -> Nclo> DelaySource for F {
    fn delay(&mut self, info: &SendInfo) -> Nclo {
        self(info)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub budget: Nclo,
    pub sample_interval: Nclo,
    /// Stop once every connected agent completed this many steps without
    /// any value changing.
    pub quiet_steps: Option<u64>,
}

impl RunConfig {
    pub fn new(budget: Nclo, sample_interval: Nclo) -> Self {
        Self {
            budget,
            sample_interval,
            quiet_steps: None,
        }
    }

    pub fn until_quiet(mut self, steps: u64) -> Self {
        self.quiet_steps = Some(steps);
        self
    }
}

/// Envelope in flight.
struct Envelope<M> {
    msg_id: u64,
    sender: AgentId,
    receiver: AgentId,
    deliver_nclo: Nclo,
    payload: M,
}

impl<M> Envelope<M> {
    fn key(&self) -> (Nclo, AgentId, u64) {
        (self.deliver_nclo, self.receiver, self.msg_id)
    }
}

impl<M> PartialEq for Envelope<M> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<M> Eq for Envelope<M> {}

impl<M> PartialOrd for Envelope<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for Envelope<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

struct Recorder {
    clocks: Vec<Nclo>,
    meters: Vec<AgentMeters>,
    moves: Vec<Move>,
    notes: Vec<Annotation>,
    send_times: Vec<Nclo>,
    idle_gaps: Vec<(Nclo, Nclo)>,
    kinds: BTreeMap<String, u64>,
    current: Vec<Value>,
    last_change_step: u64,
    next_msg: u64,
    next_seq: u64,
}

/// Runs `agents` on `instance` until the queue drains, the next delivery
/// lies beyond the budget, or the quiet-steps convergence rule fires.
///
/// The event with the smallest `(deliver_nclo, receiver, msg_id)` is always
/// processed next. The receiver's clock first jumps to the delivery time
/// (the gap counts as idle), then advances by the handler's charged work,
/// never less than one NCLO. Messages leave at the handler's completion
/// time and selections are recorded at that time too.
pub fn run<A: Agent>(
    instance: &ProblemInstance,
    mut agents: Vec<A>,
    delays: &mut dyn DelaySource,
    cfg: &RunConfig,
    meta: RunMeta,
) -> Trace {
    let n = agents.len();
    assert_eq!(n, instance.n(), "one agent per variable");
    let initial: Vec<Value> = agents.iter().map(Agent::value).collect();
    let mut rec = Recorder {
        clocks: vec![0; n],
        meters: vec![AgentMeters::default(); n],
        moves: Vec::new(),
        notes: Vec::new(),
        send_times: Vec::new(),
        idle_gaps: Vec::new(),
        kinds: BTreeMap::new(),
        current: initial.clone(),
        last_change_step: 0,
        next_msg: 0,
        next_seq: 0,
    };
    let mut queue: BinaryHeap<Reverse<Envelope<A::Msg>>> = BinaryHeap::new();
    let connected: Vec<AgentId> = (0..n).filter(|&a| instance.degree(a) > 0).collect();

    let quiet = |agents: &[A], rec: &Recorder| match cfg.quiet_steps {
        Some(q) if !connected.is_empty() => connected
            .iter()
            .all(|&a| agents[a].progress() >= rec.last_change_step + q),
        _ => false,
    };

    for (a, agent) in agents.iter_mut().enumerate() {
        let mut ctx = Ctx::new(a, 0);
        agent.on_start(&mut ctx);
        finish(a, ctx, &mut rec, &mut queue, delays);
    }

    let outcome = loop {
        if quiet(&agents, &rec) {
            break Outcome::Converged;
        }
        let Some(Reverse(env)) = queue.pop() else {
            break if agents.iter().any(Agent::is_waiting) {
                Outcome::Stalled
            } else {
                Outcome::Quiescent
            };
        };
        if env.deliver_nclo > cfg.budget {
            break Outcome::BudgetExhausted;
        }
        let a = env.receiver;
        let clock = rec.clocks[a];
        if clock < env.deliver_nclo {
            rec.meters[a].idle_nclos += env.deliver_nclo - clock;
            rec.idle_gaps.push((clock, env.deliver_nclo));
            rec.clocks[a] = env.deliver_nclo;
        }
        let mut ctx = Ctx::new(a, rec.clocks[a]);
        agents[a].on_message(env.sender, env.payload, &mut ctx);
        finish(a, ctx, &mut rec, &mut queue, delays);
    };

    for (a, agent) in agents.iter().enumerate() {
        rec.meters[a].final_clock = rec.clocks[a];
        rec.meters[a].steps = agent.progress();
    }
    let end_nclo = rec.clocks.iter().copied().max().unwrap_or(0);

    let mut moves = rec.moves;
    moves.sort_by_key(|m| (m.nclo, m.seq));
    let mut seen = HashSet::new();
    moves.retain(|m| {
        if m.kind != MoveKind::Bilateral {
            return true;
        }
        let lo = m.changes[0].0;
        let hi = m.changes[1].0;
        seen.insert((m.step, lo, hi))
    });
    let mut notes = rec.notes;
    notes.sort_by_key(|n| n.nclo);
    let mut send_times = rec.send_times;
    send_times.sort_unstable();
    let mut idle_gaps = rec.idle_gaps;
    idle_gaps.sort_unstable();
    let curve = sample_curve(instance, &initial, &moves, cfg.budget, cfg.sample_interval);

    Trace {
        meta,
        initial,
        moves,
        notes,
        meters: rec.meters,
        send_times,
        idle_gaps,
        message_kinds: rec.kinds,
        outcome,
        end_nclo,
        curve,
    }
}

fn finish<M: Payload>(
    a: AgentId,
    ctx: Ctx<M>,
    rec: &mut Recorder,
    queue: &mut BinaryHeap<Reverse<Envelope<M>>>,
    delays: &mut dyn DelaySource,
) {
    let work = ctx.charged.max(1);
    rec.clocks[a] += work;
    rec.meters[a].busy_nclos += work;
    let done = rec.clocks[a];

    for pm in ctx.moves {
        let mut changed = false;
        for &(b, v) in &pm.changes {
            if rec.current[b] != v {
                rec.current[b] = v;
                changed = true;
            }
        }
        if changed {
            rec.last_change_step = rec.last_change_step.max(pm.step);
        }
        debug_assert!(pm.pair.is_none() || pm.changes.len() == 2);
        rec.moves.push(Move {
            nclo: done,
            seq: rec.next_seq,
            step: pm.step,
            kind: pm.kind,
            by: a,
            changes: pm.changes,
            gain: pm.gain,
        });
        rec.next_seq += 1;
    }
    for note in ctx.notes {
        rec.notes.push(Annotation {
            nclo: done,
            agent: a,
            note,
        });
    }
    for (to, payload) in ctx.outbox {
        let info = SendInfo {
            msg_id: rec.next_msg,
            sender: a,
            receiver: to,
            send_nclo: done,
            in_transit: queue.len(),
            kind: payload.kind(),
        };
        let delay = delays.delay(&info);
        rec.meters[a].messages_sent += 1;
        rec.send_times.push(done);
        *rec.kinds.entry(info.kind.to_owned()).or_default() += 1;
        queue.push(Reverse(Envelope {
            msg_id: info.msg_id,
            sender: a,
            receiver: to,
            deliver_nclo: done + delay,
            payload,
        }));
        rec.next_msg += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::InstanceBuilder;

    /// Ping-pong between agents 0 and 1, `rounds` times; both record their
    /// clock at every receipt.
    #[derive(Clone, Debug)]
    struct Ping(u32);

    impl Payload for Ping {
        fn kind(&self) -> &'static str {
            "ping"
        }
    }

    struct Pinger {
        id: AgentId,
        rounds: u32,
        seen: Vec<(Nclo, u32)>,
        cost: Nclo,
    }

    impl Agent for Pinger {
        type Msg = Ping;
        fn value(&self) -> Value {
            0
        }
        fn progress(&self) -> u64 {
            self.seen.len() as u64
        }
        fn is_waiting(&self) -> bool {
            false
        }
        fn on_start(&mut self, ctx: &mut Ctx<Ping>) {
            if self.id == 0 {
                ctx.send(1, Ping(0));
            }
        }
        fn on_message(&mut self, from: AgentId, msg: Ping, ctx: &mut Ctx<Ping>) {
            self.seen.push((ctx.now(), msg.0));
            ctx.charge(self.cost);
            if msg.0 < self.rounds {
                ctx.send(from, Ping(msg.0 + 1));
            }
        }
    }

    fn pair() -> ProblemInstance {
        InstanceBuilder::new(vec![1, 1])
            .edge(0, 1, vec![vec![0]])
            .build()
            .unwrap()
    }

    fn meta() -> RunMeta {
        RunMeta {
            seed: 0,
            algorithm: "ping".into(),
            latency: LatencyModel::Perfect,
            budget: 1000,
            sample_interval: 100,
        }
    }

    fn pingers(cost: Nclo) -> Vec<Pinger> {
        (0..2)
            .map(|id| Pinger {
                id,
                rounds: 5,
                seen: vec![],
                cost,
            })
            .collect()
    }

    #[test]
    fn clocks_and_meters_add_up() {
        let inst = pair();
        let mut fixed = |_: &SendInfo| 10;
        let trace = run(&inst, pingers(3), &mut fixed, &RunConfig::new(1000, 100), meta());
        assert_eq!(trace.outcome, Outcome::Quiescent);
        assert_eq!(trace.messages_total(), 6);
        for m in &trace.meters {
            assert_eq!(m.idle_nclos + m.busy_nclos, m.final_clock);
        }
        // start costs 1; each hop: 10 delay + 3 work
        assert_eq!(trace.end_nclo, 1 + 6 * 13);
    }

    #[test]
    fn budget_stops_delivery() {
        let inst = pair();
        let mut fixed = |_: &SendInfo| 100;
        let trace = run(&inst, pingers(1), &mut fixed, &RunConfig::new(250, 50), meta());
        assert_eq!(trace.outcome, Outcome::BudgetExhausted);
        assert_eq!(trace.curve.len(), 6);
        assert!(trace.end_nclo <= 250 + 1);
    }

    #[derive(Clone, Debug)]
    struct Stamp(u64);

    impl Payload for Stamp {
        fn kind(&self) -> &'static str {
            "stamp"
        }
    }

    /// Agent 0 sends a numbered burst; agent 1 records arrival order.
    struct Burst {
        id: AgentId,
        got: Vec<u64>,
    }

    impl Agent for Burst {
        type Msg = Stamp;
        fn value(&self) -> Value {
            0
        }
        fn progress(&self) -> u64 {
            0
        }
        fn is_waiting(&self) -> bool {
            self.id == 1 && self.got.len() < 4
        }
        fn on_start(&mut self, ctx: &mut Ctx<Stamp>) {
            if self.id == 0 {
                for k in 0..3 {
                    ctx.send(1, Stamp(k));
                }
            }
        }
        fn on_message(&mut self, _: AgentId, msg: Stamp, ctx: &mut Ctx<Stamp>) {
            self.got.push(msg.0);
            ctx.note(Note::Unilateral { step: msg.0 });
        }
    }

    #[test]
    fn later_messages_can_overtake_and_missing_ones_stall() {
        let inst = pair();
        let mut reverse = |info: &SendInfo| 100 - 10 * info.msg_id;
        let agents = vec![Burst { id: 0, got: vec![] }, Burst { id: 1, got: vec![] }];
        let trace = run(&inst, agents, &mut reverse, &RunConfig::new(1000, 100), meta());
        // receiver expected a fourth message that never comes
        assert_eq!(trace.outcome, Outcome::Stalled);
        assert_eq!(trace.messages_total(), 3);
        let arrivals: Vec<u64> = trace
            .notes
            .iter()
            .map(|n| match n.note {
                Note::Unilateral { step } => step,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(arrivals, vec![2, 1, 0]);
        assert_eq!(trace.idle_gaps.len(), 3);
    }

    #[test]
    fn simultaneous_deliveries_order_by_receiver_then_id() {
        let mut envs: Vec<Envelope<()>> = vec![
            Envelope { msg_id: 3, sender: 0, receiver: 2, deliver_nclo: 5, payload: () },
            Envelope { msg_id: 1, sender: 0, receiver: 2, deliver_nclo: 5, payload: () },
            Envelope { msg_id: 7, sender: 0, receiver: 1, deliver_nclo: 5, payload: () },
            Envelope { msg_id: 0, sender: 0, receiver: 0, deliver_nclo: 6, payload: () },
        ];
        envs.sort();
        let order: Vec<u64> = envs.iter().map(|e| e.msg_id).collect();
        assert_eq!(order, vec![7, 1, 3, 0]);
    }
}
