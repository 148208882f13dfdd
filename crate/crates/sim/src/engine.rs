//! The event loop.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slicenc_core::scenario::{Decision, Scenario};

use crate::bound::bounds_for;
use crate::buffers::sized;
use crate::network::Network;
use crate::source::{ConformanceMonitor, Source};
use crate::stats::{percentile, DelayStats, FlowStats, QueueStats};
use crate::wrr::WrrScheduler;
use crate::{ns_ceil, BufferPolicy, SimConfig, SimError, TrafficModel, RNG_ALGORITHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Packet {
    flow: u32,
    hop: u16,
    born: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Emit(u32),
    Arrive(Packet),
    Done(u32),
}

struct Queue {
    packets: VecDeque<Packet>,
    backlog_bits: f64,
    max_backlog_bits: f64,
    capacity_bits: Option<f64>,
    drops: u64,
}

struct Node {
    wrr: WrrScheduler,
    busy: Option<(Packet, usize)>,
}

struct Engine<'a> {
    net: &'a Network,
    now: u64,
    seq: u64,
    events: BinaryHeap<Reverse<(u64, u64, Event)>>,
    queues: Vec<Queue>,
    nodes: Vec<Node>,
    sources: Vec<Source>,
    monitors: Vec<Option<ConformanceMonitor>>,
    delays: Vec<Vec<u64>>,
    emitted: u64,
}

impl Engine<'_> {
    fn schedule(&mut self, at: u64, e: Event) {
        self.events.push(Reverse((at, self.seq, e)));
        self.seq += 1;
    }

    fn start(&mut self, node: usize) {
        let local = &self.net.nodes[node].queues;
        let queues = &self.queues;
        let Some(slot) = self.nodes[node].wrr.select(|i| !queues[local[i]].packets.is_empty()) else {
            return;
        };
        let q = local[slot];
        let p = self.queues[q].packets.pop_front().expect("selected queue is non-empty");
        let tx = self.net.flows[p.flow as usize].tx_ns[p.hop as usize];
        self.nodes[node].busy = Some((p, q));
        self.schedule(self.now + tx, Event::Done(node as u32));
    }

    fn arrive(&mut self, p: Packet) {
        let f = &self.net.flows[p.flow as usize];
        let node = f.path[p.hop as usize];
        let queue = &mut self.queues[f.queues[p.hop as usize]];
        if queue.capacity_bits.is_some_and(|c| queue.backlog_bits + f.packet_bits > c + 1e-9) {
            queue.drops += 1;
            return;
        }
        queue.backlog_bits += f.packet_bits;
        queue.max_backlog_bits = queue.max_backlog_bits.max(queue.backlog_bits);
        queue.packets.push_back(p);
        if self.nodes[node].busy.is_none() {
            self.start(node);
        }
    }

    fn done(&mut self, node: usize) {
        let (p, q) = self.nodes[node].busy.take().expect("completion of a busy node");
        let f = &self.net.flows[p.flow as usize];
        self.queues[q].backlog_bits -= f.packet_bits;
        let after = f.after_ns[p.hop as usize];
        if (p.hop as usize) + 1 < f.path.len() {
            self.schedule(self.now + after, Event::Arrive(Packet { hop: p.hop + 1, ..p }));
        } else {
            self.delays[p.flow as usize].push(self.now + after - p.born);
        }
        self.start(node);
    }

    fn emit(&mut self, flow: usize, end: u64) {
        let bits = self.sources[flow].packet_bits();
        if let Some(m) = &mut self.monitors[flow] {
            m.observe(self.now, bits);
        }
        self.emitted += 1;
        let p = Packet { flow: flow as u32, hop: 0, born: self.now };
        self.arrive(p);
        let next = self.sources[flow].next_after(self.now);
        if next < end {
            self.schedule(next, Event::Emit(flow as u32));
        }
    }
}

/// Simulates the decision and summarises per-flow delays.
///
/// Delays run from the packet entering its first node to the end of the
/// last node's pipeline. Identical inputs give bit-identical results.
pub fn run(s: &Scenario, d: &Decision, cfg: &SimConfig) -> Result<DelayStats, SimError> {
    if !(cfg.duration_s > 0.0 && cfg.duration_s.is_finite()) {
        return Err(SimError::Invalid(format!("duration {} s must be positive", cfg.duration_s)));
    }
    let net = Network::build(s, d)?;
    let buffers = match cfg.buffers {
        BufferPolicy::Sized => Some(sized(&net, s)?),
        BufferPolicy::Unlimited => None,
    };
    let bounds = bounds_for(&net, s);
    let end = ns_ceil(cfg.duration_s);

    let queues = net
        .queues
        .iter()
        .enumerate()
        .map(|(i, _)| Queue {
            packets: VecDeque::new(),
            backlog_bits: 0.0,
            max_backlog_bits: 0.0,
            capacity_bits: buffers.as_ref().map(|b| b[i].bits),
            drops: 0,
        })
        .collect();
    let nodes = net
        .nodes
        .iter()
        .enumerate()
        .map(|(v, n)| Node {
            wrr: WrrScheduler::new(
                n.queues.iter().map(|&q| net.queues[q].weight).collect(),
                s.topology.node(v).capacity_bps,
            ),
            busy: None,
        })
        .collect();
    let sources = net
        .flows
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            Source::new(cfg.model, f.curve.rate, f.curve.burst, f.packet_bits, rng)
        })
        .collect();
    let monitors = net
        .flows
        .iter()
        .map(|f| (cfg.model == TrafficModel::TokenBucket).then(|| ConformanceMonitor::new(f.curve.rate, f.curve.burst)))
        .collect();

    let mut e = Engine {
        net: &net,
        now: 0,
        seq: 0,
        events: BinaryHeap::new(),
        queues,
        nodes,
        sources,
        monitors,
        delays: vec![Vec::new(); net.flows.len()],
        emitted: 0,
    };
    for i in 0..net.flows.len() {
        let t = e.sources[i].first();
        if t < end {
            e.schedule(t, Event::Emit(i as u32));
        }
    }
    while let Some(Reverse((t, _, ev))) = e.events.pop() {
        e.now = t;
        match ev {
            Event::Emit(f) => e.emit(f as usize, end),
            Event::Arrive(p) => e.arrive(p),
            Event::Done(n) => e.done(n as usize),
        }
    }

    let mut flows = Vec::with_capacity(net.flows.len());
    for (i, f) in net.flows.iter().enumerate() {
        let d = &mut e.delays[i];
        d.sort_unstable();
        let max = d.last().copied().unwrap_or(0);
        let mean = if d.is_empty() { 0.0 } else { d.iter().map(|&x| x as f64).sum::<f64>() / d.len() as f64 };
        let bound_s = bounds[i];
        flows.push(FlowStats {
            id: f.id.clone(),
            slice: f.key.slice.to_string(),
            vdu: f.key.vdu,
            packets: d.len() as u64,
            max_delay_s: max as f64 / 1e9,
            mean_delay_s: mean / 1e9,
            p50_s: percentile(d, 0.5) as f64 / 1e9,
            p90_s: percentile(d, 0.9) as f64 / 1e9,
            p99_s: percentile(d, 0.99) as f64 / 1e9,
            p999_s: percentile(d, 0.999) as f64 / 1e9,
            bound_s,
            // Half a nanosecond absorbs float error in the bound.
            exceeds_bound: bound_s.is_some_and(|b| max as f64 > b * 1e9 + 0.5),
        });
    }
    let queues: Vec<QueueStats> = net
        .queues
        .iter()
        .zip(&e.queues)
        .map(|(q, st)| QueueStats {
            node: s.topology.node(q.node).id.clone(),
            key: q.key.to_string(),
            weight: q.weight,
            buffer_bits: st.capacity_bits,
            max_backlog_bits: st.max_backlog_bits,
            drops: st.drops,
        })
        .collect();
    let dropped = queues.iter().map(|q| q.drops).sum();
    Ok(DelayStats {
        model: cfg.model.to_string(),
        seed: cfg.seed,
        rng: RNG_ALGORITHM.into(),
        duration_s: cfg.duration_s,
        emitted: e.emitted,
        delivered: flows.iter().map(|f| f.packets).sum(),
        dropped,
        conformance_violations: e.monitors.iter().flatten().map(|m| m.violations).sum(),
        exceedances: flows.iter().filter(|f| f.exceeds_bound).count() as u64,
        flows,
        queues,
    })
}
