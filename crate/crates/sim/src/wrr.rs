//! Weighted round robin with a quantum of one packet per weight unit.

/// Integer weights giving each queue a bit share close to `shares`.
///
/// A queue's quantum is counted in packets, so the weight is the share per
/// packet bit, scaled so the smallest positive ratio maps to one. Queues with
/// no share still get weight one to keep the scheduler work-conserving.
pub fn weights_from_shares(shares: &[f64], packet_bits: &[f64]) -> Vec<u32> {
    assert_eq!(shares.len(), packet_bits.len(), "one packet size per queue");
    let ratios: Vec<f64> = shares.iter().zip(packet_bits).map(|(s, l)| s / l).collect();
    let base = ratios.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    ratios
        .iter()
        .map(|r| if *r > 0.0 && base.is_finite() { (r / base).round().max(1.0) as u32 } else { 1 })
        .collect()
}

/// Round-robin pointer over a node's queues.
#[derive(Debug, Clone, PartialEq)]
pub struct WrrScheduler {
    pub weights: Vec<u32>,
    /// Output rate of the node, bits per second.
    pub rate_bps: f64,
    cur: usize,
    served: u32,
}

impl WrrScheduler {
    pub fn new(weights: Vec<u32>, rate_bps: f64) -> Self {
        assert!(weights.iter().all(|w| *w > 0), "weights must be positive");
        Self { weights, rate_bps, cur: 0, served: 0 }
    }

    /// Queue to serve next, or `None` when every queue is empty.
    ///
    /// The current queue keeps the turn until it has sent its quantum or runs
    /// dry; then the pointer moves on.
    pub fn select(&mut self, nonempty: impl Fn(usize) -> bool) -> Option<usize> {
        let n = self.weights.len();
        for _ in 0..=n {
            if nonempty(self.cur) && self.served < self.weights[self.cur] {
                self.served += 1;
                return Some(self.cur);
            }
            self.cur = (self.cur + 1) % n.max(1);
            self.served = 0;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_follow_share_per_bit() {
        assert_eq!(weights_from_shares(&[0.25, 0.75], &[1000.0, 1000.0]), vec![1, 3]);
        assert_eq!(weights_from_shares(&[0.5, 0.5], &[1000.0, 12000.0]), vec![12, 1]);
        assert_eq!(weights_from_shares(&[0.0, 0.3], &[1000.0, 1000.0]), vec![1, 1]);
        assert_eq!(weights_from_shares(&[0.0], &[1000.0]), vec![1]);
    }

    #[test]
    fn backlogged_queues_alternate_by_quantum() {
        let mut w = WrrScheduler::new(vec![2, 1], 1e9);
        let order: Vec<usize> = (0..6).map(|_| w.select(|_| true).unwrap()).collect();
        assert_eq!(order, vec![0, 0, 1, 0, 0, 1]);
    }

    #[test]
    fn empty_queues_are_skipped() {
        let mut w = WrrScheduler::new(vec![3, 1, 1], 1e9);
        assert_eq!(w.select(|q| q == 2), Some(2));
        assert_eq!(w.select(|_| false), None);
    }
}
