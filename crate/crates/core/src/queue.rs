//! Monotone priority queue for event times.
//!
//! Every time pushed is at least the last time popped, which allows a radix
//! heap: items sit in buckets by the highest bit in which their key differs
//! from the last popped key. Each item moves to a lower bucket at most 64
//! times, and buckets are plain vectors, so access stays sequential even when
//! the queue holds millions of events. Ties pop in LIFO order.

pub(crate) struct MonotoneQueue<T> {
    last: u64,
    buckets: Vec<Vec<(u64, T)>>,
    len: usize,
}

/// Order-preserving key of a non-negative time.
fn key(lambda: f64) -> u64 {
    debug_assert!(lambda >= 0.0);
    (lambda + 0.0).to_bits()
}

impl<T> MonotoneQueue<T> {
    pub(crate) fn new() -> Self {
        Self { last: 0, buckets: (0..65).map(|_| Vec::new()).collect(), len: 0 }
    }

    fn bucket(&self, k: u64) -> usize {
        if k == self.last {
            0
        } else {
            64 - (k ^ self.last).leading_zeros() as usize
        }
    }

    /// Queues `item` at `lambda`; times before the last pop are moved up to it.
    pub(crate) fn push(&mut self, lambda: f64, item: T) {
        let k = key(lambda).max(self.last);
        let b = self.bucket(k);
        self.buckets[b].push((k, item));
        self.len += 1;
    }

    pub(crate) fn pop(&mut self) -> Option<(f64, T)> {
        if self.len == 0 {
            return None;
        }
        if self.buckets[0].is_empty() {
            let i = (1..65).find(|&i| !self.buckets[i].is_empty()).expect("non-empty queue");
            let items = std::mem::take(&mut self.buckets[i]);
            self.last = items.iter().map(|&(k, _)| k).min().expect("non-empty bucket");
            for (k, item) in items {
                let b = self.bucket(k);
                self.buckets[b].push((k, item));
            }
        }
        self.len -= 1;
        self.buckets[0].pop().map(|(k, item)| (f64::from_bits(k), item))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_order() {
        let mut q = MonotoneQueue::new();
        for (i, &t) in [3.0, 0.5, 2.0, 0.5, 7.25, 0.0].iter().enumerate() {
            q.push(t, i);
        }
        let mut out = Vec::new();
        while let Some((t, i)) = q.pop() {
            out.push(t);
            if i == 2 {
                q.push(2.5, 99);
                q.push(1.0, 98); // late push is clamped to the current time
            }
        }
        assert_eq!(out, vec![0.0, 0.5, 0.5, 2.0, 2.0, 2.5, 3.0, 7.25]);
    }
}
