use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::index::QuboIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    energy: f64,
    mask: u64,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.energy.total_cmp(&other.energy).then(self.mask.cmp(&other.mask))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn bits_of(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((mask >> k) & 1) as u8).collect()
}

/// The `k_best` lowest-energy assignments in ascending order, energies
/// recomputed exactly. Enumerates in Gray-code order so each step costs one
/// flip.
pub(crate) fn enumerate(index: &QuboIndex, k_best: usize) -> Vec<(Vec<u8>, f64)> {
    let n = index.len();
    let k_best = k_best.max(1);
    let mut bits = vec![0u8; n];
    let mut energy = index.offset;
    let mut heap: BinaryHeap<Entry> = BinaryHeap::with_capacity(k_best + 1);
    let mut mask: u64 = 0;
    heap.push(Entry { energy, mask });
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        energy += index.flip_delta(&bits, i);
        bits[i] ^= 1;
        mask ^= 1 << i;
        let entry = Entry { energy, mask };
        if heap.len() < k_best {
            heap.push(entry);
        } else if entry < *heap.peek().expect("heap non-empty") {
            heap.pop();
            heap.push(entry);
        }
    }
    // incremental sums drift; rank again on exact energies
    let mut out: Vec<(Vec<u8>, f64, u64)> = heap
        .into_iter()
        .map(|e| {
            let b = bits_of(e.mask, n);
            let exact = index.energy(&b);
            (b, exact, e.mask)
        })
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
    out.into_iter().map(|(b, e, _)| (b, e)).collect()
}
