//! Shannon entropy and information gain, in bits.

/// Gains closer than this are treated as equal; gains at or below it count as zero.
pub const GAIN_EPSILON: f64 = 1e-12;

/// `-sum p_c log2 p_c` over nonzero classes; 0 for an empty or pure count vector.
pub fn entropy(counts: &[u32]) -> f64 {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// `H(parent) - (n_L / n) H(left) - (n_R / n) H(right)`.
pub fn information_gain(left: &[u32], right: &[u32]) -> f64 {
    let parent: Vec<u32> = left.iter().zip(right).map(|(l, r)| l + r).collect();
    let nl: u64 = left.iter().map(|&c| c as u64).sum();
    let nr: u64 = right.iter().map(|&c| c as u64).sum();
    let n = (nl + nr) as f64;
    if n == 0.0 {
        return 0.0;
    }
    entropy(&parent) - (nl as f64 / n) * entropy(left) - (nr as f64 / n) * entropy(right)
}

/// Cached `k log2 k`, so that `n H = xlogx(n) - sum_c xlogx(n_c)` costs only lookups.
#[derive(Debug, Clone, Default)]
pub struct XLogXTable {
    table: Vec<f64>,
}

impl XLogXTable {
    pub fn ensure(&mut self, max: usize) {
        let start = self.table.len();
        if start > max {
            return;
        }
        self.table.extend((start..=max).map(|k| {
            if k == 0 {
                0.0
            } else {
                let k = k as f64;
                k * k.log2()
            }
        }));
    }

    #[inline]
    pub fn get(&self, k: u32) -> f64 {
        self.table[k as usize]
    }

    /// `n * H(counts)` for counts summing to `n`.
    #[inline]
    pub fn scaled_entropy(&self, counts: &[u32], n: u32) -> f64 {
        self.get(n) - counts.iter().map(|&c| self.get(c)).sum::<f64>()
    }
}
