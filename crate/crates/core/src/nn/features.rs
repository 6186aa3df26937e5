use serde::{Deserialize, Serialize};

pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET_BASIS;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Hashed bag-of-tokens counts. Stored sparsely: `entries` is sorted by index with
/// no duplicates and no zero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector { dim, entries: Vec::new() }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i as usize] = x;
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Lowercases, splits on whitespace and counts `fnv1a64(token) mod dim` buckets.
pub fn featurize(text: &str, dim: usize) -> FeatureVector {
    assert!(dim > 0, "feature dimension must be positive");
    let lower = text.to_lowercase();
    let mut idx: Vec<u32> = lower
        .split_whitespace()
        .map(|t| (fnv1a64(t.as_bytes()) % dim as u64) as u32)
        .collect();
    idx.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(idx.len());
    for i in idx {
        match entries.last_mut() {
            Some((j, c)) if *j == i => *c += 1.0,
            _ => entries.push((i, 1.0)),
        }
    }
    FeatureVector { dim, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_text_is_zero() {
        let f = featurize("", 64);
        assert_eq!(f.nnz(), 0);
        assert_eq!(f.to_dense(), vec![0.0; 64]);
        assert_eq!(featurize(" \n\t ", 64).nnz(), 0);
    }

    #[test]
    fn counts_and_case_folding() {
        let f = featurize("Play play PLAY discard", 4096);
        let dense = f.to_dense();
        let play = (fnv1a64(b"play") % 4096) as usize;
        let discard = (fnv1a64(b"discard") % 4096) as usize;
        assert_eq!(dense[play], 3.0);
        assert_eq!(dense[discard], 1.0);
        assert_eq!(dense.iter().sum::<f64>(), 4.0);
        assert!(f.entries.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(f, featurize("play Play\nPLAY   discard", 4096));
    }
}
