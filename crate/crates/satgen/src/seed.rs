//! Labelled seed derivation: one master seed deterministically fans out to
//! every module, record and trial, so whole experiment sweeps replay
//! byte-identically regardless of thread scheduling.

/// splitmix64 finaliser; good avalanche, stable across platforms.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derive a child seed from `(master, label, index)`.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    let mixed = splitmix64(master ^ fnv1a(label.as_bytes()));
    splitmix64(mixed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Map a u64 to a float in [0, 1).
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_indices_separate_streams() {
        let a = derive(1, "solver", 0);
        let b = derive(1, "solver", 1);
        let c = derive(1, "cluster", 0);
        let d = derive(2, "solver", 0);
        assert!(a != b && a != c && a != d && b != c);
    }

    #[test]
    fn derivation_is_stable() {
        // Frozen: reports echo seeds, so the derivation must never change.
        assert_eq!(derive(7, "record", 3), derive(7, "record", 3));
        assert_eq!(derive(0, "", 0), derive(0, "", 0));
    }

    #[test]
    fn unit_floats_are_in_range() {
        for x in [0u64, 1, u64::MAX, 0x8000_0000_0000_0000] {
            let u = unit_f64(splitmix64(x));
            assert!((0.0..1.0).contains(&u));
        }
    }
}
