use sha2::{Digest, Sha256};

/// Stable 64-bit seed derived from a run seed and labelled parts.
pub fn derive_seed(run_seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}
