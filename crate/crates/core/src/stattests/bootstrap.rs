use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One Politis–Romano resample of `0..n`: restart with probability `1/L`, else
/// continue to the next index with wrap-around. Replication `r` uses its own stream.
pub fn stationary_bootstrap_replication(n: usize, mean_block: f64, seed: u64, r: u64) -> Vec<usize> {
    assert!(n >= 1 && mean_block >= 1.0, "n >= 1 and mean block length >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    let restart = 1.0 / mean_block;
    let mut idx = Vec::with_capacity(n);
    let mut cur = rng.gen_range(0..n);
    idx.push(cur);
    for _ in 1..n {
        cur = if rng.gen::<f64>() < restart {
            rng.gen_range(0..n)
        } else {
            (cur + 1) % n
        };
        idx.push(cur);
    }
    idx
}

pub fn stationary_bootstrap_indices(n: usize, mean_block: f64, replications: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..replications as u64)
        .map(|r| stationary_bootstrap_replication(n, mean_block, seed, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        assert_eq!(stationary_bootstrap_indices(50, 5.0, 4, 9), stationary_bootstrap_indices(50, 5.0, 4, 9));
        assert_ne!(stationary_bootstrap_indices(50, 5.0, 4, 9), stationary_bootstrap_indices(50, 5.0, 4, 10));
    }

    #[test]
    fn unit_block_restarts_every_step() {
        // every draw consumes a fresh uniform index: compare with an explicit iid stream
        let got = stationary_bootstrap_replication(30, 1.0, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        rng.set_stream(2);
        let mut want = vec![rng.gen_range(0..30)];
        for _ in 1..30 {
            let _: f64 = rng.gen();
            want.push(rng.gen_range(0..30));
        }
        assert_eq!(got, want);
    }

    #[test]
    fn mean_block_length_near_target() {
        let n = 100_000;
        let idx = stationary_bootstrap_replication(n, 5.0, 11, 0);
        let breaks = idx.windows(2).filter(|w| w[1] != (w[0] + 1) % n).count();
        let mean_len = n as f64 / (breaks + 1) as f64;
        assert!((mean_len - 5.0).abs() / 5.0 < 0.02, "{mean_len}");
    }
}
