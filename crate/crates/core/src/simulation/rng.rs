use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Independent random stream for one replication.
///
/// ChaCha20 is counter based: the key comes from `seed` and the stream id
/// selects a disjoint 2^64-block sequence, so replication `r` sees the same
/// numbers whichever worker runs it and in whatever order.
pub fn replication_stream(seed: u64, replication: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
