use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"medfed/v1";

/// Seed for one `(client, round, purpose)` stream of a run.
///
/// The seed is the first 8 bytes, read little-endian, of
/// `SHA-256("medfed/v1" || master || client || round || tag)`, where the
/// integers are 8-byte little-endian and `tag` is its UTF-8 bytes. Client
/// and round 0 are used for run-wide streams.
pub fn derive_seed(master_seed: u64, client_id: usize, round: usize, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(master_seed.to_le_bytes());
    hasher.update((client_id as u64).to_le_bytes());
    hasher.update((round as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Purpose tags used by the simulator.
pub mod tags {
    pub const SPLIT: &str = "split";
    pub const PARTITION: &str = "partition";
    pub const INIT: &str = "init";
    pub const FLIP: &str = "flip";
    pub const BATCH: &str = "batch";
    pub const NOISE: &str = "noise";
    pub const DP: &str = "dp";
}
