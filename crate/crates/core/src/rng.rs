//! Named random substreams derived from one master seed.
//!
//! Every stochastic stage draws from its own ChaCha stream, selected by a
//! label (and an index for per-tree / per-fold streams), so enabling or
//! skipping one stage never shifts the numbers another stage sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

pub const SCENE: &str = "scene";
pub const KPCA_SUBSAMPLE: &str = "kpca-subsample";
pub const BANDWIDTH_PAIRS: &str = "bandwidth-pairs";
pub const FOREST: &str = "forest";
pub const SAMPLING: &str = "sampling";
pub const CV_FOLDS: &str = "cv-folds";
pub const PLATT_SPLIT: &str = "platt-split";

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Stream `index` of stage `label` under `master`.
pub fn substream(master: u64, label: &str, index: u64) -> StageRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(fnv1a(label).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    rng
}

pub fn stage(master: u64, label: &str) -> StageRng {
    substream(master, label, 0)
}
