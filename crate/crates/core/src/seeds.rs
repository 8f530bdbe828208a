//! Stream splitting for a single root seed.
//!
//! Every random draw in an experiment comes from a ChaCha8 generator keyed by
//! the root seed. Components use separate ChaCha streams so that, for
//! example, changing the number of evaluation episodes does not perturb the
//! training draws.
//!
//! | stream             | id | used for                                  |
//! |--------------------|----|-------------------------------------------|
//! | `InitialStates`    | 1  | the training set of start states          |
//! | `Training(t)`      | 2  | PPO for chain stage `t`                   |
//! | `Evaluation(t)`    | 3  | fresh start states for chain evaluation   |
//! | `Bench`            | 4  | benchmark start states                    |
//!
//! The stage index `t` occupies the upper 32 bits of the stream id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    InitialStates,
    Training(u32),
    Evaluation(u32),
    Bench,
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::InitialStates => 1,
            Stream::Training(t) => 2 | (u64::from(t) << 32),
            Stream::Evaluation(t) => 3 | (u64::from(t) << 32),
            Stream::Bench => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedRoot(pub u64);

impl SeedRoot {
    pub fn rng(self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream.id());
        rng
    }
}
