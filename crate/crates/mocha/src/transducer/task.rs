//! Synthetic transduction tasks.
//!
//! `copy` has a strictly monotonic diagonal alignment; every mechanism
//! should master it. `pair_swap` swaps adjacent token pairs, the smallest
//! local reordering: a chunk of width 2 covers it, a hard monotonic cursor
//! cannot revisit the entry it skipped.

use super::{END, FIRST_SYMBOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Copy,
    PairSwap,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Copy => "copy",
            TaskKind::PairSwap => "pair_swap",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub min_len: usize,
    pub max_len: usize,
    /// Vocabulary size including the two sentinels.
    pub vocab: usize,
    pub samples: usize,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, min_len: usize, max_len: usize, vocab: usize) -> Self {
        assert!(min_len >= 1 && min_len <= max_len, "bad length range");
        assert!(vocab > FIRST_SYMBOL, "vocabulary must hold at least one data symbol");
        TaskSpec { kind, min_len, max_len, vocab, samples: 512, seed: 0 }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The training set for this spec.
    pub fn generate(&self) -> Dataset {
        self.generate_salted(0)
    }

    /// A disjoint stream from the same spec (salt 1 = held-out evaluation).
    pub fn generate_salted(&self, salt: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9).wrapping_add(salt));
        let pairs = (0..self.samples).map(|_| self.sample(&mut rng)).collect();
        Dataset { pairs }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
        let mut len = rng.gen_range(self.min_len..=self.max_len);
        if matches!(self.kind, TaskKind::PairSwap) {
            // pair_swap needs even lengths
            if len % 2 == 1 {
                len = if len > self.min_len { len - 1 } else { len + 1 };
            }
            len = len.max(2);
        }
        let tokens: Vec<usize> =
            (0..len).map(|_| rng.gen_range(FIRST_SYMBOL..self.vocab)).collect();

        let mut output = match self.kind {
            TaskKind::Copy => tokens.clone(),
            TaskKind::PairSwap => {
                let mut swapped = tokens.clone();
                for pair in swapped.chunks_exact_mut(2) {
                    pair.swap(0, 1);
                }
                swapped
            }
        };

        // END closes both sides: the encoder sees where the input stops, the
        // decoder learns to emit it.
        let mut input = tokens;
        input.push(END);
        output.push(END);
        (input, output)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// (input tokens incl. trailing END, target tokens incl. trailing END)
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
