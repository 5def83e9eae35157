use parking_lot::Mutex;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Source of join/completion codes (128 random bits, hex) and comparison coin flips.
pub struct CodeGen {
    rng: Mutex<ChaCha20Rng>,
}

impl CodeGen {
    /// Reproducible stream when `seed` is given, OS entropy otherwise.
    pub fn new(seed: Option<u64>) -> Self {
        let rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        CodeGen {
            rng: Mutex::new(rng),
        }
    }

    pub fn code(&self) -> String {
        let mut bytes = [0u8; 16];
        self.rng.lock().fill_bytes(&mut bytes);
        format!("{:032x}", u128::from_be_bytes(bytes))
    }

    pub fn coin(&self) -> bool {
        self.rng.lock().next_u32() & 1 == 1
    }
}
