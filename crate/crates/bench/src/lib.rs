//! Benchmark inputs shared by the criterion targets in `benches/`.

use morsecount_core::index_calculus::Parity;
use morsecount_core::ParityConfig;

/// Alternating tail of length `m - 1` after the global maximum.
pub fn alternating(m: usize, max_level: usize) -> ParityConfig {
    let mut parities = vec![Parity::Even];
    parities.extend((1..m).map(|j| if j % 2 == 1 { Parity::Odd } else { Parity::Even }));
    ParityConfig::new(7, parities, max_level).expect("valid configuration")
}
