//! Bundled synthetic vibration record for tests and demos.
//!
//! A seeded sum of sinusoids plus Gaussian noise, shaped like an
//! accelerometer capture of a lightly damped structure: a few modal lines
//! over a broadband floor, a small constant sensor bias, amplitudes in the
//! few-hundredths range. The recipe is fixed so that every byte of the
//! generated record is reproducible from `(n_samples, seed)`.

use crate::rng::Rng;

/// Nominal sampling rate of the synthetic record, Hz.
pub const SAMPLE_RATE: f64 = 1024.0;

/// Modal lines: (frequency Hz, amplitude). Phases are drawn from the seed.
pub const MODES: [(f64, f64); 4] = [
    (18.3, 0.0550),
    (47.9, 0.0440),
    (121.4, 0.0293),
    (233.0, 0.0183),
];

/// Standard deviation of the additive Gaussian floor.
pub const NOISE_STD: f64 = 0.018;

/// Constant sensor bias on the channel.
pub const DC_OFFSET: f64 = -0.013;

/// Generate `n` samples of the synthetic record.
pub fn generate_record(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::from_seed(seed);
    let phases: Vec<f64> = MODES
        .iter()
        .map(|_| rng.next_f64() * std::f64::consts::TAU)
        .collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / SAMPLE_RATE;
        let mut v = DC_OFFSET;
        for ((freq, amp), phase) in MODES.iter().zip(&phases) {
            v += amp * (std::f64::consts::TAU * freq * t + phase).sin();
        }
        v += NOISE_STD * rng.normal_f64();
        out.push(v);
    }
    out
}

/// Serialize samples as consecutive little-endian f32 values.
pub fn to_f32_bytes(samples: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(samples.len() * 4);
    for &s in samples {
        bytes.extend_from_slice(&(s as f32).to_le_bytes());
    }
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_record() {
        let a = generate_record(4096, 5);
        let b = generate_record(4096, 5);
        assert_eq!(a, b);
        let c = generate_record(4096, 6);
        assert_ne!(a, c);
    }

    #[test]
    fn record_matches_recipe_moments() {
        let rec = generate_record(262_144, 7);
        let n = rec.len() as f64;
        let mean: f64 = rec.iter().sum::<f64>() / n;
        let std = (rec.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        // sum of per-mode powers a^2/2 plus the noise floor
        let expected =
            (MODES.iter().map(|(_, a)| a * a / 2.0).sum::<f64>() + NOISE_STD * NOISE_STD).sqrt();
        assert!((mean - DC_OFFSET).abs() < 1e-3, "mean {mean}");
        assert!((std - expected).abs() / expected < 0.05, "std {std} vs {expected}");
    }

    #[test]
    fn f32_serialization_is_four_bytes_per_sample() {
        let rec = generate_record(1024, 1);
        assert_eq!(to_f32_bytes(&rec).len(), 4096);
    }
}
