//! Seeded random configurations for property tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Configuration;
use crate::C64;

/// Random unbalanced configuration with at most `max_necks` necks: 2 to 4
/// planes, positions in the disk of radius 2 kept at least 0.2 apart on the
/// same and adjacent planes, neck sizes in `[0.5, 2]`.
pub fn random_configuration<R: Rng>(rng: &mut R, max_necks: usize) -> Configuration {
    let max_necks = max_necks.max(1);
    let levels = rng.gen_range(2..=4usize.min(max_necks + 1));
    let rows = levels - 1;
    let total = rng.gen_range(rows..=max_necks.max(rows));
    let mut counts = vec![1usize; rows];
    for _ in rows..total {
        let i = rng.gen_range(0..rows);
        counts[i] += 1;
    }
    loop {
        let mut necks: Vec<Vec<C64>> = Vec::with_capacity(rows);
        let mut ok = true;
        'rows: for (i, n) in counts.iter().enumerate() {
            let mut row = Vec::with_capacity(*n);
            for _ in 0..*n {
                let mut tries = 0;
                loop {
                    let r = 2.0 * rng.gen::<f64>().sqrt();
                    let z = C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
                    let near = |other: &[C64]| other.iter().any(|w| (z - w).norm() < 0.2);
                    if !near(&row) && !(i > 0 && near(&necks[i - 1])) {
                        row.push(z);
                        break;
                    }
                    tries += 1;
                    if tries > 200 {
                        ok = false;
                        break 'rows;
                    }
                }
            }
            necks.push(row);
        }
        if !ok {
            continue;
        }
        let sizes: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.5..2.0)).collect();
        if let Ok(c) = Configuration::from_sizes(necks, &sizes) {
            return c;
        }
    }
}

/// `count` configurations from a fixed seed.
pub fn random_configurations(seed: u64, count: usize, max_necks: usize) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_configuration(&mut rng, max_necks)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::neck_sizes;

    #[test]
    fn seeded_configurations_are_reproducible_and_valid() {
        let a = random_configurations(7, 20, 8);
        assert_eq!(a, random_configurations(7, 20, 8));
        for c in &a {
            assert!(c.total_necks() <= 8);
            let sizes = neck_sizes(c).unwrap();
            assert!((1..c.levels()).all(|l| sizes.get(l) > 0.0));
        }
    }
}
