//! Seeded synthetic datasets used when real data are unavailable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::balance::BalanceSheetRecord;
use crate::model::{Category, FlowMatrix, NodeInfo};

pub const SYNTHETIC_SIZE: usize = 20;
pub const SYNTHETIC_SEED: u64 = 20;

/// The bundled 20x20 matrix, identical to `synthetic_trade_matrix(SYNTHETIC_SIZE, SYNTHETIC_SEED)`.
pub const SYNTHETIC_TRADE_CSV: &str = include_str!("../../data/synthetic_trade_20.csv");

/// Gravity-style trade matrix: `t_ij = m_i * m_j * e_ij` with log-normal masses and
/// noise, zero diagonal. Values are rounded to six significant digits so the CSV
/// form is exact.
pub fn synthetic_trade_matrix(n: usize, seed: u64) -> FlowMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass = LogNormal::new(0.0, 1.0).unwrap();
    let noise = LogNormal::new(0.0, 0.8).unwrap();
    let masses: Vec<f64> = (0..n).map(|_| mass.sample(&mut rng)).collect();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let t = 1e3 * masses[i] * masses[j] * noise.sample(&mut rng);
                weights[i * n + j] = format!("{t:.5e}").parse().unwrap();
            }
        }
    }
    let nodes = (0..n).map(|i| NodeInfo::generic(format!("C{i:02}"))).collect();
    FlowMatrix::new(nodes, weights).expect("valid by construction")
}

/// Two-tier banking profile for one year: `n_high` leading regional banks with
/// strengths around `n_low / n_high` and `n_low` second-tier banks around 1, so
/// both tiers carry similar volume. Under the default bank rules each tier is
/// forbidden from lending within itself.
pub fn two_tier_records(n_high: usize, n_low: usize, seed: u64) -> Vec<BalanceSheetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let high_scale = n_low as f64 / n_high.max(1) as f64;
    let mut records = Vec::with_capacity(n_high + n_low);
    for k in 0..n_high + n_low {
        let (category, scale, prefix) = if k < n_high {
            (Category::LeadingRegional, high_scale, "H")
        } else {
            (Category::SecondTierRegional, 1.0, "L")
        };
        records.push(BalanceSheetRecord {
            year: 2000,
            bank_id: format!("{prefix}{k:03}"),
            bank_name: String::new(),
            category,
            call_loan: scale * rng.gen_range(0.5..1.5),
            call_money: scale * rng.gen_range(0.5..1.5),
        });
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{read_trade_matrix, write_flow_matrix, TradeDataset};

    fn rendered() -> String {
        let mut buf = Vec::new();
        write_flow_matrix(&synthetic_trade_matrix(SYNTHETIC_SIZE, SYNTHETIC_SEED), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn bundled_file_matches_generator() {
        if std::env::var_os("ENTRENET_REGENERATE_DATA").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_trade_20.csv");
            std::fs::write(path, rendered()).unwrap();
            return;
        }
        assert_eq!(SYNTHETIC_TRADE_CSV, rendered());
        let d: TradeDataset<f64> = read_trade_matrix(SYNTHETIC_TRADE_CSV.as_bytes()).unwrap();
        assert_eq!(d.density(), 1.0);
    }

    #[test]
    fn two_tier_is_seeded() {
        let a = two_tier_records(3, 10, 1);
        assert_eq!(a, two_tier_records(3, 10, 1));
        assert_ne!(a, two_tier_records(3, 10, 2));
        assert!(a[..3].iter().all(|r| r.call_loan >= 0.5 * 10.0 / 3.0));
        assert!(a[3..].iter().all(|r| r.call_loan < 1.5));
    }
}
