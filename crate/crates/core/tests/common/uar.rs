//! Brute-force recall oracle for the UAR metric.

use std::collections::BTreeMap;

use emoaug_core::classifier::compute_uar;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn brute_force_uar(pairs: &[(String, String)]) -> f64 {
    let mut per_class: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for (r, p) in pairs {
        let e = per_class.entry(r.as_str()).or_default();
        e.1 += 1;
        if r == p {
            e.0 += 1;
        }
    }
    let mut sum = 0.0;
    for (hits, total) in per_class.values() {
        sum += *hits as f64 / *total as f64;
    }
    sum / per_class.len() as f64
}

fn random_pairs(rng: &mut ChaCha8Rng) -> Vec<(String, String)> {
    let k = rng.random_range(2..9);
    let extra = rng.random_range(0..3);
    let mut pairs = Vec::new();
    for c in 0..k {
        for _ in 0..rng.random_range(1..30) {
            let p = rng.random_range(0..k + extra);
            pairs.push((format!("c{c}"), format!("c{p}")));
        }
    }
    pairs.shuffle(rng);
    pairs
}

/// Counts of (configurations, failures) for the exact oracle, duplication
/// invariance, relabeling invariance and row-sum consistency.
pub fn uar_checks(configs: usize, seed: u64) -> Vec<(&'static str, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fails = [0usize; 4];
    for _ in 0..configs {
        let pairs = random_pairs(&mut rng);
        let report = compute_uar(&pairs).unwrap();
        if report.uar != brute_force_uar(&pairs) {
            fails[0] += 1;
        }

        let factors: BTreeMap<String, usize> =
            report.classes.iter().map(|c| (c.clone(), rng.random_range(1..6))).collect();
        let scaled: Vec<(String, String)> =
            pairs.iter().flat_map(|p| std::iter::repeat_n(p.clone(), factors[&p.0])).collect();
        let scaled_report = compute_uar(&scaled).unwrap();
        if scaled_report.uar != report.uar || scaled_report.recall != report.recall {
            fails[1] += 1;
        }

        let mut names: Vec<String> = report.predicted_labels.clone();
        names.shuffle(&mut rng);
        let rename: BTreeMap<&String, String> =
            report.predicted_labels.iter().zip(&names).map(|(a, b)| (a, format!("z{b}"))).collect();
        let renamed: Vec<(String, String)> = pairs.iter().map(|(r, p)| (rename[r].clone(), rename[p].clone())).collect();
        if (compute_uar(&renamed).unwrap().uar - report.uar).abs() > 1e-12 {
            fails[2] += 1;
        }

        let rows_ok = report.confusion.iter().zip(&report.support).all(|(row, &s)| row.iter().sum::<u64>() == s)
            && report.support.iter().sum::<u64>() == pairs.len() as u64;
        if !rows_ok {
            fails[3] += 1;
        }
    }
    vec![
        ("matches brute force exactly", fails[0]),
        ("class-size rescaling invariant", fails[1]),
        ("relabeling invariant", fails[2]),
        ("confusion rows sum to support", fails[3]),
    ]
}
