use std::collections::HashSet;

use lcglue_core::chem::{circular_fingerprint, parse_smiles, Descriptors};
use lcglue_core::eval::{evaluate_samples, lipinski_violations, pca_2d, tsne_2d, uniqueness};
use proptest::prelude::*;

const POOL: &[&str] = &[
    "CCO", "OCC", "CCN", "c1ccccc1", "C(", "CC(=O)O", "C1CC1", "N#N#N", "CC(C)C", "O=C1CCCN1", "c1ccncc1", "CCCl",
    "C1CCCCC1", "CN", "xyz",
];

fn linear_alkane(n: usize) -> String {
    "C".repeat(n)
}

proptest! {
    #[test]
    fn fractions_stay_in_unit_interval(picks in prop::collection::vec(0..POOL.len(), 0..30), train in prop::collection::vec(0..POOL.len(), 0..5)) {
        let samples: Vec<String> = picks.iter().map(|&i| POOL[i].to_string()).collect();
        let training: HashSet<String> = train
            .iter()
            .filter_map(|&i| parse_smiles(POOL[i]).ok())
            .map(|m| lcglue_core::chem::write_canonical_smiles(&m))
            .collect();
        let r = evaluate_samples(&samples, &training);
        prop_assert_eq!(r.details.len(), samples.len());
        for f in [r.validity, r.uniqueness, r.novelty, r.mean_qed_lite, r.lipinski_rate].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&f), "{f}");
        }
        prop_assert!(r.novel <= r.unique && r.unique <= r.valid && r.valid <= r.total);
    }

    #[test]
    fn distinct_samples_are_fully_unique(lengths in prop::collection::btree_set(1usize..25, 1..10)) {
        let samples: Vec<String> = lengths.iter().map(|&n| linear_alkane(n)).collect();
        prop_assert_eq!(uniqueness(&samples), Some(1.0));
    }

    #[test]
    fn lipinski_count_is_monotone(mw in 0.0..900.0f64, logp in -3.0..9.0f64, hbd in 0u32..10, hba in 0u32..15, which in 0usize..4, bump in 0.0..500.0f64) {
        let base = Descriptors { mw, logp, hbd, hba, ..Descriptors::default() };
        let mut raised = base;
        match which {
            0 => raised.mw += bump,
            1 => raised.logp += bump / 50.0,
            2 => raised.hbd += (bump / 50.0) as u32,
            _ => raised.hba += (bump / 50.0) as u32,
        }
        prop_assert!(lipinski_violations(&raised).0 >= lipinski_violations(&base).0);
    }

    #[test]
    fn pca_ignores_point_order(rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 4..9), seed in any::<u64>()) {
        let proj = pca_2d(&rows).unwrap();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        // deterministic shuffle from the seed
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let proj2 = pca_2d(&permuted).unwrap();
        // axes with near-equal variance can rotate into each other; compare per-axis only when separated
        let var = |axis: usize, p: &[[f64; 2]]| p.iter().map(|x| x[axis] * x[axis]).sum::<f64>();
        let (v0, v1) = (var(0, &proj), var(1, &proj));
        for axis in 0..2 {
            if (v0 - v1).abs() < 1e-6 * (v0 + v1 + 1.0) || (axis == 1 && v1 < 1e-9 * (v0 + 1.0)) {
                continue;
            }
            for (k, &i) in order.iter().enumerate() {
                prop_assert!((proj[i][axis].abs() - proj2[k][axis].abs()).abs() < 1e-6, "axis {axis}");
            }
        }
    }
}

#[test]
fn tsne_separates_twenty_alkanes_from_twenty_polyaromatics() {
    let mut smiles: Vec<String> = (4..24).map(linear_alkane).collect();
    let cores = ["c1ccc2ccccc2c1", "c1ccc2cc3ccccc3cc2c1", "c1ccc2c(c1)ccc1ccccc12", "c1ccc2ccc3ccccc3c2c1"];
    let subs = ["", "C", "CC", "O", "N"];
    for core in cores {
        for s in subs {
            smiles.push(format!("{s}{core}"));
        }
    }
    assert_eq!(smiles.len(), 40);
    let pts: Vec<Vec<f64>> = smiles.iter().map(|s| circular_fingerprint(&parse_smiles(s).unwrap(), 2, 512).to_f64()).collect();
    let y = tsne_2d(&pts, 8.0, 500, 11).unwrap();
    let centroid = |r: std::ops::Range<usize>| {
        let k = r.len() as f64;
        r.fold([0.0, 0.0], |c, i| [c[0] + y[i][0] / k, c[1] + y[i][1] / k])
    };
    let (ca, cb) = (centroid(0..20), centroid(20..40));
    let inter = (ca[0] - cb[0]).hypot(ca[1] - cb[1]);
    let mut intra = 0.0;
    let mut pairs = 0.0;
    for group in [0..20, 20..40] {
        for i in group.clone() {
            for j in group.clone().filter(|&j| j > i) {
                intra += (y[i][0] - y[j][0]).hypot(y[i][1] - y[j][1]);
                pairs += 1.0;
            }
        }
    }
    let intra = intra / pairs;
    assert!(inter > intra, "inter {inter} intra {intra}");
}
