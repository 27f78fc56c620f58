use lcglue_core::chem::{parse_fragment, read_smiles_lines, write_canonical_smiles, Molecule};
use lcglue_core::jtree::{build_vocabulary, decompose, verify_cover, Vocabulary};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<Molecule> {
    read_smiles_lines(include_str!("../data/desk_corpus.smi"))
        .into_iter()
        .map(|(_, r)| r.unwrap())
        .collect()
}

#[test]
fn every_corpus_tree_is_a_valid_cover() {
    for m in corpus() {
        let t = decompose(&m).unwrap();
        let r = verify_cover(&m, &t);
        assert!(r.ok, "{}: {}", m.source_text(), r.violation.unwrap());
        for &(u, v) in &t.edges {
            let shared = t.shared_atoms(u, v);
            let expected: Vec<usize> = t.nodes[u]
                .atoms
                .iter()
                .copied()
                .filter(|a| t.nodes[v].atoms.contains(a))
                .collect();
            assert!(!shared.is_empty());
            assert_eq!(shared, expected);
        }
    }
}

#[test]
fn decomposition_is_deterministic() {
    for m in corpus() {
        assert_eq!(decompose(&m).unwrap(), decompose(&m).unwrap());
    }
}

#[test]
fn every_label_reparses_to_itself() {
    for m in corpus() {
        for node in decompose(&m).unwrap().nodes {
            let frag = parse_fragment(&node.label).unwrap();
            assert_eq!(write_canonical_smiles(&frag), node.label, "{}", m.source_text());
        }
    }
}

#[test]
fn corpus_vocabulary_round_trips() {
    let v = build_vocabulary(&corpus()).unwrap();
    assert!(v.len() > 20);
    let back = Vocabulary::from_tsv(&v.to_tsv()).unwrap();
    assert_eq!(back.to_tsv(), v.to_tsv());
    let counts = v.counts();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Relabelling atoms permutes cliques but leaves the label multiset and
    /// tree shape untouched.
    #[test]
    fn labels_survive_relabelling(idx in 0usize..250, seed in any::<u64>()) {
        let m = corpus().swap_remove(idx);
        let mut order: Vec<usize> = (0..m.atom_count()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = m.permuted(&order);
        let (a, b) = (decompose(&m).unwrap(), decompose(&p).unwrap());
        let mut la: Vec<_> = a.nodes.iter().map(|c| c.label.clone()).collect();
        let mut lb: Vec<_> = b.nodes.iter().map(|c| c.label.clone()).collect();
        la.sort();
        lb.sort();
        prop_assert_eq!(la, lb);
        prop_assert_eq!(a.edges.len(), b.edges.len());
        prop_assert!(verify_cover(&p, &b).ok);
    }
}
