use lcglue_web::{junction_tree_json, profile_json, similarity_json};
use serde_json::Value;

#[test]
fn profile_of_paracetamol() {
    let v: Value = serde_json::from_str(&profile_json("CC(=O)Nc1ccc(O)cc1").unwrap()).unwrap();
    assert_eq!(v["atoms"], 11);
    assert_eq!(v["valence_ok"], true);
    assert_eq!(v["lipinski_violations"], 0);
    let q = v["qed_lite"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&q));
    // canonical output is a fixed point
    let again: Value = serde_json::from_str(&profile_json(v["canonical"].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!(again["canonical"], v["canonical"]);
    assert!(profile_json("C1CC").is_err());
}

#[test]
fn biphenyl_tree() {
    let v: Value = serde_json::from_str(&junction_tree_json("c1ccc(cc1)-c1ccccc1").unwrap()).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(v["edges"].as_array().unwrap().len(), 2);
    assert_eq!(v["cover_ok"], true);
}

#[test]
fn similarity_bounds() {
    let same: Value = serde_json::from_str(&similarity_json("CCO", "OCC", 1024).unwrap()).unwrap();
    assert_eq!(same["tanimoto"], 1.0);
    let diff: Value = serde_json::from_str(&similarity_json("CCO", "c1ccccc1", 1024).unwrap()).unwrap();
    assert!(diff["tanimoto"].as_f64().unwrap() < 0.5);
    assert!(similarity_json("CCO", "CCO", 1000).is_err());
}
