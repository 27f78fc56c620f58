//! Three chemistry operations for the static demo page in `www/`. Each
//! returns JSON text; the `*_json` functions carry the logic and are what
//! the native tests call.

use lcglue_core::chem::{
    check_valence, circular_fingerprint, compute_descriptors, parse_smiles, tanimoto, write_canonical_smiles, Descriptors,
};
use lcglue_core::eval::{lipinski_violations, qed_lite};
use lcglue_core::jtree::{decompose, verify_cover};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Profile {
    canonical: String,
    atoms: usize,
    bonds: usize,
    valence_ok: bool,
    descriptors: Descriptors,
    qed_lite: f64,
    lipinski_violations: u32,
}

pub fn profile_json(smiles: &str) -> Result<String, String> {
    let m = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let d = compute_descriptors(&m);
    let p = Profile {
        canonical: write_canonical_smiles(&m),
        atoms: m.atom_count(),
        bonds: m.bond_count(),
        valence_ok: check_valence(&m).ok,
        descriptors: d,
        qed_lite: qed_lite(&d),
        lipinski_violations: lipinski_violations(&d).0,
    };
    serde_json::to_string(&p).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TreeNode {
    label: String,
    atoms: Vec<usize>,
    ring: bool,
}

#[derive(Serialize)]
struct Tree {
    nodes: Vec<TreeNode>,
    edges: Vec<(usize, usize)>,
    root: usize,
    cover_ok: bool,
}

pub fn junction_tree_json(smiles: &str) -> Result<String, String> {
    let m = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let t = decompose(&m).map_err(|e| e.to_string())?;
    let tree = Tree {
        cover_ok: verify_cover(&m, &t).ok,
        nodes: t.nodes.iter().map(|c| TreeNode { label: c.label.clone(), atoms: c.atoms.clone(), ring: c.is_ring }).collect(),
        edges: t.edges.clone(),
        root: t.root,
    };
    serde_json::to_string(&tree).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Similarity {
    tanimoto: f64,
    bits_a: Vec<usize>,
    bits_b: Vec<usize>,
}

/// Radius-2 circular fingerprints of `nbits` (a power of two) and their
/// Tanimoto similarity.
pub fn similarity_json(a: &str, b: &str, nbits: usize) -> Result<String, String> {
    if !nbits.is_power_of_two() || nbits < 64 {
        return Err(format!("nbits must be a power of two of at least 64, got {nbits}"));
    }
    let fa = circular_fingerprint(&parse_smiles(a).map_err(|e| e.to_string())?, 2, nbits);
    let fb = circular_fingerprint(&parse_smiles(b).map_err(|e| e.to_string())?, 2, nbits);
    let s = Similarity { tanimoto: tanimoto(&fa, &fb), bits_a: fa.on_bits(), bits_b: fb.on_bits() };
    serde_json::to_string(&s).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn profile(smiles: &str) -> Result<String, JsError> {
    profile_json(smiles).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = junctionTree)]
pub fn junction_tree(smiles: &str) -> Result<String, JsError> {
    junction_tree_json(smiles).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn similarity(a: &str, b: &str, nbits: usize) -> Result<String, JsError> {
    similarity_json(a, b, nbits).map_err(|e| JsError::new(&e))
}
