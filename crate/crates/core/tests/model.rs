mod common;

use elex_core::FittedModel;

#[test]
fn saved_model_reloads_bit_identically() {
    let f = common::expansion_fixture(12, 30, 5, 6);
    let json = f.model.to_json();
    let back = FittedModel::from_json(&json, "mem").unwrap();
    assert_eq!(back.to_json(), json);
    assert_eq!(back.cluster.pca, f.model.cluster.pca);
    assert_eq!(back.cluster.gmm.params(), f.model.cluster.gmm.params());
    assert_eq!(back.stats, f.model.stats);
    for w in &f.candidates {
        let v = f.table.get(w).unwrap();
        assert_eq!(back.cluster.posterior(v).unwrap(), f.model.cluster.posterior(v).unwrap());
    }
}

#[test]
fn malformed_models_are_rejected() {
    let f = common::expansion_fixture(13, 30, 1, 6);
    let text = String::from_utf8(f.model.to_json()).unwrap();
    assert!(FittedModel::from_json(b"{}", "mem").is_err());
    let bad_dim = text.replacen("\"dim\":6", "\"dim\":7", 1);
    assert!(FittedModel::from_json(bad_dim.as_bytes(), "mem").is_err());
}
