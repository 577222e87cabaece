use deaddrop_core::golden;

#[test]
fn standard_vectors_pass() {
    let recs = golden::parse(include_str!("data/suite_vectors.txt")).unwrap();
    assert_eq!(recs.len(), 12);
    for r in &recs {
        assert!(r.check().unwrap(), "{} failed", r.primitive);
    }
}

#[test]
fn perturbed_vectors_fail() {
    for mut r in golden::parse(include_str!("data/suite_vectors.txt")).unwrap() {
        let last = r.expected.len() - 1;
        r.expected[last] ^= 0x80;
        assert!(!r.check().unwrap(), "{} accepted a flipped output", r.primitive);
    }
}
