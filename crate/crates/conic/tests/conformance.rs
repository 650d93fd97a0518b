use disac_conic::conformance;
use disac_conic::ClarabelBackend;

#[test]
fn clarabel_passes_conformance_suite() {
    let results = conformance::run_all(&ClarabelBackend);
    let failures: Vec<_> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}
