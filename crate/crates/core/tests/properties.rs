mod props;

#[test]
fn query_model_roundtrip() {
    props::query_model_roundtrip().unwrap();
}

#[test]
fn result_equality_is_an_equivalence() {
    props::result_equality_is_an_equivalence().unwrap();
}

#[test]
fn row_order_and_duplicates() {
    props::row_order_and_duplicates().unwrap();
}

#[test]
fn catalog_build_is_idempotent() {
    props::catalog_build_is_idempotent().unwrap();
}

#[test]
fn positive_labelers_imply_groups() {
    props::positive_labelers_imply_groups().unwrap();
}

#[test]
fn failing_backend_never_flags() {
    props::failing_backend_never_flags().unwrap();
}
