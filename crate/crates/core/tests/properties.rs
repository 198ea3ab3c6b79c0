mod common;

#[test]
fn affine_fields_give_constant_smoothed_strain() {
    for (name, mesh) in common::patch_meshes() {
        let err = common::patch_error(&mesh);
        assert!(err <= 1e-10, "{name}: relative error {err:e}");
    }
}

#[test]
fn compressed_edges_release_nothing() {
    common::heaviside_gate(1000).unwrap();
}

#[test]
fn segments_along_the_principal_direction_release_nothing() {
    common::projection_annihilation(1000).unwrap();
}

#[test]
fn scaling_keeps_the_winning_candidate() {
    common::argmax_invariance(1000).unwrap();
}

#[test]
fn fronts_are_irreversible_and_connected() {
    let advances = common::front_properties(1000).unwrap();
    assert!(advances >= 1000, "only {advances} advances");
}
