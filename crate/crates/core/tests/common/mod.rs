#![allow(dead_code)]

use std::path::{Path, PathBuf};

use synroute_core::{BuildingBlockLibrary, TemplateSet};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn shipped() -> (BuildingBlockLibrary, TemplateSet) {
    (
        BuildingBlockLibrary::load(&data("library.smi")).unwrap(),
        TemplateSet::load(&data("rxn2.tsv")).unwrap(),
    )
}

/// Shipped templates restricted to `ids`, in that order.
pub fn templates(ids: &[&str]) -> TemplateSet {
    let all = TemplateSet::load(&data("rxn2.tsv")).unwrap();
    TemplateSet::new(
        ids.iter()
            .map(|id| all.get(all.index_of_id(id).unwrap()).clone())
            .collect(),
    )
    .unwrap()
}
