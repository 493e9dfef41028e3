#![allow(dead_code, unused_imports)]

use std::path::PathBuf;

use osgi_core::dsl::{parse_model, parse_protocol, ProtoSpec};
use osgi_core::model::SystemDef;

pub use osgi_oracle::gen::{permute_ids, random_model, random_walk};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("reading fixture {name}: {e}"))
}

pub fn model(name: &str) -> SystemDef {
    parse_model(&fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn proto(name: &str) -> ProtoSpec {
    parse_protocol(&fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

