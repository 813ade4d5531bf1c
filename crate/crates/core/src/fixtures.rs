//! Graphs used throughout the tests and the CLI examples.

pub const IV: &str = include_str!("../fixtures/iv.graph");
pub const SEQUENTIAL_IV: &str = include_str!("../fixtures/sequential_iv.graph");
pub const NESTED_LEFT: &str = include_str!("../fixtures/nested_left.graph");
pub const NESTED_RIGHT: &str = include_str!("../fixtures/nested_right.graph");
pub const FRONT_DOOR: &str = include_str!("../fixtures/front_door.graph");
pub const DUARTE: &str = include_str!("../fixtures/duarte.graph");
pub const TRIANGLE: &str = include_str!("../fixtures/triangle.graph");
pub const TRIPARTITE_BELL: &str = include_str!("../fixtures/tripartite_bell.graph");
pub const DISTRICTS: &str = include_str!("../fixtures/districts.graph");
pub const EXOGENIZE: &str = include_str!("../fixtures/exogenize.graph");
pub const ABSORB: &str = include_str!("../fixtures/absorb.graph");
pub const IV_TWO_LATENTS: &str = include_str!("../fixtures/iv_two_latents.graph");
pub const IV_TWO_LATENTS_HLP: &str = include_str!("../fixtures/iv_two_latents_hlp.graph");
pub const FACE_SPLIT: &str = include_str!("../fixtures/face_split.graph");

/// Every fixture by file stem.
pub const ALL: &[(&str, &str)] = &[
    ("iv", IV),
    ("sequential_iv", SEQUENTIAL_IV),
    ("nested_left", NESTED_LEFT),
    ("nested_right", NESTED_RIGHT),
    ("front_door", FRONT_DOOR),
    ("duarte", DUARTE),
    ("triangle", TRIANGLE),
    ("tripartite_bell", TRIPARTITE_BELL),
    ("districts", DISTRICTS),
    ("exogenize", EXOGENIZE),
    ("absorb", ABSORB),
    ("iv_two_latents", IV_TWO_LATENTS),
    ("iv_two_latents_hlp", IV_TWO_LATENTS_HLP),
    ("face_split", FACE_SPLIT),
];
