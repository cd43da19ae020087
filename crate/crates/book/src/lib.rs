//! Compiles the Rust snippets of the guide in `book/src` as doc-tests, one
//! module per chapter so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/series.md")]
pub mod series {}
#[doc = include_str!("../../../book/src/maps.md")]
pub mod maps {}
#[doc = include_str!("../../../book/src/normal-form.md")]
pub mod normal_form {}
#[doc = include_str!("../../../book/src/graph-transform.md")]
pub mod graph_transform {}
#[doc = include_str!("../../../book/src/shadowing.md")]
pub mod shadowing {}
#[doc = include_str!("../../../book/src/parameterization.md")]
pub mod parameterization {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
