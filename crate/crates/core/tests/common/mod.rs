//! Test-only oracles, independent of the library's closed forms.
#![allow(dead_code)]

pub mod oracles;
pub mod quadrature;
