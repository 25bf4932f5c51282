#![allow(dead_code)]

pub mod exact_jordan;
pub mod jordan_cases;
