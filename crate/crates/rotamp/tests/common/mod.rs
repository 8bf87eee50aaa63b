#![allow(dead_code)]

pub mod ledgers;
pub mod nc;
pub mod stats;
