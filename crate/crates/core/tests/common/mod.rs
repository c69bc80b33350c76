#![allow(dead_code)]

pub mod ddouble;
pub mod oracle;
