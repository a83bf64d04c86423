#![allow(dead_code)]

pub mod enumerate;
