#![allow(dead_code)]

pub mod sf22_reference;
