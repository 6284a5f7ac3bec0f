pub mod graph;
pub mod learners;
pub mod perturb;
pub mod wl;
pub mod target;
pub mod attack;
pub mod synth;
pub mod bench;
pub mod cli;
