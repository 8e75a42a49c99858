pub mod brute;
pub mod equivalence;
pub mod random;
