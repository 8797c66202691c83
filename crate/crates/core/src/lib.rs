pub mod netmodel;
pub mod preprocess;
pub mod contingency;
pub mod formulation;
pub mod validate;
pub mod report;
