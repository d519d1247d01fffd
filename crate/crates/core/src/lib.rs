pub mod grid;
pub mod params;
pub mod functionals;
pub mod oracle;
pub mod solver;
pub mod survey;
