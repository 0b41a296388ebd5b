//! Counting functions, Dirichlet series, the Novikov complex and twisted Betti numbers.

mod betti;
mod complex;
mod counting;
mod series;

pub use betti::{betti_table, closed_form_betti, novikov_inequalities, BettiTable, InequalityLine, InequalityReport};
pub use complex::{assemble_complex, check_delta_squared, compute_complex, ComplexRun, D2Report, D2Violation, NovikovComplex};
pub use counting::{build_instanton_counting, build_orbit_counting, InstantonCounting, InstantonEntry, OrbitCounting, OrbitEntry};
pub use series::{abscissa_estimate, AbscissaEstimate, DirichletSeries, Term, EXPONENT_TOL};

#[cfg(test)]
mod tests;
