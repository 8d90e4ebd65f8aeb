//! Shared fixtures for the criterion benchmarks.

use expsplit_core::{problem_by_label, DiscreteProblem, Grid, GridFunction};

/// Example 1 discretized on an `n × n` interior grid.
pub fn example_problem(n: usize) -> DiscreteProblem {
    let spec = problem_by_label("example1").expect("built-in problem");
    DiscreteProblem::new(&spec, Grid::square(n).expect("positive size")).expect("valid discretization")
}

/// A smooth, non-symmetric state to push through the kernels.
pub fn state(grid: Grid) -> GridFunction {
    grid.sample(|x, y| (3.0 * x).sin() * (5.0 * y).cos() + x * y)
}
