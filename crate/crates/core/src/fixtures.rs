//! Small reference instances with known solution paths.

use crate::dense::DenseMatrix;
use crate::problem::MinimaxQP;

fn shared_hessian() -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let g11 = DenseMatrix::from_rows(&[vec![-1.0, -1.0], vec![-1.0, 0.0]]);
    let g12 = DenseMatrix::from_rows(&[vec![2.0, -1.0, 0.0, 0.0], vec![1.0, 0.0, -1.0, 1.0]]);
    let g22 = DenseMatrix::from_rows(&[
        vec![-3.0, 1.0, 0.0, 1.0],
        vec![1.0, -1.0, 1.0, -1.0],
        vec![0.0, 1.0, -2.0, 2.0],
        vec![1.0, -1.0, 2.0, -4.0],
    ]);
    (g11, g12, g22)
}

/// Five constraints, `D G⁻¹ Dᵀ ⪯ 0`, unique solution
/// `z* = (2, −1, 0, 3, 0, −2)` with active set `{3}` (1-based).
pub fn example1() -> MinimaxQP {
    let (g11, g12, g22) = shared_hessian();
    let a = DenseMatrix::from_rows(&[
        vec![0.0, -1.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 0.0],
        vec![1.0, 0.0],
    ]);
    let b = DenseMatrix::from_rows(&[
        vec![0.0, 1.0, -2.0, 1.0],
        vec![2.0, 0.0, 0.0, 1.0],
        vec![2.0, -1.0, 2.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![2.0, 0.0, 0.0, -2.0],
    ]);
    MinimaxQP::new(
        g11,
        g12,
        g22,
        vec![6.0, 6.0],
        vec![0.0, 1.0, 4.0, -4.0],
        a,
        b,
        vec![-4.0, -1.0, 2.0, -1.0, -8.0],
    )
    .expect("example 1 is valid")
}

fn example2_with_h(h: Vec<f64>) -> MinimaxQP {
    let (g11, g12, g22) = shared_hessian();
    let a = DenseMatrix::from_rows(&[
        vec![0.0, -1.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![1.0, 0.0],
    ]);
    let b = DenseMatrix::from_rows(&[
        vec![0.0, 1.0, -2.0, 1.0],
        vec![2.0, 0.0, 0.0, 1.0],
        vec![2.0, -1.0, 2.0, 2.0],
        vec![2.0, 1.0, 0.0, 2.0],
    ]);
    MinimaxQP::new(
        g11,
        g12,
        g22,
        vec![3.0, 1.0],
        vec![1.0, 5.0, -6.0, 7.0],
        a,
        b,
        h,
    )
    .expect("example 2 is valid")
}

/// Four constraints with `D G⁻¹ Dᵀ` indefinite and two local solutions,
/// with active sets `{2}` and `{4}` (1-based).
///
/// The offset of constraint 4 is `−9`. With `+9` the instance has a single
/// solution (see [`example2_single_solution`]).
pub fn example2() -> MinimaxQP {
    example2_with_h(vec![-7.0, -5.0, 0.0, -9.0])
}

/// Example 2 with `h₄ = +9`; its only solution has active set `{1, 4}`.
pub fn example2_single_solution() -> MinimaxQP {
    example2_with_h(vec![-7.0, -5.0, 0.0, 9.0])
}

/// One variable per player, `G = diag(1, −1)`, `c = 0`, constraints
/// `−y + 1 ≤ 0` and `y ≤ 0`. Adding constraint 1 then selecting constraint 2
/// gives `r ≥ 0` and `δ = 0`, so the subproblem with both is infeasible.
pub fn infeasible() -> MinimaxQP {
    MinimaxQP::new(
        DenseMatrix::from_rows(&[vec![1.0]]),
        DenseMatrix::zeros(1, 1),
        DenseMatrix::from_rows(&[vec![-1.0]]),
        vec![0.0],
        vec![0.0],
        DenseMatrix::zeros(2, 1),
        DenseMatrix::from_rows(&[vec![-1.0], vec![1.0]]),
        vec![1.0, 0.0],
    )
    .expect("infeasible fixture is valid")
}

/// Looks up a fixture by name.
pub fn by_name(name: &str) -> Option<MinimaxQP> {
    match name {
        "example1" => Some(example1()),
        "example2" => Some(example2()),
        "example2-single" => Some(example2_single_solution()),
        "infeasible" => Some(infeasible()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["example1", "example2", "example2-single", "infeasible"];
