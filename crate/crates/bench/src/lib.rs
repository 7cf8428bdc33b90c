//! Inputs shared by the benches.

use foldkit_core::lattice::LatticeMatrix;

/// Antisymmetric `n × n` matrix with entries from a fixed linear
/// congruential sequence, so every run times the same input.
pub fn antisymmetric(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = next();
            a[i][j] = v;
            a[j][i] = -v;
        }
    }
    a
}

/// A dense `k × n` integer matrix with entries in `[-9, 9]`.
pub fn integer_matrix(k: usize, n: usize) -> LatticeMatrix {
    let rows = (0..k).map(|i| (0..n).map(|j| ((7 * i + 3 * j * j + 1) % 19) as i64 - 9).collect()).collect();
    LatticeMatrix::from_rows(rows, n).expect("rows have n entries")
}
