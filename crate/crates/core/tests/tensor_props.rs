mod common;

use common::*;
use mpcanet_core::tensor::{fold, kron_chain, mode_multiply, multi_mode_multiply, unfold};
use mpcanet_core::{DenseMatrix, SeededRng};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfold_matches_index_oracle(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let t = random_tensor(&mut rng, &dims);
        for n in 0..dims.len() {
            let u = unfold(&t, n).unwrap();
            prop_assert_eq!(from_dense(&u), naive_unfold(&t, n));
            prop_assert_eq!(&fold(&u, n, &dims).unwrap(), &t);
        }
    }

    #[test]
    fn mode_product_matches_unfolded_product(dims in dims_strategy(), rows in 1usize..=4, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let t = random_tensor(&mut rng, &dims);
        for n in 0..dims.len() {
            let u = random_mat(&mut rng, rows, dims[n]);
            let y = mode_multiply(&t, &to_dense(&u), n).unwrap();
            let oracle = naive_mode_product(&t, &u, n);
            prop_assert!(y.data().iter().zip(oracle.data()).all(|(a, b)| (a - b).abs() < 1e-12));
            let lhs = naive_unfold(&y, n);
            let rhs = matmul(&u, &naive_unfold(&t, n));
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn full_kronecker_identity(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let t = random_tensor(&mut rng, &dims);
        let us: Vec<Mat> = dims.iter().map(|&d| random_mat(&mut rng, 1 + (d % 3), d)).collect();
        let dense: Vec<DenseMatrix> = us.iter().map(to_dense).collect();
        let pairs: Vec<(usize, &DenseMatrix)> = dense.iter().enumerate().collect();
        let y = multi_mode_multiply(&t, &pairs).unwrap();
        for n in 0..dims.len() {
            let others: Vec<&Mat> = us.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, u)| u).collect();
            let k = others.iter().skip(1).fold(
                others.first().map_or(vec![vec![1.0]], |m| (*m).clone()),
                |acc, m| naive_kron(&acc, m),
            );
            let rhs = matmul(&matmul(&us[n], &naive_unfold(&t, n)), &transpose(&k));
            prop_assert!(max_abs_diff(&naive_unfold(&y, n), &rhs) < 1e-12);
            if !others.is_empty() {
                let refs: Vec<&DenseMatrix> = dense.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, d)| d).collect();
                prop_assert!(max_abs_diff(&from_dense(&kron_chain(&refs).unwrap()), &k) == 0.0);
            }
        }
    }

    #[test]
    fn mode_product_is_linear(dims in dims_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let x = random_tensor(&mut rng, &dims);
        let y = random_tensor(&mut rng, &dims);
        let n = dims.len() - 1;
        let u = to_dense(&random_mat(&mut rng, 3, dims[n]));
        let combo = x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = mode_multiply(&combo, &u, n).unwrap();
        let rhs = mode_multiply(&x, &u, n).unwrap().scale(a)
            .add(&mode_multiply(&y, &u, n).unwrap().scale(b)).unwrap();
        prop_assert!(lhs.data().iter().zip(rhs.data()).all(|(p, q)| (p - q).abs() < 1e-11));
    }

    #[test]
    fn distinct_modes_commute(dims in prop::collection::vec(1usize..=4, 2..=4), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let t = random_tensor(&mut rng, &dims);
        let u0 = to_dense(&random_mat(&mut rng, 2, dims[0]));
        let u1 = to_dense(&random_mat(&mut rng, 3, dims[1]));
        let ab = multi_mode_multiply(&t, &[(0, &u0), (1, &u1)]).unwrap();
        let ba = multi_mode_multiply(&t, &[(1, &u1), (0, &u0)]).unwrap();
        prop_assert_eq!(ab.dims(), ba.dims());
        prop_assert!(ab.data().iter().zip(ba.data()).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn same_mode_composes_as_matrix_product(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let t = random_tensor(&mut rng, &dims);
        let a = random_mat(&mut rng, 2, 3);
        let b = random_mat(&mut rng, 3, dims[0]);
        let two = mode_multiply(&mode_multiply(&t, &to_dense(&b), 0).unwrap(), &to_dense(&a), 0).unwrap();
        let one = mode_multiply(&t, &to_dense(&matmul(&a, &b)), 0).unwrap();
        prop_assert!(two.data().iter().zip(one.data()).all(|(p, q)| (p - q).abs() < 1e-12));
    }
}
