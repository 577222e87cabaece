//! Exhaustive comparison of `T1 |> T2` against the nested key at dim 2.
//!
//! Counts were produced by a standalone Python brute-force evaluator and
//! frozen here. The composed form does not agree with the nested form in
//! general, so the shipped NIKA uses the nested form.

use deaddrop_core::math::{
    compose, nika_shared_key, rdmpf, GroupMatrix, KeyPair, Matrix, NikaMode, Profile, PublicParams, ScalarSecret,
};
use num_bigint::BigUint;

struct Grid {
    p: u64,
    base_y: [[u64; 2]; 2],
    total: usize,
    compose_eq_nested: usize,
    nested_symmetric: usize,
    compose_symmetric: usize,
    nonzero_total: usize,
    nonzero_compose_eq_nested: usize,
}

const GRIDS: [Grid; 3] = [
    Grid {
        p: 7,
        base_y: [[1, 3], [3, 2]],
        total: 1296,
        compose_eq_nested: 780,
        nested_symmetric: 1296,
        compose_symmetric: 810,
        nonzero_total: 625,
        nonzero_compose_eq_nested: 208,
    },
    Grid {
        p: 11,
        base_y: [[1, 3], [3, 9]],
        total: 10000,
        compose_eq_nested: 2928,
        nested_symmetric: 10000,
        compose_symmetric: 1450,
        nonzero_total: 6561,
        nonzero_compose_eq_nested: 876,
    },
    Grid {
        p: 13,
        base_y: [[1, 3], [3, 9]],
        total: 20736,
        compose_eq_nested: 9664,
        nested_symmetric: 20736,
        compose_symmetric: 6184,
        nonzero_total: 14641,
        nonzero_compose_eq_nested: 5225,
    },
];

fn params(p: u64, base_y: [[u64; 2]; 2]) -> PublicParams {
    PublicParams::new(
        BigUint::from(p),
        Matrix::from_rows(&[[1, 2], [2, 4]]).unwrap(),
        Matrix::from_rows(&base_y).unwrap(),
        Matrix::from_rows(&[[2, 3], [4, 5]]).unwrap(),
        Profile::Test,
    )
    .unwrap()
}

fn rows(m: &GroupMatrix) -> Vec<Vec<u64>> {
    m.matrix().to_rows_u64().unwrap()
}

#[test]
fn composition_grid_counts() {
    for g in &GRIDS {
        let params = params(g.p, g.base_y);
        let q = g.p - 1;
        let (mut total, mut agree, mut nested_sym, mut compose_sym) = (0, 0, 0, 0);
        let (mut nz_total, mut nz_agree) = (0, 0);
        for ls in 0..q {
            for os in 0..q {
                for lr in 0..q {
                    for or in 0..q {
                        let s = KeyPair::from_secret(&params, ScalarSecret::from_u64(&params, ls, os).unwrap());
                        let r = KeyPair::from_secret(&params, ScalarSecret::from_u64(&params, lr, or).unwrap());
                        let ns = nika_shared_key(&params, &s, r.public(), NikaMode::Nested).unwrap();
                        let nr = nika_shared_key(&params, &r, s.public(), NikaMode::Nested).unwrap();
                        let cs = nika_shared_key(&params, &s, r.public(), NikaMode::Compose).unwrap();
                        let cr = nika_shared_key(&params, &r, s.public(), NikaMode::Compose).unwrap();
                        total += 1;
                        agree += usize::from(cs == ns);
                        nested_sym += usize::from(ns == nr);
                        compose_sym += usize::from(cs == cr);
                        if ls * os * lr * or != 0 {
                            nz_total += 1;
                            nz_agree += usize::from(cs == ns);
                        }
                    }
                }
            }
        }
        assert_eq!(total, g.total, "p={}", g.p);
        assert_eq!(nested_sym, g.nested_symmetric, "p={}", g.p);
        assert_eq!(agree, g.compose_eq_nested, "p={}", g.p);
        assert_eq!(compose_sym, g.compose_symmetric, "p={}", g.p);
        assert_eq!(nz_total, g.nonzero_total, "p={}", g.p);
        assert_eq!(nz_agree, g.nonzero_compose_eq_nested, "p={}", g.p);
    }
}

#[test]
fn unit_scalars_counterexample() {
    // All four scalars equal to 1: composed vs nested keys.
    let expected = [
        (7, [[1, 3], [3, 2]], vec![vec![5, 2], vec![1, 1]], vec![vec![5, 3], vec![4, 2]]),
        (11, [[1, 3], [3, 9]], vec![vec![1, 1], vec![10, 10]], vec![vec![1, 1], vec![1, 1]]),
        (13, [[1, 3], [3, 9]], vec![vec![11, 5], vec![4, 12]], vec![vec![10, 12], vec![9, 1]]),
    ];
    for (p, by, composed, nested) in expected {
        let params = params(p, by);
        let one = KeyPair::from_secret(&params, ScalarSecret::from_u64(&params, 1, 1).unwrap());
        let f = params.field();
        let t1 = rdmpf(f, &one.public().p, params.w(), &one.public().q).unwrap();
        assert_eq!(rows(&compose(f, &t1, &t1).unwrap()), composed, "p={p}");
        assert_eq!(rows(&nika_shared_key(&params, &one, one.public(), NikaMode::Nested).unwrap()), nested);
    }
}

#[test]
fn zero_scalar_counterexample_at_p7() {
    // (lambda_S, omega_S, lambda_R, omega_R) = (0, 1, 1, 0)
    let params = params(7, [[1, 3], [3, 2]]);
    let s = KeyPair::from_secret(&params, ScalarSecret::from_u64(&params, 0, 1).unwrap());
    let r = KeyPair::from_secret(&params, ScalarSecret::from_u64(&params, 1, 0).unwrap());
    let c = nika_shared_key(&params, &s, r.public(), NikaMode::Compose).unwrap();
    let n = nika_shared_key(&params, &s, r.public(), NikaMode::Nested).unwrap();
    assert_eq!(rows(&c), vec![vec![6, 1], vec![6, 1]]);
    assert_eq!(rows(&n), vec![vec![1, 1], vec![1, 1]]);
}
