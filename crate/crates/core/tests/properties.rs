//! Property tests over randomly generated inputs.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix3};
use proptest::prelude::*;

use curvlab::conformal::{weight_identity_residual, WeightedFunction};
use curvlab::expr::Expr;
use curvlab::fourdim::{hodge_split, weyl_split, Orientation, TwoForm4};
use curvlab::spectral::{smallest_eigenpair, Laplacian, PeriodicGrid};
use curvlab::tensor::{
    decompose_curvature, decomposition_residuals, end_lambda2_norm, kulkarni_nomizu, norm,
    restrict_tensor, tracefree3_bound_check, CurvTensor, MetricAtPoint, Tensor, TraceFreeSym3,
};

fn metric_from(entries: &[f64], n: usize) -> MetricAtPoint {
    let a = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    MetricAtPoint::new(&a * a.transpose() + DMatrix::identity(n, n) * 0.5).unwrap()
}

fn sym_from(entries: &[f64], n: usize) -> Tensor {
    Tensor::from_fn(2, n, |ix| 0.5 * (entries[ix[0] * n + ix[1]] + entries[ix[1] * n + ix[0]]))
}

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

/// Leaf and operator choices for random DSL expressions.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..100).prop_map(|v| format!("{}", v as f64 / 4.0)),
        (1usize..=3).prop_map(|i| format!("x{i}")),
        Just("pi".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]))
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner, prop::sample::select(vec!["-", "sin", "cos", "exp", "sqrt"]))
                .prop_map(|(a, f)| if f == "-" { format!("-({a})") } else { format!("{f}({a})") }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expression_print_parse_round_trip(text in expr_text(), x in entries(3)) {
        let e = Expr::parse(&text).unwrap();
        let printed = e.to_string();
        let again = Expr::parse(&printed).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(again.to_string(), printed);
        match (e.eval(&x), again.eval(&x)) {
            (Ok(a), Ok(b)) => prop_assert!(a == b || (a.is_nan() && b.is_nan())),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn restriction_never_increases_norm(
        n in 3usize..=6,
        rank in 1usize..=4,
        k_frac in 0.0f64..1.0,
        seed_entries in entries(36),
        data in entries(1296),
        dirs in entries(36),
    ) {
        let g = metric_from(&seed_entries, n);
        let s = Tensor::from_vec(rank, n, data[..n.pow(rank as u32)].to_vec()).unwrap();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        // g-orthonormalise k random directions.
        let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
        for c in 0..n {
            if cols.len() == k {
                break;
            }
            let mut v = nalgebra::DVector::from_fn(n, |i, _| dirs[c * n + i] + if i == c { 2.0 } else { 0.0 });
            for _ in 0..2 {
                for u in &cols {
                    let p = (v.transpose() * g.matrix() * u)[(0, 0)];
                    v -= u * p;
                }
            }
            let len = (v.transpose() * g.matrix() * &v)[(0, 0)].sqrt();
            cols.push(v / len);
        }
        let frame = DMatrix::from_columns(&cols);
        let restricted = restrict_tensor(&s, &g, &frame).unwrap();
        let lhs = norm(&restricted, &MetricAtPoint::identity(cols.len())).unwrap();
        prop_assert!(lhs <= norm(&s, &g).unwrap() + 1e-12);
    }

    #[test]
    fn curvature_decomposition_is_orthogonal(n in 4usize..=6, m in entries(36), h in entries(36), k in entries(36)) {
        let g = metric_from(&m, n);
        let r = kulkarni_nomizu(&sym_from(&h, n), &sym_from(&k, n)).unwrap();
        let d = decompose_curvature(&r, &g).unwrap();
        let res = decomposition_residuals(&r, &d, &g).unwrap();
        let scale = res.norm_sq.max(1e-12);
        prop_assert!(res.reconstruction <= 1e-10 * scale.sqrt());
        prop_assert!(res.weyl_dot_zg <= 1e-10 * scale);
        prop_assert!(res.weyl_dot_gg <= 1e-10 * scale);
        prop_assert!(res.zg_dot_gg <= 1e-10 * scale);
        prop_assert!(res.weyl_ricci_trace <= 1e-10 * scale.sqrt());
        // End(Λ²) norm is half the tensor norm.
        let wt = norm(d.weyl.tensor(), &g).unwrap();
        prop_assert!((2.0 * end_lambda2_norm(&d.weyl, &g).unwrap() - wt).abs() <= 1e-10 * wt.max(1.0));
    }

    #[test]
    fn weight_minus_two_identity(n in 3usize..=5, m in entries(25), t in entries(25), u in 0.1f64..5.0) {
        let g = metric_from(&m, n);
        let comps: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| t[i * n + j]).collect()).collect();
        let f = WeightedFunction::constant_tensor(&comps);
        let x = vec![0.0; n];
        prop_assert!(weight_identity_residual(&f, &x, &g, None, None, u).unwrap() <= 1e-12);
    }

    #[test]
    fn hodge_split_is_orthogonal(m in entries(16), w in entries(16), reversed in any::<bool>()) {
        let g = metric_from(&m, 4);
        let a = DMatrix::from_fn(4, 4, |i, j| w[i * 4 + j]);
        let o = if reversed { Orientation::Reversed } else { Orientation::Standard };
        let f = TwoForm4::new(&a - a.transpose(), g, o).unwrap();
        let (p, q) = hodge_split(&f);
        let scale = f.norm_sq().max(1.0);
        prop_assert!((p.norm_sq() + q.norm_sq() - f.norm_sq()).abs() <= 1e-12 * scale);
        prop_assert!(p.inner(&q).abs() <= 1e-12 * scale);
        prop_assert!((p.hodge_star().components() - p.components()).amax() <= 1e-12 * scale);
    }

    #[test]
    fn weyl_blocks_obey_sharp_bound(m in entries(16), h in entries(16), k in entries(16), w in entries(3)) {
        let g = metric_from(&m, 4);
        let r = kulkarni_nomizu(&sym_from(&h, 4), &sym_from(&k, 4)).unwrap();
        let d = decompose_curvature(&r, &g).unwrap();
        let split = weyl_split(&d.weyl, &g, Orientation::Standard).unwrap();
        let scale = norm(d.weyl.tensor(), &g).unwrap().max(1.0);
        prop_assert!(split.reassembly_residual <= 1e-10 * scale);
        prop_assert!(split.projection_defect <= 1e-10 * scale);
        let omega = [w[0], w[1], w[2]];
        for block in [&split.w_plus, &split.w_minus] {
            let (lhs, rhs) = tracefree3_bound_check(block, &omega);
            prop_assert!(lhs <= rhs + 1e-12 * scale);
        }
        let rev = weyl_split(&d.weyl, &g, Orientation::Reversed).unwrap();
        prop_assert!((rev.plus_norm() - split.minus_norm()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn tracefree_bound(a in entries(9), w in entries(3)) {
        let m = Matrix3::from_row_slice(&a);
        let s = (m + m.transpose()) * 0.5;
        let t = TraceFreeSym3::new(s - Matrix3::identity() * (s.trace() / 3.0)).unwrap();
        let (lhs, rhs) = tracefree3_bound_check(&t, &[w[0], w[1], w[2]]);
        prop_assert!(lhs <= rhs + 1e-12);
    }
}

fn grid_potential(grid: &PeriodicGrid, coeffs: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let p = grid.node(i);
            coeffs[0] + coeffs[1] * p[0].sin() + coeffs[2] * (p[1] + p[0]).cos() + coeffs[3] * (2.0 * p[1]).sin()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn principal_eigenvalue_is_monotone_in_the_potential(c in entries(4), bump in entries(4)) {
        let grid = PeriodicGrid::flat(&[12, 12], &[TAU, TAU]).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let v = grid_potential(&grid, &c);
        let extra: Vec<f64> = grid_potential(&grid, &bump).iter().map(|b| b.abs()).collect();
        let w: Vec<f64> = v.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let lo = smallest_eigenpair(&lap, &v).unwrap();
        let hi = smallest_eigenpair(&lap, &w).unwrap();
        prop_assert!(lo.mu <= hi.mu + 1e-10);
        let max_extra = extra.iter().copied().fold(0.0, f64::max);
        prop_assert!(hi.mu <= lo.mu + max_extra + 1e-10);
    }

    #[test]
    fn principal_eigenfunction_is_positive(c in entries(4), scale in 0.1f64..4.0) {
        let grid = PeriodicGrid::flat(&[16, 8], &[TAU, TAU]).unwrap();
        let lap = Laplacian::build(&grid).unwrap();
        let v: Vec<f64> = grid_potential(&grid, &c).iter().map(|x| scale * x).collect();
        let r = smallest_eigenpair(&lap, &v).unwrap();
        prop_assert!(r.min_u > 0.0);
        prop_assert!(r.residual <= 1e-10);
    }
}

#[test]
fn curv_tensor_rejects_broken_symmetries() {
    let mut t = Tensor::zeros(4, 3);
    t.set(&[0, 1, 0, 1], 1.0);
    assert!(CurvTensor::new(t).is_err());
}
