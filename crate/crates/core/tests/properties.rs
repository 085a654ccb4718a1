mod common;

use nalgebra::SymmetricEigen;
use proptest::prelude::*;

use common::{
    fd_gradient, fd_hessian, poly_derivative, poly_value, polynomial, random_support, rel,
};

use nonlocal::assembly::{assemble_strong, laplacian_terms, Constraint, WeakForm};
use nonlocal::materials::{poisson, Material, NeoHooke, VonKarman};
use nonlocal::multi_index::{monomial_vector, scaling_matrix, MultiIndexSet};
use nonlocal::operators::{build_operators, OperatorOptions};
use nonlocal::point_cloud::{
    brute_force_nearest, build_grid, build_supports, default_neighbor_count, BoxDomain, KdTree,
    WeightKind,
};

fn case() -> impl Strategy<Value = (usize, usize, f64, u64, Vec<f64>)> {
    (
        1usize..=3,
        1usize..=4,
        0.0..0.45f64,
        any::<u64>(),
        prop::collection::vec(-1.0..1.0f64, 8),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operators_reproduce_polynomials((dim, n, perturb, seed, coefs) in case()) {
        let s = random_support(dim, n, perturb, seed, WeightKind::Gaussian).expect("jittered lattice support is regular");
        let terms = polynomial(dim, n, &coefs);
        let u: Vec<f64> = (0..s.cloud.len()).map(|i| poly_value(&terms, s.cloud.point(i))).collect();
        let d = s.op.derivatives(&s.op.gather(&u)).unwrap();
        let x = s.cloud.point(s.center);
        for (row, alpha) in s.set.indexes().iter().enumerate() {
            let exact = poly_derivative(&terms, alpha, x);
            prop_assert!((d[row] - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{alpha:?}: {} vs {exact}", d[row]);
        }
    }

    #[test]
    fn stabilization_is_psd_and_blind_to_polynomials((dim, n, perturb, seed, coefs) in case()) {
        let s = random_support(dim, n, perturb, seed, WeightKind::Constant).expect("regular support");
        let st = s.op.stabilization.as_ref().unwrap();
        let m = &st.m;
        let norm = m.norm();
        prop_assert!((m - m.transpose()).norm() <= 1e-12 * norm);
        let eig = SymmetricEigen::new(m.clone());
        prop_assert!(eig.eigenvalues.min() >= -1e-10 * norm, "min eigenvalue {}", eig.eigenvalues.min());

        let terms = polynomial(dim, n, &coefs);
        let stacked: Vec<f64> = s.op.stencil.iter().map(|&j| poly_value(&terms, s.cloud.point(j))).collect();
        let du2: f64 = stacked[1..].iter().map(|v| (v - stacked[0]).powi(2)).sum();
        prop_assert!(st.fit_residual_energy(&stacked).abs() <= 1e-10 * norm * du2.max(1e-300));

        let k = st.hourglass_stiffness(2.5);
        let scale = k.norm();
        for r in 0..k.nrows() {
            prop_assert!(k.row(r).sum().abs() <= 1e-12 * scale);
        }
        let ones = vec![1.0; s.op.stencil.len()];
        prop_assert!(st.fit_residual_energy(&ones).abs() <= 1e-12 * norm);
    }

    #[test]
    fn kdtree_matches_brute_force(
        dim in 1usize..=4,
        coords in prop::collection::vec(-1.0..1.0f64, 4..400),
        query in prop::collection::vec(-1.2..1.2f64, 4),
        k in 1usize..20,
    ) {
        let n = coords.len() / dim;
        let coords = &coords[..n * dim];
        let q = &query[..dim];
        let k = k.min(n);
        let tree = KdTree::new(dim, coords);
        prop_assert_eq!(tree.nearest(q, k, None), brute_force_nearest(dim, coords, q, k, None));
        if n > 1 {
            let k = k.min(n - 1);
            prop_assert_eq!(tree.nearest(&coords[..dim], k, Some(0)), brute_force_nearest(dim, coords, &coords[..dim], k, Some(0)));
        }
    }

    #[test]
    fn monomials_scale_with_h(
        dim in 1usize..=4,
        n in 1usize..=5,
        r in prop::collection::vec(-2.0..2.0f64, 4),
        h in 0.05..3.0f64,
    ) {
        let set = MultiIndexSet::new(dim, n).unwrap();
        let r = &r[..dim];
        let p = monomial_vector(&set, r, h).unwrap();
        let p1 = monomial_vector(&set, r, 1.0).unwrap();
        let s = scaling_matrix(&set, h).unwrap();
        for (row, alpha) in set.indexes().iter().enumerate() {
            let order: u32 = alpha.iter().sum();
            let raw: f64 = alpha.iter().zip(r).map(|(&e, x)| x.powi(e as i32)).product();
            prop_assert!((p[row] * h.powi(order as i32) - raw).abs() <= 1e-12 * raw.abs().max(1.0));
            prop_assert!((p1[row] - raw).abs() <= 1e-12 * raw.abs().max(1.0));
            let fact: f64 = alpha.iter().map(|&e| (1..=e).product::<u32>() as f64).product();
            prop_assert!((s.diag[row] - h.powi(order as i32) / fact).abs() <= 1e-14 * s.diag[row].max(1.0));
        }
    }
}

fn check_material(m: &dyn Material, du: &[f64]) -> (f64, f64) {
    let g = m.first_derivative(du).unwrap();
    let e_g = rel(g.as_slice(), &fd_gradient(m, du, 1e-6));
    let k = m.second_derivative(du).unwrap();
    let e_k = rel(k.as_slice(), fd_hessian(m, du, 1e-6).as_slice());
    (e_g, e_k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn neo_hooke_derivatives_match_finite_differences(du in prop::collection::vec(-0.3..0.3f64, 9), kappa in 1.0..1e3f64, mu in 0.1..10.0f64) {
        let m = NeoHooke::new(kappa, mu).unwrap();
        let (eg, ek) = check_material(&m, &du);
        prop_assert!(eg < 1e-6 && ek < 1e-6, "{eg} {ek}");
    }

    #[test]
    fn von_karman_derivatives_match_finite_differences(du in prop::collection::vec(-0.5..0.5f64, 16)) {
        let m = VonKarman::new(1.0, 0.3, 0.1).unwrap();
        let du = &du[..m.selector().len()];
        let (eg, ek) = check_material(&m, du);
        prop_assert!(eg < 1e-6 && ek < 1e-6, "{eg} {ek}");
    }

    #[test]
    fn quadratic_derivatives_match_finite_differences(du in prop::collection::vec(-2.0..2.0f64, 3)) {
        let m = poisson(3);
        let (eg, ek) = check_material(&m, &du);
        prop_assert!(eg < 1e-8 && ek < 1e-8, "{eg} {ek}");
    }

    #[test]
    fn weak_form_force_and_stiffness_match_finite_differences(seed in any::<u64>(), u in prop::collection::vec(-0.02..0.02f64, 192)) {
        let cloud = build_grid(&BoxDomain::unit(3), &[4, 4, 4], 0.2, seed).unwrap();
        let supports = build_supports(&cloud, default_neighbor_count(3, 1).unwrap(), WeightKind::Gaussian).unwrap();
        let ops = build_operators(&cloud, &supports, &OperatorOptions::new(1).with_stabilization(true)).unwrap();
        let mat = NeoHooke::new(50.0, 2.0).unwrap();
        let form = WeakForm::new(&cloud, &ops, &mat).unwrap().with_hourglass(vec![2.0; cloud.len()]).unwrap();
        let f = form.internal_force(&u).unwrap();
        let step = 1e-6;
        let mut fd = vec![0.0; u.len()];
        for (k, v) in fd.iter_mut().enumerate() {
            let (mut p, mut q) = (u.clone(), u.clone());
            p[k] += step;
            q[k] -= step;
            *v = (form.energy(&p).unwrap() - form.energy(&q).unwrap()) / (2.0 * step);
        }
        prop_assert!(rel(&f, &fd) < 1e-6, "force {}", rel(&f, &fd));

        let k = form.stiffness(&u).unwrap();
        prop_assert!(k.is_symmetric(1e-10 * k.norm_inf()));
        for col in [0usize, 37, 100, 191] {
            let (mut p, mut q) = (u.clone(), u.clone());
            p[col] += step;
            q[col] -= step;
            let fp = form.internal_force(&p).unwrap();
            let fq = form.internal_force(&q).unwrap();
            let fd_col: Vec<f64> = fp.iter().zip(&fq).map(|(a, b)| (a - b) / (2.0 * step)).collect();
            let col_k: Vec<f64> = (0..u.len()).map(|r| k.get(r, col)).collect();
            prop_assert!(rel(&col_k, &fd_col) < 1e-6, "column {col}: {}", rel(&col_k, &fd_col));
        }
    }

    #[test]
    fn strong_form_applies_exact_operator_to_polynomials(seed in any::<u64>(), perturb in 0.0..0.4f64, coefs in prop::collection::vec(-1.0..1.0f64, 8)) {
        let cloud = build_grid(&BoxDomain::unit(2), &[12, 12], perturb, seed).unwrap();
        let supports = build_supports(&cloud, default_neighbor_count(2, 3).unwrap(), WeightKind::Gaussian).unwrap();
        let ops = build_operators(&cloud, &supports, &OperatorOptions::new(3)).unwrap();
        let terms = polynomial(2, 3, &coefs);
        let constraints: Vec<Constraint> = cloud.tagged("boundary").into_iter().map(|i| Constraint { dof: i, value: 0.0 }).collect();
        let sys = assemble_strong(&cloud, &ops, &laplacian_terms(2, 1.0), None, &|_| 0.0, &constraints).unwrap();
        let u: Vec<f64> = (0..cloud.len()).map(|i| poly_value(&terms, cloud.point(i))).collect();
        let au = sys.matrix.mul_vec(&u);
        for i in 0..cloud.len() {
            let x = cloud.point(i);
            let want = if cloud.has_tag(i, "boundary") {
                u[i]
            } else {
                poly_derivative(&terms, &[2, 0], x) + poly_derivative(&terms, &[0, 2], x)
            };
            prop_assert!((au[i] - want).abs() <= 1e-8 * want.abs().max(1.0), "point {i}: {} vs {want}", au[i]);
        }
    }
}
