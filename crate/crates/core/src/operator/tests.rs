use super::*;
use crate::linalg::{dot, Matrix};
use crate::tensor::{anti_invariant_part, AcsMatrix, SymTensor};
use core::f64::consts::PI;
use proptest::prelude::*;

fn kt(n: usize, nt: usize) -> KtOperator {
    KtOperator::new(KtGrid::kodaira_thurston(n, nt, 1.0).unwrap(), Variant::KodairaThurston).unwrap()
}

fn patch_op(n: usize, h: f64, origin: [f64; 4]) -> KtOperator {
    KtOperator::new(KtGrid::patch(n, n, h, h, origin).unwrap(), Variant::KodairaThurston).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Lcg(u64);
impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
    fn field(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next()).collect()
    }
}

#[test]
fn constants_and_kt_residuals() {
    let op = kt(4, 4);
    let one = vec![1.0; op.grid().len()];
    for d in op.frame_derivatives(&one).unwrap() {
        assert!(max_abs(&d) < 1e-12);
    }
    let r = op.adjoint_ds(&one).unwrap();
    let expected = [0.25, 0.5, 0.0, 0.0, 0.0, 0.0];
    for c in 0..6 {
        assert!(r.comps[c].iter().all(|v| (v - expected[c]).abs() < 1e-12), "component {c}");
    }
    let flat = KtOperator::new(KtGrid::flat_torus(4, 2.0 * PI).unwrap(), Variant::Flat).unwrap();
    let r = flat.adjoint_ds(&one).unwrap();
    assert!(r.comps.iter().all(|c| max_abs(c) == 0.0));
    let zero = vec![0.0; op.grid().len()];
    assert!(op.kernel_system_residual(&zero).unwrap().iter().all(|&v| v == 0.0));
    assert!(op.forward_ds(&AntiInvariantField::zeros(op.grid().len())).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn topology_and_length_errors() {
    let twisted = KtGrid::kodaira_thurston(4, 4, 1.0).unwrap();
    assert_eq!(KtOperator::new(twisted, Variant::Flat), Err(OperatorError::TopologyMismatch));
    let periodic = KtGrid::flat_torus(4, 1.0).unwrap();
    assert_eq!(KtOperator::new(periodic, Variant::KodairaThurston), Err(OperatorError::TopologyMismatch));
    assert!(matches!(kt(4, 4).adjoint_ds(&[1.0; 3]), Err(OperatorError::FieldLength { expected: 256, got: 3 })));
}

#[test]
fn r_minus_is_anti_invariant_part_of_ricci() {
    let op = kt(4, 4);
    assert_eq!(op.r_minus(), [-0.25, -0.5, 0.0, 0.0, 0.0, 0.0]);
    let spec = crate::lie::kodaira_thurston::<f64>(1.0).unwrap();
    let curv = crate::lie::curvature(&spec).unwrap();
    let ric = SymTensor::new(curv.ricci_matrix()).unwrap();
    let j = AcsMatrix::new(spec.j_matrix(), 1e-12).unwrap();
    let minus = anti_invariant_part(&ric, &j).unwrap();
    for (c, &(a, b)) in COMPONENTS.iter().enumerate() {
        assert_eq!(minus.matrix()[(a, b)], op.r_minus()[c]);
    }
    assert_eq!(KtOperator::with_kappa(op.grid().clone(), 0.0).r_minus(), [0.0; 6]);
}

#[test]
fn hessian_formulas_on_polynomial_patches() {
    let op = patch_op(5, 0.1, [0.3, 0.2, 0.1, 0.0]);
    let g = op.grid();
    let interior = op.interior_mask();
    let x2 = g.sample(|p| p[0] * p[0]);
    let h = op.hessian(&x2).unwrap();
    let yz = g.sample(|p| p[1] * p[2]);
    let k = op.hessian(&yz).unwrap();
    for node in (0..g.len()).filter(|&n| interior[n]) {
        let x = g.coords(node)[0];
        assert!((h[0][0][node] - 2.0).abs() < 1e-9);
        assert!((h[1][2][node] + x).abs() < 1e-9);
        assert!((k[1][2][node] - 1.0).abs() < 1e-9);
        assert!((k[1][1][node] - 2.0 * x).abs() < 1e-9);
    }
}

#[test]
fn frame_derivatives_of_sin_z() {
    let mut errs = vec![];
    for n in [8usize, 16] {
        let h = 0.4 / n as f64;
        let op = patch_op(n, h, [0.2, 0.1, 0.3, 0.0]);
        let g = op.grid();
        let psi = g.sample(|p| libm::sin(2.0 * PI * p[2]));
        let d = op.frame_derivatives(&psi).unwrap();
        let interior = op.interior_mask();
        let mut err: f64 = 0.0;
        for node in (0..g.len()).filter(|&n| interior[n]) {
            let p = g.coords(node);
            let c = 2.0 * PI * libm::cos(2.0 * PI * p[2]);
            err = err.max((d[1][node] - p[0] * c).abs()).max((d[2][node] - c).abs()).max(d[0][node].abs());
        }
        errs.push(err);
    }
    assert!(errs[0] < 0.2 && errs[0] / errs[1] > 3.6, "{errs:?}");
}

#[test]
fn x_periodic_fields_stay_smooth_across_the_wrap() {
    let op = kt(8, 4);
    let psi = op.grid().sample(|p| libm::sin(2.0 * PI * p[0]));
    let d = op.frame_derivatives(&psi).unwrap();
    assert!(max_abs(&d[0]) < 2.0 * PI * 1.01);
    assert!(max_abs(&d[1]) < 1e-12 && max_abs(&d[2]) < 1e-12);
}

fn route_gap(op: &KtOperator, psi: &[f64]) -> f64 {
    let a = op.hessian(psi).unwrap();
    let b = op.hessian_definitional(psi).unwrap();
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for node in 0..psi.len() {
                m = m.max((a[i][j][node] - b[i][j][node]).abs());
                m = m.max((b[i][j][node] - b[j][i][node]).abs());
            }
        }
    }
    m
}

#[test]
fn hessian_routes_converge_at_second_order() {
    let fields: [&dyn Fn([f64; 4]) -> f64; 2] = [
        &fields::z_independent(1, 1, 1, 1.0, 0.3),
        &fields::theta(1, 1, 0.4, 0.25, 0, 1.0),
    ];
    for f in fields {
        let (a, b) = (kt(12, 12), kt(24, 24));
        let e1 = route_gap(&a, &a.grid().sample(f));
        let e2 = route_gap(&b, &b.grid().sample(f));
        let order = libm::log2(e1 / e2);
        assert!(order >= 1.9, "order {order} ({e1:e} -> {e2:e})");
    }
}

#[test]
fn ode_stencil_check_in_t() {
    let mut errs = vec![];
    for n in [8usize, 16] {
        let op = patch_op(n, 0.5 / n as f64, [0.0; 4]);
        let psi = op.grid().sample(|p| libm::exp(p[3] / core::f64::consts::SQRT_2));
        let h = op.hessian(&psi).unwrap();
        let d = op.frame_derivatives(&psi).unwrap();
        let ttt = op.frame_derivatives(&h[3][3]).unwrap();
        let mask = op.interior_mask();
        let g = op.grid();
        let deep: Vec<usize> = (0..g.len())
            .filter(|&node| mask[node] && (0..4).all(|a| g.neighbor(node, unit(a, 2)).is_some() && g.neighbor(node, unit(a, -2)).is_some()))
            .collect();
        errs.push(deep.iter().map(|&node| (ttt[3][node] - 0.5 * d[3][node]).abs()).fold(0.0, f64::max));
    }
    assert!(errs[0] < 1e-2 && errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn t_only_field_has_vanishing_mixed_equation() {
    let op = kt(6, 8);
    let psi = op.grid().sample(|p| libm::cos(2.0 * PI * p[3]));
    let r = op.adjoint_ds(&psi).unwrap();
    assert!(max_abs(&r.comps[5]) < 1e-12);
    let res = op.kernel_system_residual(&psi).unwrap();
    let cell = op.grid().cell_volume();
    for c in 0..6 {
        assert!((res[c] - libm::sqrt(dot(&r.comps[c], &r.comps[c]) * cell)).abs() < 1e-14);
    }
    assert!(res[5] < 1e-12);
}

#[test]
fn assembled_matrix_matches_application_and_pairing() {
    let op = kt(5, 4);
    let n = op.grid().len();
    let a = op.assemble_adjoint();
    assert_eq!((a.nrows(), a.ncols(), a.order), (6 * n, n, 2));
    let mut rng = Lcg(7);
    for _ in 0..5 {
        let psi = rng.field(n);
        let hf = AntiInvariantField { comps: core::array::from_fn(|_| rng.field(n)) };
        let direct = op.adjoint_ds(&psi).unwrap().to_flat();
        let via = a.mul_vec(&psi);
        assert!(direct.iter().zip(&via).all(|(p, q)| (p - q).abs() < 1e-9 * (1.0 + p.abs())));
        let cell = op.grid().cell_volume();
        let lhs = dot(&op.forward_ds(&hf).unwrap(), &psi) * cell;
        let rhs = hf.pairing(&op.adjoint_ds(&psi).unwrap(), cell);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
        let wt: Vec<f64> = hf.to_flat().iter().zip(op.row_weights()).map(|(h, w)| h * w).collect();
        let t = a.mul_transpose_vec(&wt);
        let f = op.forward_ds(&hf).unwrap();
        assert!(t.iter().zip(&f).all(|(p, q)| (p - q).abs() < 1e-9 * (1.0 + p.abs())));
    }
    let back = AntiInvariantField::from_flat(&op.adjoint_ds(&vec![1.0; n]).unwrap().to_flat());
    assert_eq!(back.comps[1][3], 0.5);
}

fn smooth_h(g: &KtGrid) -> AntiInvariantField {
    AntiInvariantField {
        comps: [
            g.sample(fields::z_independent(1, 0, 1, 1.0, 0.0)),
            g.sample(fields::z_independent(0, 1, 0, 1.0, 0.2)),
            g.sample(fields::z_independent(1, 1, 0, 1.0, 0.4)),
            g.sample(fields::z_independent(1, -1, 1, 1.0, 0.1)),
            g.sample(fields::theta(1, 1, 0.5, 0.25, 0, 1.0)),
            g.sample(fields::z_independent(2, 0, 1, 1.0, 0.7)),
        ],
    }
}

#[test]
fn forward_routes_agree_at_second_order() {
    let gap = |n: usize| {
        let op = kt(n, n);
        let h = smooth_h(op.grid());
        let a = op.forward_ds(&h).unwrap();
        let b = op.double_divergence(&h).unwrap();
        a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (gap(12), gap(24));
    assert!(libm::log2(e1 / e2) >= 1.9, "{e1:e} -> {e2:e}");
}

#[test]
fn flat_double_divergence_is_half_bilaplacian() {
    let mut errs = vec![];
    for n in [16usize, 32] {
        let op = KtOperator::new(KtGrid::flat_torus(n, 2.0 * PI).unwrap(), Variant::Flat).unwrap();
        let k = 2.0;
        let psi = op.grid().sample(|p| libm::cos(k * p[0]));
        let h = op.adjoint_ds(&psi).unwrap();
        for out in [op.forward_ds(&h).unwrap(), op.double_divergence(&h).unwrap()] {
            let e = out.iter().zip(&psi).map(|(o, p)| (o - 0.5 * k.powi(4) * p).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
    }
    assert!(errs[0] < 1.5 && errs[0] / errs[2] > 3.5 && errs[1] / errs[3] > 3.5, "{errs:?}");
}

#[test]
fn operators_commute_with_central_translations() {
    let op = kt(6, 4);
    let n = op.grid().len();
    let mut rng = Lcg(3);
    let psi = rng.field(n);
    let hf = AntiInvariantField { comps: core::array::from_fn(|_| rng.field(n)) };
    for (steps, in_t) in [(1, false), (4, false), (1, true), (3, true)] {
        let map = op.grid().shift_map(steps, in_t);
        let shift = |v: &[f64]| -> Vec<f64> { map.iter().map(|&m| v[m]).collect() };
        let a = op.adjoint_ds(&shift(&psi)).unwrap();
        let b = op.adjoint_ds(&psi).unwrap();
        for c in 0..6 {
            assert_eq!(a.comps[c], shift(&b.comps[c]));
        }
        let shifted_h = AntiInvariantField { comps: core::array::from_fn(|c| shift(&hf.comps[c])) };
        // Scatter order differs after the shift, so only rounding separates the two.
        let fa = op.forward_ds(&shifted_h).unwrap();
        let fb = shift(&op.forward_ds(&hf).unwrap());
        assert!(fa.iter().zip(&fb).all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + q.abs())));
        let d1 = op.frame_derivatives(&shift(&psi)).unwrap();
        let d0 = op.frame_derivatives(&psi).unwrap();
        for a in 0..4 {
            assert_eq!(d1[a], shift(&d0[a]));
        }
    }
}

#[test]
fn flat_symbol_ratio_within_stencil_error() {
    let op = KtOperator::new(KtGrid::flat_torus(8, 2.0 * PI).unwrap(), Variant::Flat).unwrap();
    let h = 2.0 * PI / 8.0;
    for modes in [[1, 0, 0, 0], [2, 0, 0, 0], [1, 1, 0, 0], [0, 1, 2, 0], [1, 0, 1, 1], [2, 2, 0, 0]] {
        let r = symbol_check(&op, modes).unwrap();
        assert!((r - 1.0).abs() <= 5.0 * h * h, "{modes:?}: {r}");
    }
    assert_eq!(symbol_check(&op, [0; 4]), Err(SpectralError::ZeroWavevector));
    assert_eq!(symbol_check(&kt(4, 4), [0, 0, 1, 0]), Err(SpectralError::NotInvariant));
}

#[test]
fn kt_symbol_excess_decays() {
    let op = kt(32, 4);
    let modes: Vec<[i64; 4]> = (1..=4).map(|m| [0, m, 0, 0]).collect();
    let samples = symbol_sweep(&op, &modes).unwrap();
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (libm::log(s.xi_norm), libm::log((s.ratio / s.flat_ratio - 1.0).abs()))).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope <= -0.8, "slope {slope}");
}

#[test]
fn flat_kernel_contains_constants() {
    let rep = kernel_gap(6, 6, 1.0, Variant::Flat, &EigenConfig::default()).unwrap();
    assert_eq!(rep.method, SpectralMethod::Dense);
    assert!(rep.eigenvalues[0] <= 1e-8);
    assert!(rep.residuals.iter().all(|&r| r < 1e-8));
    let kernel: Vec<&Vec<f64>> = rep.eigenvectors.iter().zip(&rep.eigenvalues).filter(|(_, &l)| l <= 1e-8).map(|(v, _)| v).collect();
    let c = 1.0 / libm::sqrt(rep.unknowns as f64);
    let proj: f64 = kernel.iter().map(|v| v.iter().sum::<f64>() * c).map(|p| p * p).sum();
    assert!((proj - 1.0).abs() < 1e-8, "constant projects with weight {proj}");
}

#[test]
fn kt_normal_operator_has_a_gap() {
    let flat = kernel_gap(6, 6, 1.0, Variant::Flat, &EigenConfig::default()).unwrap();
    let rep = kernel_gap(6, 6, 1.0, Variant::KodairaThurston, &EigenConfig::default()).unwrap();
    assert!(rep.residuals.iter().all(|&r| r < 1e-8));
    assert!(rep.eigenvalues[0] > 1e3 * (flat.eigenvalues[0].max(0.0) + 1e-8), "{:?}", rep.eigenvalues);
    assert!(rep.eigenvalues.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn iterative_path_matches_dense() {
    let op = kt(4, 4);
    let a = op.assemble_adjoint();
    let w = op.row_weights();
    let dense = smallest_eigenpairs(&a, &w, &EigenConfig { k: 3, ..EigenConfig::default() }).unwrap();
    let iter = smallest_eigenpairs(&a, &w, &EigenConfig { k: 3, dense_limit: 0, ..EigenConfig::default() }).unwrap();
    assert_eq!(iter.method, SpectralMethod::Iterative);
    for (p, q) in dense.values.iter().zip(&iter.values) {
        assert!((p - q).abs() < 1e-8 * (1.0 + p.abs()), "{p} vs {q}");
    }
    let m: Matrix = a.normal_dense(&w);
    let v = &iter.vectors[0];
    let mv = m.mul_vec(v);
    let lam = dot(v, &mv) / dot(v, v);
    assert!((lam - iter.values[0]).abs() < 1e-8);
    assert!(matches!(smallest_eigenpairs(&a, &w, &EigenConfig { k: 0, ..EigenConfig::default() }), Err(SpectralError::TooManyPairs { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pairing_identity_for_random_fields(seed in any::<u64>(), n in 3usize..6, kappa in -2.0f64..2.0) {
        let grid = KtGrid::kodaira_thurston(n, 3, 0.7).unwrap();
        let op = KtOperator::with_kappa(grid, kappa);
        let len = op.grid().len();
        let mut rng = Lcg(seed);
        let psi = rng.field(len);
        let hf = AntiInvariantField { comps: core::array::from_fn(|_| rng.field(len)) };
        let cell = op.grid().cell_volume();
        let lhs = dot(&op.forward_ds(&hf).unwrap(), &psi) * cell;
        let rhs = hf.pairing(&op.adjoint_ds(&psi).unwrap(), cell);
        let scale = libm::sqrt(hf.pairing(&hf, cell) * dot(&psi, &psi) * cell) * (n * n) as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn flat_symbol_is_stencil_sinc(m in 1i64..3, axis in 0usize..4) {
        let op = KtOperator::new(KtGrid::flat_torus(8, 2.0 * PI).unwrap(), Variant::Flat).unwrap();
        let mut modes = [0i64; 4];
        modes[axis] = m;
        let h = 2.0 * PI / 8.0;
        let k = m as f64;
        let s = libm::sin(k * h / 2.0) / (k * h / 2.0);
        let expected = s.powi(4);
        let r = symbol_check(&op, modes).unwrap();
        prop_assert!((r - expected).abs() < 1e-10, "{} vs {}", r, expected);
    }
}

