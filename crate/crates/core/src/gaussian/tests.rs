use super::*;
use crate::error::Error;
use crate::grid::{RealField, TorusGrid};
use std::f64::consts::PI;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Brute-force `Σ_{y ≠ 0}` over a square block of the lattice.
fn lattice_excess_oracle(t: f64, m: f64) -> f64 {
    let f = |u: f64| {
        let r = f64::exp(u);
        let mut s = 0.0;
        for a in -12i32..=12 {
            for b in -12i32..=12 {
                if a != 0 || b != 0 {
                    s += (-(m * m) * f64::from(a * a + b * b) / (8.0 * r)).exp();
                }
            }
        }
        s / (8.0 * PI)
    };
    simpson(f, t.ln(), 0.0, 4000)
}

#[test]
fn exact_constant_examples() {
    assert_eq!(renorm_constant_exact(1.0).unwrap(), 0.0);
    assert!((renorm_constant_exact((-8.0 * PI).exp()).unwrap() - 1.0).abs() < 1e-14);
    assert!((renorm_constant_exact(0.5).unwrap() - 2f64.ln() / (8.0 * PI)).abs() < 1e-14);
    for t in [0.0, -1.0, 1.5] {
        assert!(matches!(renorm_constant_exact(t), Err(Error::TimeOutOfRange(_))));
    }
}

#[test]
fn torus_constant_matches_lattice_oracle() {
    assert_eq!(renorm_constant_torus(1.0, 4.0).unwrap(), 0.0);
    // reference value of the excess at M = 4, t = 0.1 from an independent quadrature
    let ex = renorm_constant_torus(0.1, 4.0).unwrap() - renorm_constant_exact(0.1).unwrap();
    assert!((ex - 0.008_391_579_691_465_763).abs() < 1e-11);
    for (t, m) in [(0.01, 2.0), (0.3, 3.0), (0.05, 4.0), (0.5, 8.0)] {
        let got = renorm_constant_torus(t, m).unwrap() - renorm_constant_exact(t).unwrap();
        let oracle = lattice_excess_oracle(t, m);
        assert!((got - oracle).abs() < 1e-9 * oracle.max(1e-12), "{t} {m}: {got} vs {oracle}");
    }
    let diffs: Vec<f64> = [2.0, 4.0, 8.0]
        .iter()
        .map(|&m| renorm_constant_torus(0.1, m).unwrap() - renorm_constant_exact(0.1).unwrap())
        .collect();
    assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2] && diffs[2] > 0.0);
}

#[test]
fn shift_extends_past_unit_time() {
    let a = renorm_shift_torus(2.0, 4.0).unwrap();
    let b = renorm_shift_torus(0.5, 4.0).unwrap();
    assert!(a < 0.0 && b > 0.0);
    assert!(matches!(renorm_constant_torus(2.0, 4.0), Err(Error::TimeOutOfRange(_))));
}

#[test]
fn grid_variance_enumeration() {
    let g = TorusGrid::new(3.0, 8).unwrap();
    assert_eq!(grid_wick_variance(&g, 0.0), 0.0);
    let t = 0.2;
    let mut oracle = 0.0;
    for k1 in -4i32..4 {
        for k2 in -4i32..4 {
            let lam = (2.0 * PI / 3.0).powi(2) * f64::from(k1 * k1 + k2 * k2);
            oracle += if lam == 0.0 { t } else { (1.0 - (-2.0 * lam * t).exp()) / (2.0 * lam) };
        }
    }
    oracle /= 9.0;
    assert!((grid_wick_variance(&g, t) - oracle).abs() < 1e-14);
}

#[test]
fn grid_variance_grows_logarithmically() {
    let g = TorusGrid::new(8.0, 256).unwrap();
    let c: Vec<f64> = [1e-3, 1e-2, 1e-1].iter().map(|&t| grid_wick_variance(&g, t)).collect();
    let target = 10f64.ln() / (8.0 * PI);
    for w in c.windows(2) {
        assert!(((w[1] - w[0]) / target - 1.0).abs() < 0.1, "{c:?}");
    }
}

#[test]
fn ou_recursion_is_exact_in_law() {
    for lam in [0.0, 0.3, 40.0, 5000.0] {
        let coarse = ou_variance_recursion(lam, 1e-2, 50, 4.0);
        let fine = ou_variance_recursion(lam, 5e-3, 100, 4.0);
        let closed = if lam == 0.0 {
            0.5 / 16.0
        } else {
            (1.0 - (-lam).exp()) / (2.0 * lam * 16.0)
        };
        assert!((coarse - fine).abs() <= 1e-12 * closed);
        assert!((coarse - closed).abs() <= 1e-12 * closed);
    }
}

fn streams(n: usize, root: u64) -> Vec<NoiseStream> {
    (0..n as u64).map(|i| NoiseStream::new(root, i)).collect()
}

#[test]
fn mode_variances_and_kurtosis() {
    let g = TorusGrid::new(2.0, 8).unwrap();
    let t = 0.05;
    let modes = [(0usize, 0usize), (1, 0), (1, 2), (4, 4), (3, 7)];
    let mut sq = vec![vec![]; modes.len()];
    let mut re = vec![];
    for s in streams(10_000, 11) {
        let mut h = HeatSampler::new(&s, &g, None).unwrap();
        h.advance(t, 1);
        for (k, &(i, j)) in modes.iter().enumerate() {
            sq[k].push(h.z_spectrum()[[i, j]].norm_sqr());
        }
        re.push(h.z_spectrum()[[1, 2]].re);
    }
    for (k, &(i, j)) in modes.iter().enumerate() {
        let lam = g.frequency_sq(i, j);
        let expect = if lam == 0.0 { t } else { (1.0 - (-2.0 * lam * t).exp()) / (2.0 * lam) } / 4.0;
        let (mean, _) = mean_and_error(&sq[k]);
        assert!((mean / expect - 1.0).abs() < 0.05, "mode {i},{j}: {mean} vs {expect}");
    }
    let n = re.len() as f64;
    let m = re.iter().sum::<f64>() / n;
    let m2 = re.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = re.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let kurt = m4 / (m2 * m2);
    assert!((kurt - 3.0).abs() < 3.0 * (24.0 / n).sqrt(), "kurtosis {kurt}");
}

#[test]
fn stationary_plateau() {
    let g = TorusGrid::new(2.0, 8).unwrap();
    let mut h = HeatSampler::new(&NoiseStream::new(1, 0), &g, None).unwrap();
    for _ in 0..40 {
        h.advance(0.25, 1);
    }
    let lam = g.frequency_sq(1, 0);
    let plateau = 1.0 / (2.0 * lam * 4.0);
    assert!((h.mode_variance()[[1, 0]] / plateau - 1.0).abs() < 1e-12);
}

#[test]
fn determinism_and_negation() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let s = NoiseStream::new(7, 3);
    let times = [0.0, 0.01, 0.02, 0.5];
    let (a, _) = sample_heat_solution(&s, &g, &times, None).unwrap();
    let (b, _) = sample_heat_solution(&s, &g, &times, None).unwrap();
    let (c, _) = sample_heat_solution(&s.negated(), &g, &times, None).unwrap();
    for i in 0..times.len() {
        assert_eq!(a[i].values(), b[i].values());
        assert_eq!(a[i].values(), &c[i].values().mapv(|v| -v));
    }
    assert_eq!(a[0].max_abs(), 0.0);
    let (d, _) = sample_heat_solution(&NoiseStream::new(7, 4), &g, &times, None).unwrap();
    assert_ne!(a[3].values(), d[3].values());
}

#[test]
fn times_must_increase() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let s = NoiseStream::new(0, 0);
    for bad in [vec![0.1, 0.1], vec![0.2, 0.1], vec![-0.1, 0.2]] {
        assert!(matches!(sample_heat_solution(&s, &g, &bad, None), Err(Error::NonIncreasingTimes)));
    }
}

#[test]
fn harmonic_part_is_heat_flow() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let s = NoiseStream::new(0, 0);
    let (_, v) = sample_heat_solution(&s, &g, &[0.0, 0.3], None).unwrap();
    assert!(v.iter().all(|f| f.max_abs() == 0.0));
    let x0 = RealField::from_fn(g, |x, y| (PI * x / 2.0).cos() + (PI * y).sin());
    let (_, v) = sample_heat_solution(&s, &g, &[0.0, 0.3], Some(&x0)).unwrap();
    let expect = crate::besov::heat_propagate(&x0, 0.3).unwrap();
    assert!(v[1].axpby(1.0, &expect, -1.0).unwrap().max_abs() < 1e-13);
}

#[test]
fn wick_binomial_collapse() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let v = RealField::from_fn(g, |x, y| x - 0.3 * y);
    let (z1, z2, z3) = wick_powers(&RealField::zeros(g), &v, 0.0, 0.0).unwrap();
    assert_eq!(z1.values(), v.values());
    assert!(z2.axpby(1.0, &v.pointwise_mul(&v).unwrap(), -1.0).unwrap().max_abs() < 1e-14);
    assert!(z3.values().iter().zip(v.values()).all(|(a, b)| (a - b.powi(3)).abs() < 1e-12));
    let other = RealField::zeros(TorusGrid::new(4.0, 32).unwrap());
    assert!(matches!(wick_powers(&other, &v, 0.0, 0.0), Err(Error::GridMismatch)));
}

#[test]
fn wick_moments_over_realizations() {
    let g = TorusGrid::new(4.0, 32).unwrap();
    let t = 0.5;
    let lag = 8; // 1.0 along the first axis
    let c = grid_wick_variance(&g, t);
    let (mut m2, mut m3, mut cross, mut corr) = (vec![], vec![], vec![], vec![]);
    for s in streams(10_000, 5) {
        let stack =
            build_wick_stack(&s, &g, &[t], None, WickConvention::Centered).unwrap();
        assert_eq!(stack.c_grid[0], c);
        let (z, z2, z3) = (stack.z[0].values(), stack.z2[0].values(), stack.z3[0].values());
        m2.push(z2[[3, 5]]);
        m3.push(z3[[3, 5]]);
        cross.push(z2[[3, 5]] * z[[3, 5]]);
        let n = g.points_per_side();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += z2[[i, j]] * z2[[(i + lag) % n, j]];
            }
        }
        corr.push(acc / (n * n) as f64);
    }
    for xs in [&m2, &m3, &cross] {
        let (mean, se) = mean_and_error(xs);
        assert!(mean.abs() < 3.0 * se, "{mean} ± {se}");
    }
    let k = covariance_exact(&CovarianceQuery::new(t, t, [1.0, 0.0], Period::Finite(4.0))).unwrap();
    let (mean, _) = mean_and_error(&corr);
    assert!((mean / (2.0 * k * k) - 1.0).abs() < 0.1, "{mean} vs {}", 2.0 * k * k);
}

#[test]
fn shifted_convention_subtracts_torus_constant() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let s = NoiseStream::new(1, 1);
    let a = build_wick_stack(&s, &g, &[0.2], None, WickConvention::Centered).unwrap();
    let b = build_wick_stack(&s, &g, &[0.2], None, WickConvention::Shifted).unwrap();
    let shift = renorm_constant_torus(0.2, 4.0).unwrap();
    assert_eq!(b.shift[0], shift);
    let d = a.z2[0].axpby(1.0, &b.z2[0], -1.0).unwrap();
    assert!(d.values().iter().all(|v| (v - shift).abs() < 1e-13));
    assert!(build_wick_stack(&s, &g, &[0.0], None, WickConvention::Shifted).is_err());
}

#[test]
fn stack_persistence_round_trip() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let x0 = RealField::from_fn(g, |x, _| x.sin());
    let s = NoiseStream::new(3, 9);
    let stack = build_wick_stack(&s, &g, &[0.1, 0.2], Some(&x0), WickConvention::Shifted).unwrap();
    let dir = std::env::temp_dir().join(format!("phi4lab-stack-{}", std::process::id()));
    stack.write(&dir).unwrap();
    let back = WickStack::read(&dir).unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(back.times, stack.times);
    assert_eq!(back.c_grid, stack.c_grid);
    assert_eq!(back.stream, s);
    for i in 0..2 {
        assert_eq!(back.z3[i].values(), stack.z3[i].values());
        assert_eq!(back.v[i].values(), stack.v[i].values());
    }
}

#[test]
fn stream_midpoints_are_centered_interpolants() {
    let g = TorusGrid::new(4.0, 16).unwrap();
    let s = NoiseStream::new(2, 2);
    let dt = 0.01;
    let mut st = StackStream::new(&s, &g, dt, 1, WickConvention::Centered, None).unwrap();
    let (nodes, _) = sample_heat_solution(&s, &g, &[0.0, dt, 2.0 * dt], None).unwrap();
    st.advance().unwrap();
    let step = st.advance().unwrap();
    assert!((step.t - dt).abs() < 1e-15);
    let mid = nodes[1].axpby(0.5, &nodes[2], 0.5).unwrap();
    assert!(step.z1.iter().zip(mid.values()).all(|(a, b)| (a - b).abs() < 1e-13));
    assert!(step.z1_end.iter().zip(nodes[2].values()).all(|(a, b)| (a - b).abs() < 1e-13));
    // variance of the interpolant lies between the node variances' mean and the larger node
    let (c1, c2) = (grid_wick_variance(&g, dt), grid_wick_variance(&g, 2.0 * dt));
    assert!(step.c_mid < c2 && step.c_mid > 0.25 * (c1 + c2));
}

#[test]
fn stream_midpoint_variance_matches_sampling() {
    let g = TorusGrid::new(2.0, 8).unwrap();
    let dt = 0.02;
    let mut vals = vec![];
    let mut c = 0.0;
    for s in streams(4000, 8) {
        let mut st = StackStream::new(&s, &g, dt, 2, WickConvention::Centered, None).unwrap();
        st.advance().unwrap();
        let step = st.advance().unwrap();
        c = step.c_mid;
        vals.extend(step.z2.iter().step_by(9).copied());
    }
    // not independent across points of one realization, so compare loosely
    let (mean, _) = mean_and_error(&vals);
    assert!(mean.abs() < 0.05 * c, "{mean} vs c = {c}");
}

#[test]
fn windowed_noise_matches_full_torus_cells() {
    let small = TorusGrid::new(2.0, 16).unwrap();
    let big = TorusGrid::new(4.0, 32).unwrap();
    let s = NoiseStream::new(4, 4);
    let a = CellNoise::windowed(&s, &small, &big).unwrap().increment(0.1, 2);
    let b = CellNoise::new(&s, &big).increment(0.1, 2);
    let crop = b.slice(ndarray::s![8..24, 8..24]);
    assert_eq!(a.view(), crop);
    let bad = TorusGrid::new(4.0, 64).unwrap();
    assert!(CellNoise::windowed(&s, &small, &bad).is_err());
}

fn covariance_oracle(t1: f64, t2: f64, x: [f64; 2], m: f64) -> f64 {
    // ℓ = e^u, explicit two-dimensional image sum
    let (lo, hi) = ((t1 - t2).abs(), t1 + t2);
    let f = |u: f64| {
        let ell = u.exp();
        let mut s = 0.0;
        for a in -10i32..=10 {
            for b in -10i32..=10 {
                let d = (x[0] - m * f64::from(a)).powi(2) + (x[1] - m * f64::from(b)).powi(2);
                s += (-d / (4.0 * ell)).exp();
            }
        }
        s
    };
    simpson(f, lo.max(1e-6).ln(), hi.ln(), 6000) / (8.0 * PI)
}

#[test]
fn covariance_examples() {
    let q = |t1, t2, x, p| covariance_exact(&CovarianceQuery::new(t1, t2, x, p));
    assert_eq!(q(1.0, 0.0, [0.3, 0.0], Period::Infinite).unwrap(), 0.0);
    let v = q(0.7, 0.2, [0.0, 0.0], Period::Infinite).unwrap();
    assert!((v - (0.9f64 / 0.5).ln() / (8.0 * PI)).abs() < 1e-11);
    assert!(matches!(q(0.4, 0.4, [0.0, 0.0], Period::Infinite), Err(Error::DivergentKernel)));
    assert!(matches!(q(0.4, 0.4, [4.0, -8.0], Period::Finite(4.0)), Err(Error::DivergentKernel)));
    for (t1, t2, x, m) in [
        (0.5, 0.5, [0.25, 0.0], 4.0),
        (1.0, 0.3, [1.5, -0.7], 3.0),
        (0.05, 0.05, [2.0, 2.0], 4.0),
        (2.0, 2.0, [0.5, 0.1], 2.0),
    ] {
        let got = q(t1, t2, x, Period::Finite(m)).unwrap();
        let oracle = covariance_oracle(t1, t2, x, m);
        assert!((got - oracle).abs() < 1e-8 * oracle.max(1e-6), "{got} vs {oracle}");
    }
    let a = q(0.5, 0.5, [0.7, 0.2], Period::Finite(40.0)).unwrap();
    let b = q(0.5, 0.5, [0.7, 0.2], Period::Infinite).unwrap();
    assert!((a - b).abs() < 1e-14);
    let c = q(0.5, 0.5, [0.7 + 4.0, 0.2 - 8.0], Period::Finite(4.0)).unwrap();
    assert!((c - q(0.5, 0.5, [0.7, 0.2], Period::Finite(4.0)).unwrap()).abs() < 1e-12);
}

#[test]
fn periodic_distance_examples() {
    assert_eq!(periodic_distance([3.0, 4.0], Period::Infinite), 5.0);
    assert!((periodic_distance([3.5, -4.5], Period::Finite(4.0)) - (0.25f64 + 0.25).sqrt()).abs() < 1e-15);
}

/// Largest `K_M(t,t;x) / (1 + log₊ |x|_M⁻¹)` over `t ∈ {0.01, 0.05, 0.2, 0.5, 1, 2}`,
/// `|x| ∈ {0.01, 0.05, 0.1, 0.25, 0.5, 1, 2}` at `M = 4`, rounded up.
const LOG_BOUND_C: f64 = 0.1391;

#[test]
fn covariance_has_a_log_bound_with_one_constant() {
    let m = 4.0;
    for i in 0..=12 {
        let t = 1e-3 * 2000f64.powf(i as f64 / 12.0);
        for j in 0..=16 {
            let r = 1e-4 * 2e4f64.powf(j as f64 / 16.0);
            for x in [[r, 0.0], [0.6 * r, 0.8 * r], [m - r, 0.0]] {
                let k = covariance_exact(&CovarianceQuery::new(t, t, x, Period::Finite(m))).unwrap();
                let d = periodic_distance(x, Period::Finite(m));
                assert!(k <= LOG_BOUND_C * (1.0 + (1.0 / d).ln().max(0.0)), "t = {t}, x = {x:?}");
            }
        }
    }
}

#[test]
fn empirical_covariance_checks() {
    let g = TorusGrid::new(4.0, 32).unwrap();
    assert!(matches!(
        empirical_covariance(&streams(99, 0), &g, 0.1, &[[0.0, 0.0]]),
        Err(Error::TooFewRealizations { .. })
    ));
    let lags = [[0.0, 0.0], [0.5, 0.25], [-0.5, -0.25], [2.0, 0.0]];
    let t = 0.5;
    let est = empirical_covariance(&streams(2000, 21), &g, t, &lags).unwrap();
    let var = grid_wick_variance(&g, t);
    assert!((est[0].mean - var).abs() < 3.0 * est[0].std_error);
    assert!((est[1].mean - est[2].mean).abs() < 1e-12);
    let exact = covariance_exact(&CovarianceQuery::new(t, t, [2.0, 0.0], Period::Finite(4.0))).unwrap();
    assert!((est[3].mean - exact).abs() < 3.0 * est[3].std_error, "{:?} vs {exact}", est[3]);
    assert!((grid_covariance(&g, t, [0.0, 0.0]) - var).abs() < 1e-14);
}

fn mixed_oracle(t: f64, x1: [f64; 2], x2: [f64; 2], m: f64) -> f64 {
    // explicit cell integral per axis (the integrand factorizes), Simpson in z and in log s
    let d = [x1[0] - x2[0], x1[1] - x2[1]];
    let g = |s: f64, u: f64| (-u * u / (4.0 * s)).exp() / (4.0 * PI * s).sqrt();
    let axis = |di: f64, s: f64| {
        let mut acc = 0.0;
        for n in -3i32..=3 {
            let y = m * f64::from(n);
            acc += simpson(|z| g(s, di - z) * g(s, z + y), -m / 2.0, m / 2.0, 2000);
        }
        acc
    };
    simpson(|u| { let s = u.exp(); s * axis(d[0], s) * axis(d[1], s) }, (1e-4f64).ln(), t.ln(), 400)
}

#[test]
fn mixed_kernel_checks() {
    assert_eq!(kernel_mixed(0.0, [0.1, 0.0], [0.0, 0.0], 4.0).unwrap().value, 0.0);
    assert!(!kernel_mixed(0.5, [1.0, 0.0], [0.0, 0.0], 4.0).unwrap().in_regime);
    let (x1, x2) = ([0.5, 0.2], [-0.4, 0.3]);
    let t = 1.0;
    let got = kernel_mixed(t, x1, x2, 2.0).unwrap().value;
    let oracle = mixed_oracle(t, x1, x2, 2.0);
    assert!((got - oracle).abs() < 1e-6 * oracle, "{got} vs {oracle}");
    let d = [x1[0] - x2[0], x1[1] - x2[1]];
    let plane = covariance_exact(&CovarianceQuery::new(t, t, d, Period::Infinite)).unwrap();
    let gap = |m| (kernel_mixed(t, x1, x2, m).unwrap().value - plane).abs();
    assert!(gap(8.0) >= 16.0 * gap(16.0), "{} {}", gap(8.0), gap(16.0));
    assert!(gap(32.0) < 1e-6);
    assert!(kernel_mixed(t, x1, x2, 8.0).unwrap().in_regime);
}
