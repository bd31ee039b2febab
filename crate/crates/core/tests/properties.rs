use ndarray::{s, Array2};
use phi4lab::besov::verify::random_band_limited_field;
use phi4lab::besov::{
    besov_norm, build_partition, heat_propagate, lp_blocks, weighted_lp_norm, BesovParams, PartitionConfig,
    WeightSpec,
};
use phi4lab::gaussian::{wick_powers, CellNoise, NoiseStream, StackStream, WickConvention};
use phi4lab::grid::{forward_transform, inverse_transform, read_snapshot, write_snapshot, RealField, TorusGrid};
use phi4lab::plane::{periodize_initial, PeriodizationConfig};
use phi4lab::solver::{solve_global, SolverConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_field(grid: TorusGrid, seed: u64) -> RealField {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.points_per_side();
    RealField::new(grid, Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0))).unwrap()
}

fn sup(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn weight_variant(i: usize) -> WeightSpec {
    [
        WeightSpec::Flat,
        WeightSpec::Polynomial { sigma: 3.0 },
        WeightSpec::Exponential { mu: 1.0, delta: 0.4 },
    ][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transforms_invert_and_preserve_energy(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32]), m in 0.5f64..12.0) {
        let g = TorusGrid::new(m, n).unwrap();
        let f = random_field(g, seed);
        let back = inverse_transform(&forward_transform(&f)).unwrap();
        prop_assert!(sup(&(back.values() - f.values())) <= 1e-12 * sup(f.values()));
        let physical: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
        let spectral: f64 = forward_transform(&f).coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() * m * m;
        prop_assert!((physical / spectral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transforms_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = TorusGrid::new(3.0, 16).unwrap();
        let (f, h) = (random_field(g, seed), random_field(g, seed.wrapping_add(1)));
        let lhs = forward_transform(&f.axpby(a, &h, b).unwrap());
        let (ff, fh) = (forward_transform(&f), forward_transform(&h));
        let rhs = ff.coefficients() * a + fh.coefficients() * b;
        let err = (lhs.coefficients() - &rhs).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let scale = rhs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        prop_assert!(err <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn snapshots_round_trip_bit_for_bit(seed in any::<u64>(), m in 0.5f64..10.0) {
        let f = random_field(TorusGrid::new(m, 8).unwrap(), seed);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f).unwrap();
        let g = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(g.grid(), f.grid());
        prop_assert_eq!(g.values(), f.values());
    }

    #[test]
    fn blocks_reconstruct_band_limited_fields(seed in any::<u64>(), frac in 0.2f64..1.0) {
        let g = TorusGrid::new(4.0, 64).unwrap();
        let part = build_partition(&g, PartitionConfig::for_grid(&g, 2.0, 0.4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited_field(&g, frac * part.resolved_radius(), &mut rng);
        let mut sum = Array2::zeros(f.values().raw_dim());
        for b in lp_blocks(&f, &part).unwrap() {
            sum += b.values();
        }
        prop_assert!(sup(&(sum - f.values())) <= 1e-10 * sup(f.values()));
    }

    #[test]
    fn besov_norm_decreases_in_q(seed in any::<u64>(), alpha in -1.0f64..1.0, p in 1.0f64..6.0, w in 0usize..3) {
        let g = TorusGrid::new(4.0, 32).unwrap();
        let part = build_partition(&g, PartitionConfig::for_grid(&g, 2.0, 0.4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited_field(&g, part.resolved_radius(), &mut rng);
        let mut last = f64::INFINITY;
        for q in [1.0, 1.5, 2.0, 3.0, 8.0, 60.0, f64::INFINITY] {
            let v = besov_norm(&f, &part, &BesovParams::new(alpha, p, q, weight_variant(w))).unwrap();
            prop_assert!(v.is_finite() && v <= last);
            last = v;
        }
    }

    #[test]
    fn interpolation_holds_with_constant_one(seed in any::<u64>(), nu in 0.0f64..1.0, w in 0usize..3) {
        let g = TorusGrid::new(4.0, 32).unwrap();
        let part = build_partition(&g, PartitionConfig::for_grid(&g, 2.0, 0.4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited_field(&g, part.resolved_radius(), &mut rng);
        let weight = weight_variant(w);
        let (a0, p0, q0) = (-0.5, 2.0, 1.0);
        let (a1, p1, q1) = (1.0, 4.0, f64::INFINITY);
        let mid = BesovParams::new(
            (1.0 - nu) * a0 + nu * a1,
            1.0 / ((1.0 - nu) / p0 + nu / p1),
            1.0 / ((1.0 - nu) / q0 + nu / q1),
            weight,
        );
        let lhs = besov_norm(&f, &part, &mid).unwrap();
        let rhs = besov_norm(&f, &part, &BesovParams::new(a0, p0, q0, weight)).unwrap().powf(1.0 - nu)
            * besov_norm(&f, &part, &BesovParams::new(a1, p1, q1, weight)).unwrap().powf(nu);
        prop_assert!(lhs <= rhs * (1.0 + 1e-9), "{} > {}", lhs, rhs);
    }

    #[test]
    fn heat_flow_is_a_semigroup_and_decays(seed in any::<u64>(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let g = TorusGrid::new(2.0, 16).unwrap();
        let f = random_field(g, seed);
        let two = heat_propagate(&heat_propagate(&f, s).unwrap(), t).unwrap();
        let one = heat_propagate(&f, s + t).unwrap();
        prop_assert!(sup(&(two.values() - one.values())) <= 1e-12 * sup(f.values()));
        let flat = WeightSpec::Flat;
        let (n0, ns) = (weighted_lp_norm(&f, 2.0, &flat), weighted_lp_norm(&heat_propagate(&f, s).unwrap(), 2.0, &flat));
        prop_assert!(ns <= n0 * (1.0 + 1e-12));
        prop_assert!(weighted_lp_norm(&one, 2.0, &flat) <= ns * (1.0 + 1e-12));
    }

    #[test]
    fn wick_powers_are_hermite_combinations(seed in any::<u64>(), c in 0.0f64..2.0, shift in -0.5f64..0.5) {
        let g = TorusGrid::new(2.0, 8).unwrap();
        let (w, v) = (random_field(g, seed), random_field(g, seed ^ 0xABCD));
        let (z1, z2, z3) = wick_powers(&w, &v, c, shift).unwrap();
        let big = c + shift;
        for ((&a, &b), ((&x, &y), &z)) in w.values().iter().zip(v.values()).zip(z1.values().iter().zip(z2.values()).zip(z3.values())) {
            let xx = a + b;
            prop_assert_eq!(x, xx);
            prop_assert!((y - (xx * xx - big)).abs() <= 1e-14 * (1.0 + xx * xx + big.abs()));
            prop_assert!((z - (xx.powi(3) - 3.0 * big * xx)).abs() <= 1e-13 * (1.0 + xx.abs().powi(3) + big.abs()));
        }
    }

    #[test]
    fn center_cell_agrees_for_compact_data(cx in -0.2f64..0.2, cy in -0.2f64..0.2, r in 0.05f64..0.2, m in prop::sample::select(vec![2.0f64, 4.0, 8.0])) {
        let h = 0.125;
        let big = TorusGrid::with_spacing(16.0, h).unwrap();
        let datum = |x: f64, y: f64| {
            let s = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
            if s < 1.0 { (-1.0 / (1.0 - s)).exp() * (1.0 + x * y) } else { 0.0 }
        };
        let x0 = RealField::from_fn(big, datum);
        let xm = periodize_initial(&x0, m, &PeriodizationConfig::default()).unwrap();
        let g = *xm.grid();
        for ((i, j), &v) in xm.values().indexed_iter() {
            prop_assert_eq!(v, datum(g.coordinate(i), g.coordinate(j)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn windowed_noise_restricts_exactly(seed in any::<u64>(), id in 0u64..4, m in prop::sample::select(vec![1.0f64, 2.0])) {
        let h = 0.125;
        let source = TorusGrid::with_spacing(8.0, h).unwrap();
        let small = TorusGrid::with_spacing(m, h).unwrap();
        let double = TorusGrid::with_spacing(2.0 * m, h).unwrap();
        let stream = NoiseStream::new(seed, id);
        let mut a = CellNoise::windowed(&stream, &small, &source).unwrap();
        let mut b = CellNoise::windowed(&stream, &double, &source).unwrap();
        let off = (double.points_per_side() - small.points_per_side()) / 2;
        let n = small.points_per_side();
        for _ in 0..3 {
            let (da, db) = (a.increment(1e-2, 2), b.increment(1e-2, 2));
            prop_assert_eq!(da, db.slice(s![off..off + n, off..off + n]).to_owned());
        }
    }

    #[test]
    fn common_noise_trajectories_are_reproducible(seed in any::<u64>()) {
        let h = 0.125;
        let source = TorusGrid::with_spacing(4.0, h).unwrap();
        let grid = TorusGrid::with_spacing(2.0, h).unwrap();
        let cfg = SolverConfig { dt: 1e-2, t_end: 0.1, energy: false, record_stride: 1, ..SolverConfig::default() };
        let run = || {
            let noise = CellNoise::windowed(&NoiseStream::new(seed, 0), &grid, &source).unwrap();
            let mut stack = StackStream::with_noise(noise, &grid, cfg.dt, 1, WickConvention::Shifted, None).unwrap();
            solve_global(&mut stack, &cfg).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.times, b.times);
        for (ya, yb) in a.y.iter().zip(&b.y) {
            prop_assert_eq!(ya.values(), yb.values());
        }
    }

    #[test]
    fn negated_noise_negates_the_solution_without_mass(seed in any::<u64>()) {
        let grid = TorusGrid::new(2.0, 16).unwrap();
        let cfg = SolverConfig { a: 0.0, dt: 1e-2, t_end: 0.1, energy: false, record_stride: 1, ..SolverConfig::default() };
        let stream = NoiseStream::new(seed, 3);
        let solve = |s: NoiseStream| {
            let mut stack = StackStream::new(&s, &grid, cfg.dt, 1, WickConvention::Shifted, None).unwrap();
            solve_global(&mut stack, &cfg).unwrap()
        };
        let (p, n) = (solve(stream), solve(stream.negated()));
        for (yp, yn) in p.y.iter().zip(&n.y) {
            prop_assert_eq!(yp.values(), &(-yn.values()));
        }
    }
}
