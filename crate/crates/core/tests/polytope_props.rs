use std::time::Instant;

use horoflow_core::polytope::{dual_polytope, min_enclosing_ellipsoid, support_value};
use horoflow_core::Polytope64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut impl Rng, r: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Random full-dimensional polytope whose interior contains a ball about 0.
fn around_origin(rng: &mut impl Rng, r: usize) -> Polytope64 {
    let mut pts = cloud(rng, r, 4 + 2 * r);
    for a in 0..r {
        for s in [-1.0, 1.0] {
            let mut e = vec![0.0; r];
            e[a] = s * rng.gen_range(0.5..1.5);
            pts.push(e);
        }
    }
    Polytope64::from_vertices(&pts).unwrap()
}

fn brute_support(p: &Polytope64, x: &[f64]) -> f64 {
    p.vertices.iter().map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
}

fn polytope_and_points() -> impl Strategy<Value = (Polytope64, Vec<f64>, Vec<f64>, i32)> {
    (1usize..=3, any::<u64>(), -6i32..6).prop_flat_map(|(r, seed, k)| {
        let p = around_origin(&mut ChaCha8Rng::seed_from_u64(seed), r);
        let v = prop::collection::vec(-10.0f64..10.0, r);
        (Just(p), v.clone(), v, Just(k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn support_function_laws((p, x, y, k) in polytope_and_points()) {
        let h = |z: &[f64]| support_value(&p, z);
        // powers of two scale every product exactly
        let lambda = 2f64.powi(k);
        let scaled: Vec<f64> = x.iter().map(|a| a * lambda).collect();
        prop_assert_eq!(h(&scaled), lambda * h(&x));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(h(&sum) <= h(&x) + h(&y) + 1e-12);
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((h(&x) - h(&y)).abs() <= p.max_vertex_norm() * dist + 1e-12);
        prop_assert!((h(&x) - brute_support(&p, &x)).abs() <= 1e-12 * (1.0 + h(&x).abs()));
    }

    #[test]
    fn dual_is_an_involution(r in 1usize..=3, seed in any::<u64>()) {
        let q = around_origin(&mut ChaCha8Rng::seed_from_u64(seed), r);
        let qq = dual_polytope(&dual_polytope(&q).unwrap()).unwrap();
        prop_assert_eq!(qq.vertices.len(), q.vertices.len());
        for v in &q.vertices {
            let nearest = qq.vertices.iter()
                .map(|w| w.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-9, "{:?}", v);
        }
    }

    #[test]
    fn dual_membership_matches_support(r in 1usize..=3, seed in any::<u64>(), m in prop::collection::vec(-3.0f64..3.0, 3)) {
        let q = around_origin(&mut ChaCha8Rng::seed_from_u64(seed), r);
        let dual = dual_polytope(&q).unwrap();
        let m = &m[..r];
        let neg: Vec<f64> = m.iter().map(|a| -a).collect();
        let h = brute_support(&q, &neg);
        if (h - 1.0).abs() > 1e-9 {
            prop_assert_eq!(dual.contains(m, 0.0), h <= 1.0);
        }
    }
}

#[test]
fn john_ellipsoid_sandwich_on_random_polytopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let slack = 1e-6;
    for case in 0..100 {
        let r = 1 + case % 3;
        let count = r + 1 + rng.gen_range(0..8);
        let p = match Polytope64::from_vertices(&cloud(&mut rng, r, count)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let e = min_enclosing_ellipsoid(&p.vertices, 1e-7).unwrap();
        let quad = |y: &[f64]| {
            let d: Vec<f64> = y.iter().zip(&e.center).map(|(a, b)| a - b).collect();
            (0..r).map(|i| (0..r).map(|j| d[i] * e.shape[(i, j)] * d[j]).sum::<f64>()).sum::<f64>()
        };
        for v in &p.vertices {
            assert!(quad(v) <= 1.0 + slack, "case {case}: vertex outside E");
        }
        // boundary points of (1/r)E along random directions must satisfy every facet
        for _ in 0..200 {
            let z: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let shifted: Vec<f64> = z.iter().zip(&e.center).map(|(a, c)| a + c).collect();
            let t = 1.0 / (r as f64 * quad(&shifted).sqrt());
            let y: Vec<f64> = z.iter().zip(&e.center).map(|(a, c)| c + t * a).collect();
            for h in &p.halfspaces {
                let lhs: f64 = h.normal.iter().zip(&y).map(|(a, b)| a * b).sum();
                assert!(lhs <= h.offset + slack, "case {case}: (1/r)E leaves Ω by {}", lhs - h.offset);
            }
        }
    }
    assert!(start.elapsed().as_secs_f64() <= 5.0, "{:?}", start.elapsed());
}
