use proptest::prelude::*;
use svi_core::numerics::{norm2, norm_inf, sub};
use svi_core::{BoxSet, Piece, RngStream};

mod common;

proptest! {
    #[test]
    fn projection_idempotent_and_nonexpansive(seed in any::<u64>(), q in 1usize..8) {
        let mut rng = RngStream::new(seed, 1).rng();
        let s = common::random_box(&mut rng, q);
        let z = common::random_vector(&mut rng, q, 4.0);
        let w = common::random_vector(&mut rng, q, 4.0);
        let pz = s.project(&z);
        prop_assert_eq!(s.project(&pz), pz.clone());
        prop_assert!(norm2(&sub(&pz, &s.project(&w))) <= norm2(&sub(&z, &w)) * (1.0 + 1e-15));
    }

    #[test]
    fn dpi_positively_homogeneous(seed in any::<u64>(), q in 1usize..8, lambda in 0.0f64..50.0) {
        let mut rng = RngStream::new(seed, 2).rng();
        let s = common::random_box(&mut rng, q);
        let z = common::point_on_faces(&mut rng, &s);
        let h = common::random_vector(&mut rng, q, 2.0);
        let scaled: Vec<f64> = h.iter().map(|v| lambda * v).collect();
        let lhs = s.dpi_apply(&z, &scaled);
        let rhs: Vec<f64> = s.dpi_apply(&z, &h).iter().map(|v| lambda * v).collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn b_derivative_error_vanishes_faster_than_t() {
    let mut rng = RngStream::new(5, 0).rng();
    for _ in 0..2000 {
        let q = 1 + (rng.unit() * 6.0) as usize;
        let s = common::random_box(&mut rng, q);
        let z = common::point_on_faces(&mut rng, &s);
        let h = common::random_vector(&mut rng, q, 1.0);
        let d = s.dpi_apply(&z, &h);
        let px = s.project(&z);
        let ratios: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&t| {
                let moved: Vec<f64> = z.iter().zip(&h).map(|(a, b)| a + t * b).collect();
                let lin: Vec<f64> = px.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                norm2(&sub(&s.project(&moved), &lin)) / t
            })
            .collect();
        assert!(ratios[1] <= ratios[0] + 1e-9 && ratios[2] <= ratios[1] + 1e-9, "{ratios:?}");
        assert!(ratios[2] <= 1e-6, "{ratios:?}");
    }
}

fn sample_in_piece(rng: &mut svi_core::StreamRng, lo: f64, up: f64, piece: Piece) -> f64 {
    match piece {
        Piece::Lower => lo - rng.affine_unit(0.0, 2.0),
        Piece::Upper => up + rng.affine_unit(0.0, 2.0),
        Piece::Middle => {
            let a = if lo.is_finite() {
                lo
            } else if up.is_finite() {
                up - 3.0
            } else {
                -3.0
            };
            let b = if up.is_finite() { up } else { a + 3.0 };
            if a == b {
                a
            } else {
                rng.affine_unit(a, b)
            }
        }
    }
}

#[test]
fn dpi_symmetric_on_common_cells() {
    let mut rng = RngStream::new(6, 0).rng();
    for _ in 0..10_000 {
        let q = 1 + (rng.unit() * 6.0) as usize;
        let s = common::random_box(&mut rng, q);
        let pieces: Vec<Piece> = (0..q)
            .map(|j| {
                let mut options = vec![Piece::Middle];
                if s.lower()[j].is_finite() {
                    options.push(Piece::Lower);
                }
                if s.upper()[j].is_finite() {
                    options.push(Piece::Upper);
                }
                options[(rng.unit() * options.len() as f64) as usize]
            })
            .collect();
        let mut draw = || -> Vec<f64> {
            (0..q).map(|j| sample_in_piece(&mut rng, s.lower()[j], s.upper()[j], pieces[j])).collect()
        };
        let x = draw();
        let y = draw();
        assert!(s.dpi_symmetry_check(&x, &y, 0.0).unwrap(), "x {x:?} y {y:?} on {s:?}");
    }
}

#[test]
fn nearby_cells_are_cells_at_the_center() {
    let mut rng = RngStream::new(7, 0).rng();
    for _ in 0..1000 {
        let q = 1 + (rng.unit() * 6.0) as usize;
        let s = common::random_box(&mut rng, q);
        let x = common::point_on_faces(&mut rng, &s);
        // stay closer than every bound x is not already on
        let gap = (0..q)
            .flat_map(|j| [s.lower()[j], s.upper()[j]].map(|b| (x[j] - b).abs()))
            .filter(|d| *d > 0.0 && d.is_finite())
            .fold(1.0f64, f64::min);
        let radius = 0.5 * gap;
        let here = s.cells_at(&x, 0.0).unwrap();
        for _ in 0..5 {
            let y: Vec<f64> = x.iter().map(|v| v + rng.affine_unit(-radius, radius)).collect();
            assert!(norm_inf(&sub(&y, &x)) < gap);
            for cell in s.cells_at(&y, 0.0).unwrap() {
                assert!(here.contains(&cell), "cell {cell:?} at {y:?} missing from {x:?}");
            }
        }
    }
}

#[test]
fn classification_matches_box() {
    let s = BoxSet::new(vec![0.0, -1.0], vec![f64::INFINITY, 1.0]).unwrap();
    assert_eq!(s.cells_at(&[0.0, 1.0], 0.0).unwrap().len(), 4);
}
