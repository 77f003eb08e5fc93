//! Least-squares fits checked against an SVD pseudo-inverse.

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use taureau_core::predict::fit_ols;
use taureau_core::FeatureRow;

fn rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<FeatureRow> {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    (0..n)
        .map(|i| FeatureRow {
            date: start + Days::new(i as u64),
            features: (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            target: rng.random_range(-5.0..5.0),
        })
        .collect()
}

fn pinv_solution(rows: &[FeatureRow]) -> Vec<f64> {
    let k = rows[0].features.len();
    let x = DMatrix::from_fn(rows.len(), k + 1, |i, j| if j == 0 { 1.0 } else { rows[i].features[j - 1] });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.target));
    let beta = x.pseudo_inverse(1e-12).unwrap() * y;
    beta.iter().copied().collect()
}

#[test]
fn matches_pseudo_inverse_on_random_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let k = rng.random_range(1..8);
        let n = rng.random_range(k + 2..80);
        let data = rows(&mut rng, n, k);
        let model = fit_ols(&data).unwrap();
        let want = pinv_solution(&data);
        let got: Vec<f64> = std::iter::once(model.intercept).chain(model.coefficients).collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-6, "trial {trial}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn f32_fit_tracks_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let data = rows(&mut rng, 60, 3);
    let narrow: Vec<taureau_core::predict::FeatureRow<f32>> = data
        .iter()
        .map(|r| taureau_core::predict::FeatureRow {
            date: r.date,
            features: r.features.iter().map(|&f| f as f32).collect(),
            target: r.target as f32,
        })
        .collect();
    let wide = fit_ols(&data).unwrap();
    let single = fit_ols(&narrow).unwrap();
    assert!((wide.intercept - single.intercept as f64).abs() < 1e-3);
    for (a, b) in wide.coefficients.iter().zip(&single.coefficients) {
        assert!((a - *b as f64).abs() < 1e-3);
    }
}

#[test]
fn too_few_rows_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    assert!(fit_ols(&rows(&mut rng, 7, 6)).is_err());
    assert!(fit_ols(&rows(&mut rng, 8, 6)).is_ok());
}
