use cogspace::model::*;
use cogspace::optim::{nelder_mead_minimize, NelderMeadOptions};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rational(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact least-squares cubic on integer data via rational normal equations.
fn exact_cubic(points: &[(i64, i64)]) -> [f64; 4] {
    let mut a = vec![vec![BigRational::zero(); 5]; 4];
    for &(x, y) in points {
        let x = rational(x);
        let mut pows = vec![BigRational::one()];
        for k in 1..4 {
            let next = &pows[k - 1] * &x;
            pows.push(next);
        }
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = &a[i][j] + &pows[i] * &pows[j];
            }
            a[i][4] = &a[i][4] + &pows[i] * rational(y);
        }
    }
    for col in 0..4 {
        let pivot = (col..4).find(|&r| !a[r][col].is_zero()).unwrap();
        a.swap(col, pivot);
        for row in 0..4 {
            if row != col {
                let f = &a[row][col] / &a[col][col];
                let pivot_row = a[col].clone();
                for (r, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *r = &*r - &f * p;
                }
            }
        }
    }
    std::array::from_fn(|i| (&a[i][4] / &a[i][i]).to_f64().unwrap())
}

fn obs(points: Vec<(f64, f64)>) -> ObservationSet {
    ObservationSet::new(points).unwrap()
}

const NODES: [f64; 5] = [0.0, 25.0, 50.0, 75.0, 100.0];

#[test]
fn pure_cubic_recovered_against_exact_oracle() {
    let pts: Vec<(i64, i64)> = NODES
        .iter()
        .map(|&x| (x as i64, (x as i64).pow(3)))
        .collect();
    let oracle = exact_cubic(&pts);
    assert_eq!(oracle, [0.0, 0.0, 0.0, 1.0]);

    let m = fit_cubic(&obs(pts
        .iter()
        .map(|&(x, y)| (x as f64, y as f64))
        .collect()))
    .unwrap();
    assert!((m.beta3 - 1.0).abs() < 1e-9);
    // Scaled coefficients are all O(1e6) here, so compare relative to that.
    let scaled = m.scaled_coefficients();
    for (k, want) in oracle.iter().enumerate() {
        let want = want * 100f64.powi(k as i32);
        assert!((scaled[k] - want).abs() < 1e-9 * 1e6, "{scaled:?}");
    }
    assert!((m.r_squared - 1.0).abs() < 1e-12);
    assert!(m.rmse < 1e-9, "{}", m.rmse);
}

#[test]
fn noisy_integer_data_against_exact_oracle() {
    let pts = [
        (0, 3),
        (10, -7),
        (20, 4),
        (35, 12),
        (50, 0),
        (65, -5),
        (80, 9),
        (100, 2),
    ];
    let oracle = exact_cubic(&pts);
    let m = fit_cubic(&obs(pts
        .iter()
        .map(|&(x, y)| (x as f64, y as f64))
        .collect()))
    .unwrap();
    let got = m.scaled_coefficients();
    let want: Vec<f64> = oracle
        .iter()
        .enumerate()
        .map(|(k, b)| b * 100f64.powi(k as i32))
        .collect();
    for (g, w) in got.iter().zip(&want) {
        assert!(
            (g - w).abs() <= 1e-9 * w.abs().max(1.0),
            "{got:?} vs {want:?}"
        );
    }
}

#[test]
fn predict_matches_training_fit() {
    let pts = vec![
        (0.0, 0.2),
        (20.0, 1.1),
        (40.0, 0.3),
        (60.0, -0.4),
        (80.0, 0.9),
        (100.0, 0.0),
    ];
    let m = fit_cubic(&obs(pts.clone())).unwrap();
    let residuals: Vec<f64> = pts.iter().map(|(x, y)| y - predict(&m, *x)).collect();
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / pts.len() as f64).sqrt();
    assert!((rmse - m.rmse).abs() < 1e-9);
}

#[test]
fn model_json_round_trips_bit_exactly() {
    let pts = vec![
        (0.0, 0.123456789),
        (33.3, -1.5e-3),
        (61.7, 2.0 / 3.0),
        (100.0, 0.1),
        (90.0, 7.0),
    ];
    let m = fit_cubic(&obs(pts)).unwrap();
    let text = serde_json::to_string(&m).unwrap();
    let back: LoadModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
    for (a, b) in back.coefficients().iter().zip(m.coefficients()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

fn random_points(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = rng.random_range(5..15);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
    xs[0] = 0.0;
    xs[1] = 100.0;
    xs.into_iter()
        .map(|x| (x, rng.random_range(-2.0..2.0)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residuals_orthogonal_to_design(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_points(&mut rng);
        let m = fit_cubic(&obs(pts.clone())).unwrap();
        for k in 0..4 {
            let dot: f64 = pts
                .iter()
                .map(|(x, y)| (y - predict(&m, *x)) * (x / 100.0).powi(k))
                .sum();
            prop_assert!(dot.abs() < 1e-8, "column {k}: {dot}");
        }
    }

    #[test]
    fn y_shift_moves_only_intercept(seed in any::<u64>(), c in -10.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_points(&mut rng);
        let shifted: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, y + c)).collect();
        let a = fit_cubic(&obs(pts)).unwrap().scaled_coefficients();
        let b = fit_cubic(&obs(shifted)).unwrap().scaled_coefficients();
        prop_assert!((b[0] - a[0] - c).abs() < 1e-9 * a[0].abs().max(1.0));
        for k in 1..4 {
            prop_assert!((b[k] - a[k]).abs() < 1e-9 * a[k].abs().max(1.0), "k {k}: {} vs {}", b[k], a[k]);
        }
    }

    #[test]
    fn second_derivative_changes_sign_at_inflection(b2 in -10.0f64..10.0, b3 in -10.0f64..10.0) {
        prop_assume!(b3.abs() > 1e-3);
        let m = LoadModel::from_coefficients([0.0, 0.0, b2, b3]);
        let x = inflection_point(&m).unwrap().x;
        let second = |x: f64| 6.0 * b3 * x + 2.0 * b2;
        let h = 1e-3 * (1.0 + x.abs());
        prop_assert!(second(x - h) * second(x + h) < 0.0);
    }

    #[test]
    fn nelder_mead_never_worse_than_start(a in -5.0f64..5.0, b in -5.0f64..5.0, c in 0.1f64..10.0, sx in -10.0f64..10.0, sy in -10.0f64..10.0) {
        let f = |p: &[f64]| c * (p[0] - a).powi(2) + (p[1] - b).powi(2) + (p[0] * p[1]).sin();
        let r = nelder_mead_minimize(f, &[sx, sy], &NelderMeadOptions::default()).unwrap();
        prop_assert!(r.value <= f(&[sx, sy]));
    }

    #[test]
    fn argmax_invariant_to_positive_scaling(seed in any::<u64>(), k in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_points(&mut rng);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, y * k)).collect();
        let a = optimal_cli(&fit_cubic(&obs(pts)).unwrap()).optimum.x_star;
        let b = optimal_cli(&fit_cubic(&obs(scaled)).unwrap()).optimum.x_star;
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

/// Dense grid scan over [0, 100]; first maximum wins, so ties go low.
pub fn grid_argmax(model: &LoadModel) -> f64 {
    let (mut best_x, mut best_y) = (0.0, f64::NEG_INFINITY);
    for i in 0..=100_000 {
        let x = i as f64 * 0.001;
        let y = predict(model, x);
        if y > best_y {
            best_x = x;
            best_y = y;
        }
    }
    best_x
}

#[test]
fn optimal_cli_matches_grid_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let scaled: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let beta: [f64; 4] = std::array::from_fn(|k| scaled[k] / 100f64.powi(k as i32));
        let m = LoadModel::from_coefficients(beta);
        let r = optimal_cli(&m);
        assert!(
            (r.optimum.x_star - grid_argmax(&m)).abs() < 1e-3,
            "{beta:?}"
        );
        assert!((r.cli_star + r.optimum.x_star - 100.0).abs() < 1e-12);
    }
}
