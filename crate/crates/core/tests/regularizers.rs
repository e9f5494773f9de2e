mod common;

use proptest::prelude::*;
use sigreg::linalg::{draw_sketch, Matrix, SketchMatrix};
use sigreg::network::{backward, cross_entropy, forward, MlpModel};
use sigreg::regularizers::{
    combined_loss, sigreg, strong_directions, strong_sigreg, strong_sigreg_with_directions, weak_sigreg,
    weak_sigreg_with_sketch, QuadratureGrid, ResamplePolicy, SigregConfig,
};
use sigreg::RngStream;

use common::{
    finite_difference, gaussian_batch, max_rel_error, rank_one_batch, rel_diff, strong_reference, to_rows,
    weak_reference,
};

fn formula_batch() -> Matrix {
    Matrix::from_fn(10, 12, |i, j| {
        (0.21 * i as f64 + 0.53 * j as f64).sin() + 0.3 * (0.11 * (i * j) as f64).cos()
    })
}

#[test]
fn weak_matches_frozen_sketched_value() {
    let s = Matrix::from_fn(4, 12, |a, c| (0.7 * a as f64 + 1.9 * c as f64 + 0.5).cos() / 12f64.sqrt());
    let sketch = SketchMatrix::from_entries(s).unwrap();
    let out = weak_sigreg_with_sketch(&formula_batch(), Some(&sketch)).unwrap();
    // numpy: np.linalg.norm(cov(center(Z @ S.T)) - I, 'fro') with divisor N-1+1e-6.
    assert!(rel_diff(out.value, 1.9754480851980352) < 1e-12, "{}", out.value);
}

#[test]
fn weak_without_sketch_uses_batch_directly() {
    let full = formula_batch();
    let z = Matrix::from_fn(10, 3, |i, j| full[(i, j)]);
    let cfg = SigregConfig::weak().with_sketch_dim(8);
    let before = RngStream::new(0);
    let mut rng = before.clone();
    let out = weak_sigreg(&z, &cfg, &mut rng).unwrap();
    assert!(rel_diff(out.value, 1.5504033556021015) < 1e-12, "{}", out.value);
    assert_eq!(rng.position(), before.position(), "no sketch is drawn when C <= K");
}

#[test]
fn weak_zero_batch_is_distance_to_identity() {
    let z = Matrix::zeros(8, 4);
    let out = weak_sigreg(&z, &SigregConfig::weak(), &mut RngStream::new(0)).unwrap();
    assert!((out.value - 2.0).abs() < 1e-15);
    assert_eq!(out.grad, Matrix::zeros(8, 4));
}

#[test]
fn weak_matches_reference_on_seeded_batches() {
    for seed in 0..20u64 {
        let mut data = RngStream::new(seed);
        let (n, c, k) = ([4, 32, 100][seed as usize % 3], [8, 128, 40][seed as usize % 3], 16);
        let z = gaussian_batch(&mut data, n, c).map(|x| 1.5 * x + 0.2);
        let cfg = SigregConfig::weak().with_sketch_dim(k);
        let stream = RngStream::with_stream(seed, 7);
        let out = weak_sigreg(&z, &cfg, &mut stream.clone()).unwrap();
        let expected = if c > k {
            let s = draw_sketch(&mut stream.clone(), k, c).unwrap();
            weak_reference(&to_rows(&z), Some(&to_rows(s.entries())))
        } else {
            weak_reference(&to_rows(&z), None)
        };
        assert!(rel_diff(out.value, expected) < 1e-10, "seed {seed}: {} vs {expected}", out.value);
    }
}

#[test]
fn weak_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(5);
    let z = gaussian_batch(&mut rng, 32, 128);
    let sketch = draw_sketch(&mut rng, 16, 128).unwrap();
    let out = weak_sigreg_with_sketch(&z, Some(&sketch)).unwrap();
    let fd = finite_difference(&z, 1e-5, |p| weak_sigreg_with_sketch(p, Some(&sketch)).unwrap().value);
    let err = max_rel_error(out.grad.as_slice(), fd.as_slice());
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn weak_gradient_rows_sum_to_zero() {
    // The loss is invariant to translating every row, so the gradient has
    // zero column sums.
    let mut rng = RngStream::new(8);
    let z = gaussian_batch(&mut rng, 16, 64);
    let out = weak_sigreg(&z, &SigregConfig::weak().with_sketch_dim(8), &mut rng).unwrap();
    for s in out.grad.column_means() {
        assert!(s.abs() < 1e-12);
    }
}

#[test]
fn strong_zero_batch_matches_frozen_quadrature() {
    // Every projection of a zero batch is 0, so φ̂ ≡ 1 and the value is
    // Σ w_j (1 − e^{−t_j²/2})²; numpy gives 0.1631357646257377.
    for k in [1, 8, 64] {
        let out = strong_sigreg(&Matrix::zeros(4, 16), &SigregConfig::strong().with_sketch_dim(k), &mut RngStream::new(1)).unwrap();
        assert!(rel_diff(out.value, 0.1631357646257377) < 1e-12, "{}", out.value);
        assert_eq!(out.grad, Matrix::zeros(4, 16));
    }
}

#[test]
fn strong_matches_reference() {
    for seed in 0..10u64 {
        let mut rng = RngStream::new(seed);
        let z = gaussian_batch(&mut rng, 24, 12).map(|x| 0.8 * x + 0.1);
        let k = [4, 16][seed as usize % 2];
        let dirs = strong_directions(&mut rng.clone(), k, 12);
        let cfg = SigregConfig::strong().with_sketch_dim(k);
        let out = strong_sigreg(&z, &cfg, &mut rng).unwrap();
        let expected = strong_reference(&to_rows(&z), &to_rows(&dirs), 17, 5.0);
        assert!(rel_diff(out.value, expected) < 1e-10, "seed {seed}");
    }
}

#[test]
fn strong_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(9);
    let z = gaussian_batch(&mut rng, 32, 16);
    let dirs = strong_directions(&mut rng, 24, 16);
    let grid = QuadratureGrid::gaussian_trapezoid(17, 5.0).unwrap();
    let out = strong_sigreg_with_directions(&z, &dirs, &grid).unwrap();
    let fd = finite_difference(&z, 1e-5, |p| strong_sigreg_with_directions(p, &dirs, &grid).unwrap().value);
    let err = max_rel_error(out.grad.as_slice(), fd.as_slice());
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn strong_penalizes_mean_shift() {
    let mut rng = RngStream::new(2);
    let z = gaussian_batch(&mut rng, 2000, 4);
    let shifted = z.map(|x| x + 2.0);
    let cfg = SigregConfig::strong().with_sketch_dim(8).with_policy(ResamplePolicy::Fixed);
    let a = strong_sigreg(&z, &cfg, &mut rng).unwrap().value;
    let b = strong_sigreg(&shifted, &cfg, &mut rng).unwrap().value;
    assert!(b > 10.0 * a, "{a} vs {b}");
}

#[test]
fn gaussian_null_is_small_for_both_variants() {
    let mut rng = RngStream::new(4);
    let z = gaussian_batch(&mut rng, 100_000, 8);
    let strong = strong_sigreg(&z, &SigregConfig::strong().with_sketch_dim(8), &mut rng).unwrap();
    assert!(strong.value < 1e-3, "{}", strong.value);
    let weak = weak_sigreg(&z, &SigregConfig::weak(), &mut rng).unwrap();
    assert!(weak.value < 0.05, "{}", weak.value);
}

#[test]
fn collapse_sensitivity_strong_per_batch() {
    let (n, c, k) = (256, 64, 16);
    let cfg = SigregConfig::strong().with_sketch_dim(k);
    for seed in 0..8 {
        let mut rng = RngStream::new(seed);
        let iid = gaussian_batch(&mut rng, n, c);
        let collapsed = rank_one_batch(&mut rng, n, c);
        let sketch = RngStream::with_stream(seed, 1);
        let a = strong_sigreg(&iid, &cfg, &mut sketch.clone()).unwrap().value;
        let b = strong_sigreg(&collapsed, &cfg, &mut sketch.clone()).unwrap().value;
        assert!(b >= 5.0 * a, "seed {seed}: {b} vs {a}");
    }
}

#[test]
fn collapse_sensitivity_weak() {
    // A rank-1 batch has a rank-1 sketched covariance, so its value is at
    // least sqrt(K − 1). The ratio to an i.i.d. batch depends on the sketched
    // energy of the collapse direction; averaged over sketches it exceeds 5.
    let (n, c, k) = (256, 64, 16);
    let cfg = SigregConfig::weak().with_sketch_dim(k);
    let draws = 32;
    let mut ratio_sum = 0.0;
    for seed in 0..draws {
        let mut rng = RngStream::new(100 + seed);
        let iid = gaussian_batch(&mut rng, n, c);
        let collapsed = rank_one_batch(&mut rng, n, c);
        let sketch = RngStream::with_stream(seed, 1);
        let a = weak_sigreg(&iid, &cfg, &mut sketch.clone()).unwrap().value;
        let b = weak_sigreg(&collapsed, &cfg, &mut sketch.clone()).unwrap().value;
        assert!(b >= ((k - 1) as f64).sqrt() - 1e-9, "seed {seed}: {b}");
        ratio_sum += b / a;
    }
    let mean = ratio_sum / draws as f64;
    assert!(mean >= 5.0, "mean ratio {mean}");
}

#[test]
fn fixed_policy_is_deterministic_and_per_step_advances() {
    let mut rng = RngStream::new(1);
    let z = gaussian_batch(&mut rng, 16, 32);
    for base in [SigregConfig::weak().with_sketch_dim(8), SigregConfig::strong().with_sketch_dim(8)] {
        let fixed = base.clone().with_policy(ResamplePolicy::Fixed);
        let start = RngStream::new(50);
        let mut s = start.clone();
        let a = sigreg(&z, &fixed, &mut s).unwrap();
        let b = sigreg(&z, &fixed, &mut s).unwrap();
        assert_eq!(a, b);
        assert_eq!(s.position(), start.position());

        let per_step = base.with_policy(ResamplePolicy::PerStep);
        let mut s = start.clone();
        let a = sigreg(&z, &per_step, &mut s).unwrap();
        let b = sigreg(&z, &per_step, &mut s).unwrap();
        assert_ne!(a.value, b.value);
        let mut again = start.clone();
        assert_eq!(sigreg(&z, &per_step, &mut again).unwrap(), a);
    }
}

#[test]
fn degenerate_batches_are_rejected() {
    let z = Matrix::zeros(1, 8);
    let mut rng = RngStream::new(0);
    assert!(matches!(weak_sigreg(&z, &SigregConfig::weak(), &mut rng), Err(sigreg::Error::DegenerateBatch { rows: 1 })));
    assert!(matches!(strong_sigreg(&z, &SigregConfig::strong(), &mut rng), Err(sigreg::Error::DegenerateBatch { rows: 1 })));
}

#[test]
fn combined_loss_gradient_is_additive_through_a_network() {
    // 2-layer net: loss = CE(logits) + [weak + alpha * strong](hidden).
    let widths = [6, 10, 3];
    let model = MlpModel::he_init(&widths, &RngStream::new(3)).unwrap();
    let mut rng = RngStream::new(4);
    let x = gaussian_batch(&mut rng, 12, 6);
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let sketch = draw_sketch(&mut rng, 4, 10).unwrap();
    let dirs = strong_directions(&mut rng, 6, 10);
    let grid = QuadratureGrid::gaussian_trapezoid(17, 5.0).unwrap();
    let alpha = 0.7;

    let loss_of = |m: &MlpModel| {
        let trace = forward(m, &x).unwrap();
        let h = trace.hidden(1).unwrap();
        let ce = cross_entropy(trace.logits(), &labels).unwrap();
        let weak = weak_sigreg_with_sketch(h, Some(&sketch)).unwrap();
        let strong = strong_sigreg_with_directions(h, &dirs, &grid).unwrap();
        ce.value + weak.value + alpha * strong.value
    };

    let trace = forward(&model, &x).unwrap();
    let h = trace.hidden(1).unwrap();
    let ce = cross_entropy(trace.logits(), &labels).unwrap();
    let weak = weak_sigreg_with_sketch(h, Some(&sketch)).unwrap();
    let strong = strong_sigreg_with_directions(h, &dirs, &grid).unwrap();
    let reg = combined_loss(&weak, &strong, alpha).unwrap();
    assert!((reg.value - (weak.value + alpha * strong.value)).abs() < 1e-15);
    assert!(combined_loss(&ce, &weak, 1.0).is_err());
    let grads = backward(&model, &trace, &ce.grad, &[(1, &reg.grad)]).unwrap();
    let analytic: Vec<f64> = grads.values().collect();

    let params = model.parameters();
    let mut fd = Vec::with_capacity(params.len());
    let h = 1e-5;
    for i in 0..params.len() {
        let mut up = model.clone();
        *up.parameter_mut(i) += h;
        let mut down = model.clone();
        *down.parameter_mut(i) -= h;
        fd.push((loss_of(&up) - loss_of(&down)) / (2.0 * h));
    }
    let err = max_rel_error(&analytic, &fd);
    assert!(err < 1e-5, "relative error {err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_vanishes_on_unit_covariance(seed in 0u64..1000, n in 3usize..20) {
        // Build a batch whose centered covariance is exactly I_C (C <= K path):
        // orthonormalize centered columns, then rescale by sqrt(N − 1 + 1e-6).
        let c = 2;
        let mut rng = RngStream::new(seed);
        let g = gaussian_batch(&mut rng, n, c);
        let mut cols: Vec<Vec<f64>> = (0..c).map(|j| {
            let col: Vec<f64> = (0..n).map(|i| g[(i, j)]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            col.iter().map(|x| x - m).collect()
        }).collect();
        for j in 0..c {
            for p in 0..j {
                let d: f64 = cols[j].iter().zip(&cols[p]).map(|(a, b)| a * b).sum();
                let prev = cols[p].clone();
                cols[j].iter_mut().zip(&prev).for_each(|(a, b)| *a -= d * b);
            }
            let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            cols[j].iter_mut().for_each(|x| *x /= norm);
        }
        let scale = (n as f64 - 1.0 + 1e-6).sqrt();
        let z = Matrix::from_fn(n, c, |i, j| cols[j][i] * scale + 3.0);
        let out = weak_sigreg(&z, &SigregConfig::weak(), &mut rng).unwrap();
        prop_assert!(out.value < 1e-10, "{}", out.value);
    }

    #[test]
    fn weak_zero_set_matches_covariance_distance(seed in 0u64..1000, delta in 0.0f64..4e-5) {
        // Stretch one column of a unit-covariance batch by (1 + δ): the loss
        // is below 1e-5 exactly when the reference covariance distance is.
        let n = 12;
        let mut rng = RngStream::new(seed);
        let g = gaussian_batch(&mut rng, n, 1);
        let mean = g.column_means()[0];
        let norm = (0..n).map(|i| (g[(i, 0)] - mean).powi(2)).sum::<f64>().sqrt();
        let scale = (n as f64 - 1.0 + 1e-6).sqrt() / norm;
        let z = Matrix::from_fn(n, 1, |i, _| (g[(i, 0)] - mean) * scale * (1.0 + delta));
        let value = weak_sigreg(&z, &SigregConfig::weak(), &mut rng).unwrap().value;
        let reference = weak_reference(&to_rows(&z), None);
        prop_assert!((value - reference).abs() < 1e-12);
        prop_assert_eq!(value < 1e-5, reference < 1e-5);
    }

    #[test]
    fn weak_positive_off_unit_covariance(seed in 0u64..1000, s in 0.0f64..0.9) {
        // Scaling a batch changes its covariance away from I, so the loss is
        // strictly positive.
        let mut rng = RngStream::new(seed);
        let z = gaussian_batch(&mut rng, 16, 4).map(|x| x * s);
        let out = weak_sigreg(&z, &SigregConfig::weak(), &mut rng).unwrap();
        prop_assert!(out.value > 0.0);
        prop_assert!(out.grad.is_finite());
    }

    #[test]
    fn weak_is_translation_invariant(seed in 0u64..1000, shift in -5.0f64..5.0) {
        let mut rng = RngStream::new(seed);
        let z = gaussian_batch(&mut rng, 8, 32);
        let cfg = SigregConfig::weak().with_sketch_dim(8);
        let a = weak_sigreg(&z, &cfg, &mut RngStream::new(seed)).unwrap().value;
        let b = weak_sigreg(&z.map(|x| x + shift), &cfg, &mut RngStream::new(seed)).unwrap().value;
        prop_assert!(rel_diff(a, b) < 1e-9);
    }

    #[test]
    fn strong_is_bounded_and_nonnegative(seed in 0u64..1000, scale in 0.0f64..10.0) {
        // |φ̂ − φ| <= 2, so the value never exceeds 4 Σ w_j < 4.
        let mut rng = RngStream::new(seed);
        let z = gaussian_batch(&mut rng, 8, 6).map(|x| x * scale);
        let out = strong_sigreg(&z, &SigregConfig::strong().with_sketch_dim(5), &mut rng).unwrap();
        prop_assert!(out.value >= 0.0 && out.value < 4.0);
    }
}
