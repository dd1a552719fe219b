mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use utsgan::evaluation::*;
use utsgan::nn::FcnClassifier;
use utsgan_autograd::Tensor;

const SMALL_BLOCKS: [(usize, usize); 3] = [(8, 8), (8, 5), (128, 3)];

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let t = normal_tensor(&[rows, cols], 1.0, &mut rng(seed));
    DMatrix::from_row_slice(rows, cols, t.data())
}

/// `R Rᵀ` with more columns than rows, so positive definite almost surely.
fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
    let r = random_matrix(d, d + 2, seed);
    &r * r.transpose()
}

fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    random_matrix(d, d, seed).qr().q()
}

fn gaussian(mean: Vec<f64>, cov: DMatrix<f64>) -> Gaussian {
    Gaussian {
        mean: DVector::from_vec(mean),
        cov,
    }
}

fn brute_force_cov(x: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = x.shape();
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    let cov = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..n).map(|i| (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect();
    (mean, cov)
}

#[test]
fn two_point_gaussian() {
    let mut x = DMatrix::zeros(2, 3);
    x[(1, 0)] = 2.0;
    let g = fit_gaussian(&x).unwrap();
    assert_eq!(g.mean[0], 1.0);
    assert_eq!(g.cov[(0, 0)], 2.0);
    assert_eq!(g.cov[(1, 1)], 0.0);
}

#[test]
fn identical_rows_have_zero_covariance() {
    let row = [0.5, -1.0, 3.0];
    let x = DMatrix::from_fn(6, 3, |_, j| row[j]);
    let g = fit_gaussian(&x).unwrap();
    assert!(g.cov.iter().all(|&v| v == 0.0));
    assert!(fit_gaussian(&DMatrix::zeros(1, 3)).is_err());
}

#[test]
fn covariance_matches_brute_force() {
    for seed in 0..5 {
        let x = random_matrix(17, 6, seed) * 3.0;
        let g = fit_gaussian(&x).unwrap();
        let (mean, cov) = brute_force_cov(&x);
        for a in 0..6 {
            assert!((g.mean[a] - mean[a]).abs() <= 1e-10);
            for b in 0..6 {
                assert!((g.cov[(a, b)] - cov[a][b]).abs() <= 1e-10, "seed {seed} ({a},{b})");
            }
        }
    }
}

#[test]
fn closed_form_distances() {
    let a = gaussian(vec![0.0], DMatrix::from_element(1, 1, 1.0));
    let b = gaussian(vec![1.0], DMatrix::from_element(1, 1, 1.0));
    assert!((frechet_distance(&a, &b).unwrap() - 1.0).abs() <= 1e-8);

    let a = gaussian(vec![0.0, 0.0], DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])));
    let b = gaussian(vec![0.0, 0.0], DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 16.0])));
    assert!((frechet_distance(&a, &b).unwrap() - 8.0).abs() <= 1e-8);

    let c = gaussian(vec![0.0; 3], DMatrix::identity(3, 3));
    assert!(frechet_distance(&a, &c).is_err());
}

#[test]
fn rank_deficient_self_distance_is_zero() {
    let x = random_matrix(5, 12, 3);
    let g = fit_gaussian(&x).unwrap();
    assert!(frechet_distance(&g, &g).unwrap() <= 1e-6);
}

#[test]
fn commuting_square_root_matches_eigen_oracle() {
    for seed in 0..10 {
        let d = 2 + seed as usize % 5;
        let q = random_orthogonal(d, 100 + seed);
        let mut r = rng(200 + seed);
        let la: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut r, 0.1..5.0)).collect();
        let lb: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut r, 0.0..5.0)).collect();
        let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(v));
        let a = &q * diag(&la) * q.transpose();
        let b = &q * diag(&lb) * q.transpose();
        let roots: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| (x * y).sqrt()).collect();
        let oracle = &q * diag(&roots) * q.transpose();
        let root = product_sqrt(&a, &b).unwrap();
        assert!((&root - &oracle).abs().max() <= 1e-8, "seed {seed}");
        let tr = trace_sqrt_product(&a, &b).unwrap();
        assert!((tr - roots.iter().sum::<f64>()).abs() <= 1e-8);
    }
}

#[test]
fn non_commuting_root_squares_back_and_agrees_with_trace_route() {
    for seed in 0..10 {
        let a = random_spd(5, 300 + seed);
        let b = random_spd(5, 400 + seed);
        let root = product_sqrt(&a, &b).unwrap();
        let ab = &a * &b;
        assert!((&root * &root - &ab).abs().max() <= 1e-8 * ab.abs().max());
        let tr = trace_sqrt_product(&a, &b).unwrap();
        assert!((root.trace() - tr).abs() <= 1e-8 * tr.abs().max(1.0));
    }
}

fn small_fcn(len: usize) -> FcnClassifier {
    FcnClassifier::with_blocks(len, 2, SMALL_BLOCKS, 5).unwrap()
}

#[test]
fn feature_contracts() {
    let fcn = small_fcn(32);
    let x = uniform_tensor(&[5, 32], -1.0, 1.0, &mut rng(1));
    let f = extract_features(&fcn, &x).unwrap();
    assert_eq!(f.shape(), (5, 128));
    assert_eq!(f, extract_features(&fcn, &x).unwrap());

    let dup = Tensor::stack(&[Tensor::new([32], x.row(2).to_vec()), Tensor::new([32], x.row(2).to_vec())]);
    let fd = extract_features(&fcn, &dup).unwrap();
    assert_eq!(fd.row(0), fd.row(1));
    assert_eq!(fd.row(0), f.row(2));

    let extremes = Tensor::stack(&[Tensor::full([32], 1.0), Tensor::full([32], -1.0)]);
    assert!(extract_features(&fcn, &extremes).unwrap().iter().all(|v| v.is_finite()));
    assert!(extract_features(&fcn, &Tensor::zeros([2, 31])).is_err());
}

#[test]
fn identical_and_shuffled_sets_score_zero() {
    let fcn = small_fcn(32);
    let real = uniform_tensor(&[40, 32], -1.0, 1.0, &mut rng(2));
    assert!(fid_score(&fcn, &real, &real).unwrap().abs() <= 1e-4);
    let mut order: Vec<usize> = (0..40).collect();
    order.shuffle(&mut rng(3));
    let shuffled = real.select_rows(&order);
    assert!(fid_score(&fcn, &real, &shuffled).unwrap().abs() <= 1e-4);
}

#[test]
fn fid_is_row_permutation_invariant() {
    let fcn = small_fcn(32);
    let a = uniform_tensor(&[30, 32], -1.0, 1.0, &mut rng(4));
    let b = normal_tensor(&[25, 32], 0.5, &mut rng(5));
    let base = fid_score(&fcn, &a, &b).unwrap();
    for seed in 0..3 {
        let mut pa: Vec<usize> = (0..30).collect();
        let mut pb: Vec<usize> = (0..25).collect();
        pa.shuffle(&mut rng(10 + seed));
        pb.shuffle(&mut rng(20 + seed));
        assert_eq!(fid_score(&fcn, &a.select_rows(&pa), &b.select_rows(&pb)).unwrap(), base);
    }
}

#[test]
fn report_helpers() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert_eq!(default_samples_per_run(20), 128);
    assert_eq!(default_samples_per_run(300), 300);
    let (train, val) = stratified_split(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 0.2, 1);
    assert_eq!((train.len(), val.len()), (8, 2));
    assert!(val.iter().any(|&i| i < 5) && val.iter().any(|&i| i >= 5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn distance_is_symmetric(d in 1usize..8, seed in 0u64..10_000) {
        let a = gaussian(random_matrix(1, d, seed).iter().copied().collect(), random_spd(d, seed + 1));
        let b = gaussian(random_matrix(1, d, seed + 2).iter().copied().collect(), random_spd(d, seed + 3));
        let ab = frechet_distance(&a, &b).unwrap();
        let ba = frechet_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-8 * ab.max(1.0), "{} vs {}", ab, ba);
        prop_assert!(frechet_distance(&a, &a).unwrap() <= 1e-6);
    }

    #[test]
    fn fitted_covariance_is_symmetric_psd(n in 2usize..20, d in 1usize..10, seed in 0u64..10_000) {
        let g = fit_gaussian(&(random_matrix(n, d, seed) * 4.0)).unwrap();
        prop_assert!((&g.cov - g.cov.transpose()).abs().max() <= 1e-10);
        let eig = g.cov.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-8));
    }

    #[test]
    fn feature_scaling_scales_distance_quadratically(seed in 0u64..10_000, log_c in -1.0f64..1.0) {
        let c = 10f64.powf(log_c);
        let x = random_matrix(12, 4, seed);
        let y = random_matrix(15, 4, seed + 1) * 1.5;
        let base = frechet_distance(&fit_gaussian(&x).unwrap(), &fit_gaussian(&y).unwrap()).unwrap();
        let scaled = frechet_distance(&fit_gaussian(&(&x * c)).unwrap(), &fit_gaussian(&(&y * c)).unwrap()).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-6 * c * c * base, "{} vs {}", scaled, c * c * base);
    }
}
