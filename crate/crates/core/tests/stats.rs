use motionlab::stats::{fit_map, fit_mle, MapHyper, MapOptions, MleOptions, WrappedSampler};
use motionlab::Posture;
use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four parts with a clearly least-aligned axis each, so nearby charts vary smoothly.
fn truth() -> Posture {
    Posture::from_vectors(&[
        Vector3::new(0.15, 0.5, 0.85),
        Vector3::new(0.9, 0.1, 0.4),
        Vector3::new(-0.3, 0.85, 0.1),
        Vector3::new(0.45, -0.2, -0.8),
    ])
    .unwrap()
}

/// Random anisotropic covariance with standard deviations in [0.05, 0.25].
fn random_cov(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
        rng.random_range(0.05f64..0.25).powi(2)
    }));
    let k = &q * s * q.transpose();
    (&k + k.transpose()) * 0.5
}

fn draw(mu: &Posture, k: &DMatrix<f64>, n: usize, rng: &mut ChaCha8Rng) -> Vec<Posture> {
    let mut s = WrappedSampler::new(mu, k).unwrap();
    (0..n).map(|_| s.sample(rng).unwrap()).collect()
}

#[test]
fn mle_recovers_planted_distribution() {
    let mu = truth();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_cov(mu.dim(), &mut rng);
        let samples = draw(&mu, &k, 500, &mut rng);
        let fit = fit_mle(&samples, &MleOptions::default()).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.dist.mean.parts().iter().zip(mu.parts()) {
            assert!(a.distance(b) < 0.05, "seed {seed}: mean error {}", a.distance(b));
        }
        let rel = (&fit.dist.cov - &k).norm() / k.norm();
        assert!(rel < 0.15, "seed {seed}: covariance error {rel}");
    }
}

#[test]
fn mle_is_stationary() {
    let mu = truth();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = random_cov(mu.dim(), &mut rng);
    let samples = draw(&mu, &k, 100, &mut rng);
    let opts = MleOptions::default();
    let fit = fit_mle(&samples, &opts).unwrap();
    let chart = fit.dist.mean.chart();
    let mut sum = nalgebra::DVector::zeros(mu.dim());
    for s in &samples {
        sum += chart.coords(s).unwrap();
    }
    assert!((sum / samples.len() as f64).norm() <= opts.tol);
}

/// M × L postures scattered around a smoothly moving mean.
fn motion_data(m: usize, l: usize, sd: f64, seed: u64) -> Vec<Vec<Posture>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = truth();
    let dir = nalgebra::DVector::from_fn(base.dim(), |_, _| rng.random_range(-0.3..0.3));
    let means: Vec<Posture> = (0..l)
        .map(|i| base.chart().point(&(&dir * (i as f64 / l as f64))).unwrap())
        .collect();
    let k = DMatrix::identity(base.dim(), base.dim()) * (sd * sd);
    (0..m)
        .map(|_| {
            means
                .iter()
                .map(|mu| draw(mu, &k, 1, &mut rng).pop().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn map_objective_is_monotone() {
    for seed in 0..6 {
        let data = motion_data(12, 8, 0.15, seed);
        for &lambda0_sq in &[1.0, 0.05, 1e-3] {
            let mut hyper = MapHyper::default_for(data[0][0].clone());
            hyper.lambda0_sq = lambda0_sq;
            let fit = fit_map(&data, &hyper, &MapOptions::default()).unwrap();
            assert!(
                fit.converged,
                "seed {seed}, λ0² {lambda0_sq}: residual {}",
                fit.residual
            );
            for w in fit.objective.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-8,
                    "seed {seed}, λ0² {lambda0_sq}: {} -> {}",
                    w[0],
                    w[1]
                );
            }
            for step in &fit.dist.steps {
                assert!((&step.cov - step.cov.transpose()).amax() == 0.0);
                assert!(step.cov.clone().cholesky().is_some());
            }
        }
    }
}

#[test]
fn weak_coupling_matches_per_step_mle() {
    let data = motion_data(15, 6, 0.2, 11);
    let mut hyper = MapHyper::default_for(data[0][0].clone());
    hyper.lambda0_sq = 1e9;
    let fit = fit_map(&data, &hyper, &MapOptions::default()).unwrap();
    for (l, step) in fit.dist.steps.iter().enumerate() {
        let col: Vec<Posture> = data.iter().map(|row| row[l].clone()).collect();
        let mle = fit_mle(&col, &MleOptions::default()).unwrap();
        for (a, b) in step.mean.parts().iter().zip(mle.dist.mean.parts()) {
            assert!(a.distance(b) < 1e-3);
        }
    }
}

#[test]
fn strong_coupling_pulls_means_together() {
    let data = motion_data(10, 6, 0.2, 5);
    let spread = |hyper: &MapHyper| {
        let fit = fit_map(&data, hyper, &MapOptions::default()).unwrap();
        let ms = fit.dist.means();
        ms.windows(2).map(|w| w[0].distance(&w[1]).unwrap()).sum::<f64>()
    };
    let mut loose = MapHyper::default_for(data[0][0].clone());
    loose.lambda0_sq = 1e6;
    let mut tight = loose.clone();
    tight.lambda0_sq = 1e-4;
    assert!(spread(&tight) < 0.5 * spread(&loose));
}
