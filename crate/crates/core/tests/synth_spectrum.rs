use effdim::krr;
use effdim::synth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gram_spectrum_tracks_operator_eigenvalues() {
    let model = synth::build_model(1.0, 2.0, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
    let gram = model.gram(&xs).unwrap();
    let spectrum = krr::normalized_spectrum(&gram).unwrap();
    let mu = model.eigenvalues();
    for n in 0..3 {
        let rel = (spectrum[n] - mu[n]).abs() / mu[n];
        assert!(rel < 0.1, "eigenvalue {}: {} vs {}", n + 1, spectrum[n], mu[n]);
    }
    let trace: f64 = spectrum.iter().sum();
    let expected: f64 = mu.iter().sum();
    assert!((trace - expected).abs() / expected < 0.05);
}

#[test]
fn kappa_bounds_the_diagonal() {
    let model = synth::build_model(1.0, 2.0, 512).unwrap();
    let kappa = model.kappa();
    assert!((kappa - (std::f64::consts::PI.powi(2) / 3.0).sqrt()).abs() < 1e-10);
    for x in [0.0, 0.1, 0.37, 0.5, 1.0] {
        let k = effdim::krr::Kernel::eval(&model, x, x);
        assert!(k <= kappa * kappa + 1e-12, "K({x},{x}) = {k}");
    }
}
