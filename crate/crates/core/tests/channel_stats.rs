use daf_core::channel::*;
use daf_core::specfun::bessel_j0;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn link(variance: f64, doppler: f64) -> LinkSpec {
    LinkSpec { variance, doppler }
}

#[test]
fn autocorrelation_follows_j0() {
    for (i, f) in [0.001, 0.01, 0.02, 0.05].into_iter().enumerate() {
        let p = generate_jakes(link(1.0, f), 1_000_000, 7 + i as u64).unwrap();
        for lag in 1..=10 {
            let want = bessel_j0(2.0 * PI * f * lag as f64).unwrap();
            let got = p.normalized_autocorr(lag);
            assert!((got - want).abs() <= 0.01, "f={f} lag={lag}: {got} vs {want}");
        }
    }
}

#[test]
fn symbol_spacing_doubles_the_lag() {
    let p = generate_with(GeneratorKind::SumOfSinusoids, link(1.0, 0.02), 2, 1_000_000, 3).unwrap();
    let want = bessel_j0(2.0 * PI * 0.02 * 2.0).unwrap();
    assert!((p.normalized_autocorr(1) - want).abs() <= 0.01);
}

#[test]
fn lag_one_example() {
    let p = generate_jakes(link(1.0, 0.001), 1_000_000, 7).unwrap();
    assert!((p.normalized_autocorr(1) - 0.99999).abs() <= 0.01);
}

#[test]
fn mean_power_matches_variance() {
    let p = generate_jakes(link(10.0, 0.05), 1_000_000, 11).unwrap();
    assert!((p.mean_power() - 10.0).abs() <= 0.1, "{}", p.mean_power());
}

#[test]
fn envelope_is_rayleigh() {
    // One sample from each of 1e5 independent realizations.
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut fader = SosFader::new(link(2.0, 0.02), 1);
    let mut buf = [Complex64::new(0.0, 0.0); 1];
    let mut g: Vec<f64> = (0..n)
        .map(|_| {
            fader.redraw(&mut rng);
            fader.fill(&mut buf, &mut rng);
            buf[0].norm_sqr() / 2.0
        })
        .collect();
    g.sort_by(f64::total_cmp);
    let ks = g
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x).exp();
            (cdf - i as f64 / n as f64).abs().max((cdf - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks <= 0.01, "KS = {ks}");
}

#[test]
fn cascaded_product_law() {
    let spec = ChannelSpec::new([1.0, 1.0, 1.0], [0.05, 0.01, 0.05], 1).unwrap();
    let p = generate_cascaded(&spec, 1_000_000, 5).unwrap();
    let want = cascaded_alpha(&spec).unwrap();
    let by_hand = bessel_j0(2.0 * PI * 0.01).unwrap() * bessel_j0(2.0 * PI * 0.05).unwrap();
    assert!((want - by_hand).abs() < 1e-15);
    assert!((p.normalized_autocorr(1) - want).abs() <= 0.01);
}

#[test]
fn cascaded_variance() {
    let spec = ChannelSpec::new([1.0, 10.0, 1.0], [0.05, 0.01, 0.05], 1).unwrap();
    let p = generate_cascaded(&spec, 1_000_000, 6).unwrap();
    assert!((p.mean_power() - 10.0).abs() <= 0.2, "{}", p.mean_power());
}

#[test]
fn frozen_channels_are_constant() {
    let p = generate_jakes(link(1.0, 0.0), 1000, 1).unwrap();
    assert!(p.coefficients.iter().all(|&h| h == p.coefficients[0]));
    let spec = ChannelSpec::new([1.0; 3], [0.0; 3], 1).unwrap();
    let c = generate_cascaded(&spec, 1000, 1).unwrap();
    let m = c.coefficients[0].norm();
    assert!(c.coefficients.iter().all(|h| (h.norm() - m).abs() < 1e-15));
}

#[test]
fn generation_is_deterministic() {
    let a = generate_jakes(link(1.0, 0.02), 5000, 42).unwrap();
    let b = generate_jakes(link(1.0, 0.02), 5000, 42).unwrap();
    let c = generate_jakes(link(1.0, 0.02), 5000, 43).unwrap();
    assert_eq!(a.coefficients, b.coefficients);
    assert_ne!(a.coefficients, c.coefficients);
    let spec = ChannelSpec::new([1.0; 3], [0.02, 0.01, 0.05], 1).unwrap();
    let x = generate_cascaded(&spec, 5000, 9).unwrap();
    let y = generate_cascaded(&spec, 5000, 9).unwrap();
    assert_eq!(x.coefficients, y.coefficients);
    let r = generate_with(GeneratorKind::Ar1, link(1.0, 0.02), 1, 5000, 9).unwrap();
    let s = generate_with(GeneratorKind::Ar1, link(1.0, 0.02), 1, 5000, 9).unwrap();
    assert_eq!(r.coefficients, s.coefficients);
}

#[test]
fn ar1_generator_statistics() {
    let p = generate_with(GeneratorKind::Ar1, link(3.0, 0.05), 1, 1_000_000, 8).unwrap();
    let alpha = bessel_j0(2.0 * PI * 0.05).unwrap();
    assert!((p.normalized_autocorr(1) - alpha).abs() <= 0.01);
    assert!((p.normalized_autocorr(3) - alpha.powi(3)).abs() <= 0.01);
    assert!((p.mean_power() - 3.0).abs() / 3.0 <= 0.02);
}

#[test]
fn csv_export_round_trips() {
    let p = generate_jakes(link(1.0, 0.02), 50, 4).unwrap();
    let mut out = Vec::new();
    p.write_csv(&mut out).unwrap();
    let mut r = csv::Reader::from_reader(out.as_slice());
    for (k, row) in r.records().enumerate() {
        let row = row.unwrap();
        assert_eq!(row[0].parse::<usize>().unwrap(), k);
        let re: f64 = row[1].parse().unwrap();
        let im: f64 = row[2].parse().unwrap();
        assert!((re - p.coefficients[k].re).abs() <= 1e-8 * p.coefficients[k].re.abs().max(1e-300));
        assert!((im - p.coefficients[k].im).abs() <= 1e-8 * p.coefficients[k].im.abs().max(1e-300));
    }
}
