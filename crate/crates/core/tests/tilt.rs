use proptest::prelude::*;
use tiltsense::ef::oracle::{numeric_tilt_oracle, GridSpec};
use tiltsense::ef::{tilt, tilt_mixture, MixtureDist, Support, TiltVector, UnivariateEF};
use tiltsense::Error;

fn normal(m: f64, v: f64) -> UnivariateEF {
    UnivariateEF::normal(m, v).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn normal_normalizer_against_mgf_and_quadrature() {
    let d = normal(1.3, 0.49);
    let tv = TiltVector::linear(0.7);
    let closed = d.log_tilt_normalizer(&tv).unwrap().exp();
    let mgf = (0.7f64 * 1.3 + 0.5 * 0.49 * 0.49).exp();
    assert!(rel(closed, mgf) <= 1e-12);
    let mix = MixtureDist::single(d);
    let grid = GridSpec::covering(&mix, &tv).unwrap();
    let oracle = numeric_tilt_oracle(|y| mix.density(y), &tv, &grid).unwrap();
    assert!(rel(oracle.normalizer, closed) <= 1e-8);
    let tilted = tilt(&d, &tv).unwrap();
    for (y, f) in oracle.density.y.iter().zip(&oracle.density.f) {
        assert!((tilted.density(*y) - f).abs() <= 1e-6);
    }
}

#[test]
fn zero_tilt_normalizer_is_one() {
    let mix = MixtureDist::single(normal(0.0, 1.0));
    let grid = GridSpec::covering(&mix, &TiltVector::ZERO).unwrap();
    let oracle = numeric_tilt_oracle(|y| mix.density(y), &TiltVector::ZERO, &grid).unwrap();
    assert!((oracle.normalizer - 1.0).abs() <= 1e-10);
}

#[test]
fn narrow_grid_is_rejected() {
    let mix = MixtureDist::single(normal(0.0, 1.0));
    let grid = GridSpec::new(-2.0, 2.0, 4096).unwrap();
    let err = numeric_tilt_oracle(|y| mix.density(y), &TiltVector::linear(0.1), &grid).unwrap_err();
    assert_eq!(err.code(), "GRID_TOO_NARROW");
}

#[test]
fn bernoulli_shift() {
    let b = UnivariateEF::bernoulli(0.3).unwrap();
    let t = tilt(&b, &TiltVector::linear(2f64.ln())).unwrap();
    assert!((t.mean() - 6.0 / 13.0).abs() < 1e-15);
    assert!((b.log_tilt_normalizer(&TiltVector::linear(2f64.ln())).unwrap().exp() - 1.3).abs() < 1e-14);
    assert!(matches!(tilt(&b, &TiltVector::new(0.1, 0.1)), Err(Error::FamilyMismatch(_))));
}

#[test]
fn quadratic_propriety() {
    let d = normal(0.0, 2.0);
    assert!(matches!(tilt(&d, &TiltVector::new(0.0, 0.25)), Err(Error::ProprietyViolation(_))));
    let t = tilt(&d, &TiltVector::new(0.5, 0.1)).unwrap();
    let shrink = 1.0 - 2.0 * 0.1 * 2.0;
    assert!(rel(t.variance(), 2.0 / shrink) < 1e-12);
    assert!(rel(t.mean(), (0.5 * 2.0) / shrink) < 1e-12);
}

#[test]
fn two_component_weights_match_oracle() {
    let mix = MixtureDist::new(vec![normal(0.0, 1.0), normal(5.0, 4.0)], vec![0.5, 0.5]).unwrap();
    let tv = TiltVector::linear(0.7);
    let t = tilt_mixture(&mix, &tv).unwrap();
    let grid = GridSpec::covering(&mix, &tv).unwrap();
    let oracle = numeric_tilt_oracle(|y| mix.density(y), &tv, &grid).unwrap();
    // component 0 share of the tilted density by quadrature
    let c0 = MixtureDist::single(mix.components()[0]);
    let part = numeric_tilt_oracle(|y| c0.density(y), &tv, &grid).unwrap();
    let w0 = 0.5 * part.normalizer / oracle.normalizer;
    assert!(rel(t.weights()[0], w0) <= 1e-6);
}

#[test]
fn quantile_edge_cases() {
    let n = MixtureDist::single(normal(0.0, 1.0));
    assert!(n.quantile(0.5).unwrap().abs() < 1e-9);
    let atom = MixtureDist::with_zero_atom(vec![normal(5.0, 1.0)], vec![1.0], 0.4, Support::Identity).unwrap();
    assert_eq!(atom.quantile(0.3).unwrap(), 0.0);
    assert!(matches!(n.quantile(0.0), Err(Error::QuantileOutOfRange(_))));
    assert!(matches!(n.quantile(1.0), Err(Error::QuantileOutOfRange(_))));
}

#[test]
fn mixture_median_against_monte_carlo() {
    use rand::SeedableRng;
    let mix = MixtureDist::new(vec![normal(0.0, 1.0), normal(5.0, 4.0)], vec![0.5, 0.5]).unwrap();
    let q = mix.quantile(0.5).unwrap();
    assert!((mix.cdf(q) - 0.5).abs() <= 1e-10);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let n = 1_000_000;
    let below = (0..n).filter(|_| mix.sample(&mut rng) <= q).count() as f64 / n as f64;
    // binomial share at the true median
    assert!((below - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
}

fn normal_strategy() -> impl Strategy<Value = (f64, f64)> {
    (-5.0..5.0f64, 0.1..5.0f64)
}

fn mixture_strategy() -> impl Strategy<Value = MixtureDist> {
    prop::collection::vec((-6.0..6.0f64, 0.2..3.0f64, 0.05..1.0f64), 1..=5).prop_map(|cs| {
        let comps = cs.iter().map(|&(m, s, _)| normal(m, s * s)).collect();
        let w: Vec<f64> = cs.iter().map(|c| c.2).collect();
        let total: f64 = w.iter().sum();
        MixtureDist::new(comps, w.iter().map(|x| x / total).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_additive((m, v) in normal_strategy(), a in -1.0..1.0f64, b in -1.0..1.0f64,
                               qa in -0.05..0.05f64, qb in -0.05..0.05f64) {
        let d = normal(m, v);
        let (ta, tb) = (TiltVector::new(a, qa), TiltVector::new(b, qb));
        prop_assume!(d.check_tilt(&ta).is_ok() && d.check_tilt(&(ta + tb)).is_ok());
        let step = tilt(&d, &ta).unwrap();
        prop_assume!(step.check_tilt(&tb).is_ok());
        let twice = tilt(&step, &tb).unwrap();
        let once = tilt(&d, &(ta + tb)).unwrap();
        for k in 0..2 {
            let (x, y) = (twice.natural()[k], once.natural()[k]);
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn tilt_inverts((m, v) in normal_strategy(), g in -2.0..2.0f64) {
        let d = normal(m, v);
        let tv = TiltVector::linear(g);
        let back = tilt(&tilt(&d, &tv).unwrap(), &-tv).unwrap();
        prop_assert!((back.mean() - m).abs() <= 1e-12 * (1.0 + m.abs() + g.abs() * v));
        prop_assert!((back.variance() - v).abs() <= 1e-12 * v);
    }

    #[test]
    fn linear_tilt_shifts_mean((m, v) in normal_strategy(), g in -2.0..2.0f64) {
        let t = tilt(&normal(m, v), &TiltVector::linear(g)).unwrap();
        prop_assert!((t.mean() - m - g * v).abs() <= 1e-12 * (1.0 + m.abs() + (g * v).abs()));
        prop_assert_eq!(t.variance(), v);
    }

    #[test]
    fn mixture_tilt_matches_oracle(mix in mixture_strategy(), g in -1.0..1.0f64) {
        let tv = TiltVector::linear(g);
        let t = tilt_mixture(&mix, &tv).unwrap();
        let grid = GridSpec::covering(&mix, &tv).unwrap();
        let oracle = numeric_tilt_oracle(|y| mix.density(y), &tv, &grid).unwrap();
        for (y, f) in oracle.density.y.iter().zip(&oracle.density.f).step_by(7) {
            prop_assert!((t.density(*y) - f).abs() <= 1e-6);
        }
    }

    #[test]
    fn quantile_round_trip(mix in mixture_strategy(), q in 0.001..0.999f64, atom in 0.0..0.5f64) {
        let with_atom = if atom > 0.05 {
            MixtureDist::with_zero_atom(mix.components().to_vec(), mix.weights().to_vec(), atom, Support::Identity).unwrap()
        } else {
            mix
        };
        let y = with_atom.quantile(q).unwrap();
        let c = with_atom.cdf(y);
        let jump = if y == 0.0 { with_atom.zero_atom() } else { 0.0 };
        prop_assert!(c >= q - 1e-10 && c <= q + jump + 1e-10, "q {} y {} cdf {}", q, y, c);
    }
}
