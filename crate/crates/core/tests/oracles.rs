use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use randlindblad::oracles::{
    chi2_entry_law, gue_relative_variance_closed_form, integrate, mp_convolution_density, ratio_reference,
    semicircle_self_convolution, Density, MarchenkoPasturLaw, RatioKind, SemicircleLaw,
};
use randlindblad::stats::{ks_pvalue, ks_statistic};

#[test]
fn quadrature_handles_smooth_and_endpoint_singular_integrands() {
    let a = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
    assert!((a - 2.0).abs() < 1e-12);
    let b = integrate(|x| 1.0 / (1.0 - x * x).sqrt(), -1.0, 1.0, 1e-8).unwrap();
    assert!((b - std::f64::consts::PI).abs() < 1e-5);
}

#[test]
fn semicircle_convolution_is_a_symmetric_density_with_twice_the_variance() {
    let e = 3.0;
    let conv = semicircle_self_convolution(e).unwrap();
    let (lo, hi) = conv.support();
    assert!((lo + 2.0 * e).abs() < 1e-12 && (hi - 2.0 * e).abs() < 1e-12);
    for x in [0.1, 0.7, 2.5, 5.0] {
        let (a, b) = (conv.density(x).unwrap(), conv.density(-x).unwrap());
        assert!((a - b).abs() < 1e-10);
    }
    let mass = integrate(|x| conv.density(x).unwrap(), lo, hi, 1e-10).unwrap();
    assert!((mass - 1.0).abs() < 1e-7, "{mass}");
    let var = integrate(|x| x * x * conv.density(x).unwrap(), lo, hi, 1e-10).unwrap();
    let single = SemicircleLaw::new(e).unwrap().variance();
    assert!((var - 2.0 * single).abs() < 1e-6);
    assert!((single - e * e / 4.0).abs() < 1e-14);
    assert!((conv.cdf(0.0).unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn convolution_of_semicircle_samples_matches_oracle() {
    // Sum of two independent semicircle draws by rejection sampling.
    let e = 2.0;
    let law = SemicircleLaw::new(e).unwrap();
    let peak = law.pdf(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draw = || loop {
        let x = e * (2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0);
        if rand::Rng::random::<f64>(&mut rng) * peak <= law.pdf(x) {
            return x;
        }
    };
    let sums: Vec<f64> = (0..20_000).map(|_| draw() + draw()).collect();
    let conv = semicircle_self_convolution(e).unwrap();
    let d = ks_statistic(&sums, |x| conv.cdf(x).unwrap());
    assert!(ks_pvalue(d, sums.len()) > 0.001, "KS {d}");
}

#[test]
fn marchenko_pastur_normalization_and_mean() {
    for r in [1.0, 2.0, 5.0] {
        let mp = MarchenkoPasturLaw::new(r).unwrap();
        assert!((mp.moment(0).unwrap() - 1.0).abs() < 1e-9);
        assert!((mp.moment(1).unwrap() - r).abs() < 1e-9);
        assert!((mp.cdf(mp.endpoints().1).unwrap() - 1.0).abs() < 1e-8);
    }
    let conv = mp_convolution_density();
    let (lo, hi) = conv.support();
    let mass = integrate(|x| conv.density(x).unwrap(), lo, hi, 1e-9).unwrap();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

#[test]
fn chi2_entry_law_moments() {
    for (k, g) in [(1.0, 0.3), (4.0, 1.0), (20.0, 0.1)] {
        let law = chi2_entry_law(k, g).unwrap();
        assert!((law.mean() - k * g * g).abs() < 1e-14);
        assert!((law.variance() - 2.0 * k * g.powi(4)).abs() < 1e-14);
        let mass = integrate(|x| law.pdf(x), 0.0, 40.0 * k * g * g, 1e-10).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }
}

#[test]
fn ratio_laws_have_unit_median_and_reciprocal_symmetry() {
    for kind in [RatioKind::Poisson, RatioKind::GueSurmise, RatioKind::GoeSurmise] {
        let law = ratio_reference(kind).unwrap();
        assert!((law.cdf(1.0).unwrap() - 0.5).abs() < 1e-10);
        assert!((law.quantile(0.5).unwrap() - 1.0).abs() < 1e-6);
        for x in [0.2, 0.9, 3.0] {
            assert!((law.cdf(x).unwrap() + law.cdf(1.0 / x).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn poisson_ratio_law_matches_exponential_spacings() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rs: Vec<f64> = (0..20_000)
        .map(|_| {
            let a: f64 = Exp1.sample(&mut rng);
            let b: f64 = Exp1.sample(&mut rng);
            b / a
        })
        .collect();
    let law = ratio_reference(RatioKind::Poisson).unwrap();
    let d = ks_statistic(&rs, |x| law.cdf(x).unwrap());
    assert!(ks_pvalue(d, rs.len()) > 0.001, "KS {d}");
}

#[test]
fn unitary_surmise_is_exact_for_three_by_three_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let rs: Vec<f64> = (0..20_000)
        .map(|_| {
            let mut m = Array2::<C64>::zeros((3, 3));
            for i in 0..3 {
                m[[i, i]] = C64::new(normal(), 0.0);
                for j in i + 1..3 {
                    let z = C64::new(normal(), normal());
                    m[[i, j]] = z;
                    m[[j, i]] = z.conj();
                }
            }
            let e = m.eigvalsh(UPLO::Upper).unwrap();
            (e[2] - e[1]) / (e[1] - e[0])
        })
        .collect();
    let law = ratio_reference(RatioKind::GueSurmise).unwrap();
    let d = ks_statistic(&rs, |x| law.cdf(x).unwrap());
    assert!(ks_pvalue(d, rs.len()) > 0.001, "KS {d}");
}

#[test]
fn unitary_relative_variance_agrees_with_closed_form() {
    let law = ratio_reference(RatioKind::GueSurmise).unwrap();
    let numeric = law.relative_variance().unwrap();
    let closed = gue_relative_variance_closed_form();
    assert!((numeric - closed).abs() < 1e-8, "{numeric} vs {closed}");
    assert!((closed - 1.160).abs() < 5e-4);
    let goe = ratio_reference(RatioKind::GoeSurmise).unwrap();
    assert!(goe.relative_variance().unwrap().is_infinite());
}
