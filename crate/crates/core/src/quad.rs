//! Adaptive Gauss–Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: returns (Kronrod estimate, |K - G| error).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` by recursive bisection until the summed
/// Kronrod–Gauss error estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut panels = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let total_err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if total_err <= abs_tol {
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("nonempty");
        let (lo, hi, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, gk15(&f, lo, mid)));
        panels.push((mid, hi, gk15(&f, mid, hi)));
    }
    panels.iter().map(|p| p.2 .0).sum()
}

/// Sum of one Kronrod panel per consecutive pair of `breaks`. Exact for
/// piecewise polynomials of moderate degree with kinks at the breaks.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, breaks: &[f64]) -> f64 {
    breaks.windows(2).map(|w| gk15(&f, w[0], w[1]).0).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(6) - 3.0 * x * x, 0.0, 2.0, 1e-14);
        assert!((v - (128.0 / 7.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let v = integrate(|x| (40.0 * x).sin() * (-x).exp(), 0.0, 5.0, 1e-13);
        // closed form of the Laplace-type integral
        let w: f64 = 40.0;
        let exact = (w - (-5.0f64).exp() * ((5.0 * w).sin() + w * (5.0 * w).cos())) / (1.0 + w * w);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn piecewise_handles_kinks() {
        let breaks: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let v = integrate_piecewise(|x| (x - 0.35).abs(), &[0.0, 0.35, 1.0]);
        assert!((v - (0.35f64.powi(2) / 2.0 + 0.65f64.powi(2) / 2.0)).abs() < 1e-15);
        let v = integrate_piecewise(|x| x * x, &breaks);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}
