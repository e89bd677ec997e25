//! Pointwise scalar model functions: the double-well potential and its
//! convex-concave splitting, growth functions, mobilities, the initial
//! tumor profile, and the Yosida regularization of the monotone part of
//! the potential derivative.

/// Double-well potential choice.
///
/// `c_psi` is the curvature floor constant: `psi''(x) >= -c_psi` for all x,
/// so that `gamma(x) = psi'(x) + c_psi * x` is nondecreasing. For the
/// quartic well the sharp value is 1/4 (the minimum of `3x^2 - 3x + 1/2`
/// is -1/4 at x = 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    QuarticDoubleWell { c_psi: f64 },
}

impl PotentialSpec {
    pub fn quartic() -> Self {
        PotentialSpec::QuarticDoubleWell { c_psi: 0.25 }
    }

    pub fn c_psi(&self) -> f64 {
        match *self {
            PotentialSpec::QuarticDoubleWell { c_psi } => c_psi,
        }
    }
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::quartic()
    }
}

/// Tumor growth function choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthSpec {
    Logistic,
    Gompertz,
}

/// Mobility function choice. Evaluations always lie in `[floor, floor + 1/16]`
/// for the quartic interface mobility and are constant otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MobilitySpec {
    Constant(f64),
    QuarticInterface { floor: f64 },
}

/// Quartic double well `1/4 x^2 (1-x)^2`.
pub fn psi(x: f64, _spec: PotentialSpec) -> f64 {
    let y = x * (1.0 - x);
    0.25 * y * y
}

/// Derivative of the double well: `x^3 - 3/2 x^2 + 1/2 x`.
pub fn psi_prime(x: f64, _spec: PotentialSpec) -> f64 {
    x * x * x - 1.5 * x * x + 0.5 * x
}

/// Convex-concave splitting of `psi_prime`.
///
/// Returns the expansive derivative `x^3 - 3/2 x^2 - 1/4 x` (evaluated
/// explicitly at the old time level) and the coefficient 3/4 of the linear
/// contractive part treated implicitly. The identity
/// `expansive + 0.75 * x == psi_prime(x)` holds exactly.
pub fn psi_split(x: f64) -> (f64, f64) {
    (x * x * x - 1.5 * x * x - 0.25 * x, 0.75)
}

/// Growth function evaluated on `clamp(x, 0, 1)` so the image stays in [0,1]
/// and `f(0) = f(1) = 0`.
pub fn growth_f(x: f64, spec: GrowthSpec) -> f64 {
    let y = x.clamp(0.0, 1.0);
    match spec {
        GrowthSpec::Logistic => y * (1.0 - y),
        GrowthSpec::Gompertz => {
            if y == 0.0 {
                0.0
            } else {
                y * (1.0 / y).ln()
            }
        }
    }
}

/// Mobility evaluation. The quartic interface term carries the indicator of
/// [0,1] so the upper bound `floor + 1/16` holds for overshooting arguments.
pub fn mobility(x: f64, spec: MobilitySpec) -> f64 {
    match spec {
        MobilitySpec::Constant(v) => v,
        MobilitySpec::QuarticInterface { floor } => {
            if (0.0..=1.0).contains(&x) {
                let y = x * (1.0 - x);
                floor + y * y
            } else {
                floor
            }
        }
    }
}

impl MobilitySpec {
    /// Lower and upper bounds of the evaluation range.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            MobilitySpec::Constant(v) => (v, v),
            MobilitySpec::QuarticInterface { floor } => (floor, floor + 1.0 / 16.0),
        }
    }
}

/// Smooth bump initial tumor profile centered at (1/2, 1/2) with support
/// radius 1/4, extended by zero outside the support.
pub fn initial_phi0(x: f64, y: f64) -> f64 {
    let dx = x - 0.5;
    let dy = y - 0.5;
    let r2 = 16.0 * (dx * dx + dy * dy);
    if r2 < 1.0 {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Monotone part of the potential derivative: `gamma(y) = psi'(y) + c_psi * y`.
pub fn gamma(y: f64, spec: PotentialSpec) -> f64 {
    psi_prime(y, spec) + spec.c_psi() * y
}

/// Resolvent `(I + lambda*gamma)^{-1}(r)`: the unique root of
/// `y + lambda*gamma(y) = r`.
///
/// Safeguarded Newton with a bisection fallback on the bracket
/// `[r - lambda*|gamma(r)| - 1, r + lambda*|gamma(r)| + 1]`; the map is
/// strictly increasing so the root is unique and the bracket always
/// contains it.
pub fn yosida_resolvent(r: f64, lam: f64, spec: PotentialSpec) -> f64 {
    assert!(lam > 0.0, "yosida_resolvent requires lambda > 0");
    let g = |y: f64| y + lam * gamma(y, spec) - r;
    let gp = |y: f64| 1.0 + lam * (3.0 * y * y - 3.0 * y + 0.5 + spec.c_psi());

    let pad = lam * gamma(r, spec).abs() + 1.0;
    let mut lo = r - pad;
    let mut hi = r + pad;
    let tol = 1e-13 * r.abs().max(1.0);

    let mut y = r;
    for _ in 0..200 {
        let fy = g(y);
        if fy.abs() <= tol {
            return y;
        }
        if fy > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let step = fy / gp(y);
        let mut next = y - step;
        if !(lo < next && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == y {
            return y;
        }
        y = next;
    }
    // Monotone map: reaching here means the bracket collapsed to rounding.
    debug_assert!(g(y).abs() <= 1e-10 * r.abs().max(1.0), "resolvent stalled");
    y
}

/// Yosida approximation `gamma_lambda(r) = (r - (I + lambda*gamma)^{-1}(r)) / lambda`.
pub fn yosida_gamma_lambda(r: f64, lam: f64, spec: PotentialSpec) -> f64 {
    (r - yosida_resolvent(r, lam, spec)) / lam
}

/// Regularized potential
/// `Psi_lambda(r) = Psi(0) - c_psi/2 r^2 + \int_0^r gamma_lambda(s) ds`,
/// with the integral evaluated by composite 4-point Gauss quadrature on 64
/// panels.
pub fn yosida_psi_lambda(r: f64, lam: f64, spec: PotentialSpec) -> f64 {
    const PANELS: usize = 64;
    // 4-point Gauss-Legendre nodes/weights on [-1, 1].
    const GX: [f64; 4] = [
        -0.8611363115940526,
        -0.33998104358485626,
        0.33998104358485626,
        0.8611363115940526,
    ];
    const GW: [f64; 4] = [
        0.34785484513745385,
        0.6521451548625461,
        0.6521451548625461,
        0.34785484513745385,
    ];
    let h = r / PANELS as f64;
    let mut integral = 0.0;
    for p in 0..PANELS {
        let a = p as f64 * h;
        let mid = a + 0.5 * h;
        for k in 0..4 {
            let s = mid + 0.5 * h * GX[k];
            integral += 0.5 * h * GW[k] * yosida_gamma_lambda(s, lam, spec);
        }
    }
    psi(0.0, spec) - 0.5 * spec.c_psi() * r * r + integral
}

/// Derivative of the regularized potential: `gamma_lambda(r) - c_psi * r`.
pub fn yosida_psi_prime_lambda(r: f64, lam: f64, spec: PotentialSpec) -> f64 {
    yosida_gamma_lambda(r, lam, spec) - spec.c_psi() * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SPEC: PotentialSpec = PotentialSpec::QuarticDoubleWell { c_psi: 0.25 };

    #[test]
    fn psi_well_minima() {
        assert_eq!(psi(0.0, SPEC), 0.0);
        assert_eq!(psi(1.0, SPEC), 0.0);
        assert!((psi(0.5, SPEC) - 1.0 / 64.0).abs() < 1e-16);
    }

    #[test]
    fn psi_prime_zeros() {
        assert_eq!(psi_prime(0.0, SPEC), 0.0);
        assert_eq!(psi_prime(1.0, SPEC), 0.0);
        assert_eq!(psi_prime(0.5, SPEC), 0.0);
    }

    #[test]
    fn split_values() {
        assert_eq!(psi_split(0.0), (0.0, 0.75));
        let (e, c) = psi_split(1.0);
        assert_eq!(e, -0.75);
        assert_eq!(e + c * 1.0, psi_prime(1.0, SPEC));
    }

    #[test]
    fn growth_values() {
        assert_eq!(growth_f(0.5, GrowthSpec::Logistic), 0.25);
        let y = (-1.0f64).exp();
        assert!((growth_f(y, GrowthSpec::Gompertz) - y).abs() < 1e-15);
        assert_eq!(growth_f(-0.3, GrowthSpec::Logistic), 0.0);
        assert_eq!(growth_f(0.0, GrowthSpec::Gompertz), 0.0);
        assert_eq!(growth_f(1.0, GrowthSpec::Gompertz), 0.0);
    }

    #[test]
    fn mobility_values() {
        let m = MobilitySpec::QuarticInterface { floor: 1e-16 };
        assert!((mobility(0.5, m) - (0.0625 + 1e-16)).abs() < 1e-18);
        assert_eq!(mobility(123.0, MobilitySpec::Constant(10.0)), 10.0);
        assert_eq!(mobility(2.0, m), 1e-16);
    }

    #[test]
    fn bump_profile() {
        assert_eq!(initial_phi0(0.5, 0.5), 1.0);
        assert_eq!(initial_phi0(0.9, 0.9), 0.0);
        // Continuous across the support boundary.
        assert!(initial_phi0(0.7499, 0.5) < 1e-150);
    }

    #[test]
    fn resolvent_fixed_points() {
        for lam in [1.0, 0.1, 1e-3] {
            assert_eq!(yosida_resolvent(0.0, lam, SPEC), 0.0);
        }
        // lambda -> 0 recovers the identity.
        assert!((yosida_resolvent(0.7, 1e-8, SPEC) - 0.7).abs() < 1e-7);
    }

    #[test]
    fn gamma_lambda_pointwise_convergence() {
        let r = 0.7;
        let exact = gamma(r, SPEC);
        let approx = yosida_gamma_lambda(r, 1e-4, SPEC);
        assert!((approx - exact).abs() <= 1e-3 * exact.abs());
    }

    #[test]
    fn psi_lambda_matches_psi_for_small_lambda() {
        // gamma_lambda -> gamma, so Psi_lambda -> Psi pointwise.
        for r in [0.3, 0.8, -0.5, 1.4] {
            let approx = yosida_psi_lambda(r, 1e-6, SPEC);
            assert!(
                (approx - psi(r, SPEC)).abs() < 1e-4,
                "r={r}: {approx} vs {}",
                psi(r, SPEC)
            );
        }
        assert_eq!(yosida_gamma_lambda(0.0, 0.1, SPEC), 0.0);
    }

    proptest! {
        #[test]
        fn split_identity(x in -1.0f64..2.0) {
            let (e, c) = psi_split(x);
            prop_assert!((e + c * x - psi_prime(x, SPEC)).abs() <= 1e-15);
        }

        #[test]
        fn growth_image(x in -5.0f64..5.0) {
            for spec in [GrowthSpec::Logistic, GrowthSpec::Gompertz] {
                let v = growth_f(x, spec);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn mobility_bounds(x in -5.0f64..5.0) {
            for spec in [
                MobilitySpec::Constant(10.0),
                MobilitySpec::QuarticInterface { floor: 1e-16 },
            ] {
                let (m0, m_inf) = spec.bounds();
                let v = mobility(x, spec);
                prop_assert!(v >= m0 && v <= m_inf + 1e-18);
            }
        }

        #[test]
        fn psi_second_derivative_floor(x in -10.0f64..10.0) {
            // psi''(x) = 3x^2 - 3x + 1/2 >= -1/4
            prop_assert!(3.0 * x * x - 3.0 * x + 0.5 >= -0.25);
        }

        #[test]
        fn resolvent_plugback(r in -3.0f64..3.0, lam in 1e-6f64..10.0) {
            let y = yosida_resolvent(r, lam, SPEC);
            let res = (y + lam * gamma(y, SPEC) - r).abs();
            prop_assert!(res <= 1e-12 * r.abs().max(1.0));
        }

        #[test]
        fn gamma_lambda_monotone_lipschitz(
            a in -2.0f64..3.0, b in -2.0f64..3.0, lam in 1e-3f64..1.0
        ) {
            let ga = yosida_gamma_lambda(a, lam, SPEC);
            let gb = yosida_gamma_lambda(b, lam, SPEC);
            prop_assert!((ga - gb) * (a - b) >= -1e-12);
            prop_assert!((ga - gb).abs() <= (a - b).abs() / lam * (1.0 + 1e-10) + 1e-12);
        }

        #[test]
        fn gamma_lambda_contracts(r in -2.0f64..3.0, lam in 1e-3f64..1.0) {
            let gl = yosida_gamma_lambda(r, lam, SPEC);
            prop_assert!(gl.abs() <= gamma(r, SPEC).abs() + 1e-12);
        }
    }
}
