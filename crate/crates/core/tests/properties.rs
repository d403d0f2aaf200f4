use g2pp_core::measure::{calibrate_p, expected_rate_p, PremiumKind, PremiumSpec};
use g2pp_core::model::{b_loading, bond_price, integrated_variance};
use g2pp_core::pricing::{
    annuity, atm_forward_swap_rate, bachelier_price, price_swaption_g2, ExerciseType, SwaptionSpec,
};
use g2pp_core::{DiscountCurve, FactorState, G2Params, RateForecast};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = G2Params> {
    (0.01..1.5f64, 0.01..1.5f64, 0.0..0.03f64, 0.0..0.03f64, -1.0..=1.0f64)
        .prop_map(|(a, b, s, e, r)| G2Params::new(a, b, s, e, r).unwrap())
}

/// Increasing maturities with zero rates in [−1%, 5%].
fn curve() -> impl Strategy<Value = DiscountCurve> {
    prop::collection::vec((0.1..5.0f64, -0.01..0.05f64), 1..12).prop_map(|steps| {
        let mut t = 0.0;
        let pillars: Vec<(f64, f64)> = steps
            .into_iter()
            .map(|(dt, r)| {
                t += dt;
                (t, r)
            })
            .collect();
        DiscountCurve::from_zero_rates(&pillars).unwrap()
    })
}

fn premium_levels() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64)
        .prop_filter("linear slope needs d away from zero", |(dx, dy, _, _)| {
            dx.abs() > 1e-4 && dy.abs() > 1e-4
        })
}

fn rp_by_trapezoid(spec: &PremiumSpec, p: &G2Params, t: f64) -> (f64, f64) {
    let n = 100_000;
    let h = t / n as f64;
    let mut acc = (0.0, 0.0);
    for k in 0..=n {
        let u = k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        let (dx, dy) = spec.d_value(u);
        acc.0 += w * (-p.a * (t - u)).exp() * p.a * dx;
        acc.1 += w * (-p.b * (t - u)).exp() * p.b * dy;
    }
    (acc.0 * h, acc.1 * h)
}

proptest! {
    #[test]
    fn initial_fit_at_every_pillar(c in curve(), p in params()) {
        for (t, df) in c.pillars() {
            let model = bond_price(&c, &p, &FactorState::origin(), t).unwrap();
            prop_assert!((model - df).abs() < 1e-12);
            let spot = c.spot_rate(t).unwrap();
            prop_assert!(((-spot * t).exp() - df).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_is_time_homogeneous_and_monotone(p in params(), t in 0.0..30.0f64, tau in 0.05..30.0f64, extra in 0.0..5.0f64) {
        let v = integrated_variance(&p, t, t + tau);
        let v0 = integrated_variance(&p, 0.0, tau);
        // (t + τ) − t differs from τ by rounding
        prop_assert!((v - v0).abs() <= 1e-10 * v0);
        prop_assert!(integrated_variance(&p, 0.0, tau + extra) >= v0);
        prop_assert!(v0 >= 0.0);
    }

    #[test]
    fn loading_identity(z in 1e-4..5.0f64, t in 0.0..20.0f64, tau in 0.0..40.0f64) {
        let big_t = t + tau;
        let lhs = z * b_loading(z, t, big_t) + (-z * (big_t - t)).exp();
        prop_assert!((lhs - 1.0).abs() < 1e-12);
        prop_assert!(b_loading(z, t, big_t) <= 1.0 / z);
    }

    #[test]
    fn bachelier_parity(f in -0.02..0.05f64, k in -0.02..0.05f64, vol in 0.0..0.02f64, t in 0.1..20.0f64, ann in 0.1..20.0f64) {
        let pay = bachelier_price(f, k, vol, t, ann, ExerciseType::Payer);
        let rec = bachelier_price(f, k, vol, t, ann, ExerciseType::Receiver);
        prop_assert!((pay - rec - ann * (f - k)).abs() < 1e-10);
        prop_assert!(pay >= 0.0 && rec >= 0.0);
    }

    #[test]
    fn linear_boundary_identity((dx, dy, lx, ly) in premium_levels(), tau in 0.25..5.0f64) {
        let s = PremiumSpec::linear(dx, dy, lx, ly, tau).unwrap();
        let (mx, my) = s.slopes().unwrap();
        prop_assert!(((1.0 - mx * tau) * dx - lx).abs() <= 4.0 * f64::EPSILON * dx.abs().max(lx.abs()));
        prop_assert!(((1.0 - my * tau) * dy - ly).abs() <= 4.0 * f64::EPSILON * dy.abs().max(ly.abs()));
    }

    #[test]
    fn long_horizon_limits(p in params(), (dx, dy, lx, ly) in premium_levels(), tau in 0.25..5.0f64) {
        let far = tau + 50.0 / p.a.min(p.b);
        for s in [PremiumSpec::step(dx, dy, lx, ly, tau).unwrap(), PremiumSpec::linear(dx, dy, lx, ly, tau).unwrap()] {
            prop_assert!((s.rp_x(&p, far) - lx).abs() < 1e-10);
            prop_assert!((s.rp_y(&p, far) - ly).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_premium_is_smooth_at_tau(p in params(), (dx, dy, lx, ly) in premium_levels(), tau in 0.25..5.0f64) {
        let s = PremiumSpec::linear(dx, dy, lx, ly, tau).unwrap();
        let h = 1e-6;
        let left = (s.rp_x(&p, tau) - s.rp_x(&p, tau - h)) / h;
        let right = (s.rp_x(&p, tau + h) - s.rp_x(&p, tau)) / h;
        prop_assert!((left - right).abs() <= 1e-6 * left.abs().max(1.0));
        let left = (s.rp_y(&p, tau) - s.rp_y(&p, tau - h)) / h;
        let right = (s.rp_y(&p, tau + h) - s.rp_y(&p, tau)) / h;
        prop_assert!((left - right).abs() <= 1e-6 * left.abs().max(1.0));
    }

    #[test]
    fn step_premium_has_a_kink(p in params(), (dx, dy, lx, ly) in premium_levels(), tau in 0.25..5.0f64) {
        prop_assume!((dx - lx).abs() > 1e-3);
        let s = PremiumSpec::step(dx, dy, lx, ly, tau).unwrap();
        let h = 1e-7;
        let left = (s.rp_x(&p, tau) - s.rp_x(&p, tau - h)) / h;
        let right = (s.rp_x(&p, tau + h) - s.rp_x(&p, tau)) / h;
        // the jump in slope is a (l − d)
        prop_assert!((right - left - p.a * (lx - dx)).abs() < 1e-5 * (p.a * (lx - dx)).abs().max(1e-3));
    }

    #[test]
    fn forecasts_are_reproduced(
        p in params(),
        (dx, dy, lx, ly) in premium_levels(),
        tau in 0.5..3.0f64,
        short_gap in 0.0..0.5f64,
        long_h in 10.0..40.0f64,
        kind_ix in 0usize..3,
    ) {
        prop_assume!(p.sigma > 1e-4 || p.eta > 1e-4);
        let c = DiscountCurve::flat(0.015, 60.0).unwrap();
        let kind = PremiumKind::ALL[kind_ix];
        let truth = PremiumSpec::from_levels(kind, dx, dy, lx, ly, tau).unwrap();
        let pts = [(tau - short_gap, tau - short_gap + 0.25), (tau, tau + 10.0), (long_h, long_h + 0.25), (long_h, long_h + 10.0)];
        let f: Vec<RateForecast> = pts
            .iter()
            .map(|&(t, m)| RateForecast::new(t, m, expected_rate_p(&c, &p, &truth, t, m).unwrap()).unwrap())
            .collect();
        let long: &[RateForecast] = if kind == PremiumKind::Constant { &[] } else { &f[2..] };
        let res = calibrate_p(&c, &p, kind, &f[..2], long, tau);
        // nearly equal mean reversion makes the two factors indistinguishable
        prop_assume!(res.is_ok());
        let got = res.unwrap();
        let used = if kind == PremiumKind::Constant { &f[..2] } else { &f[..] };
        for fc in used {
            let r = expected_rate_p(&c, &p, &got, fc.horizon_years, fc.maturity_years).unwrap();
            prop_assert!((r - fc.rate).abs() < 1e-10, "{kind}: {r} vs {}", fc.rate);
        }
    }

    #[test]
    fn variants_intersect_at_tau(p in params(), (dx, dy, lx, ly) in premium_levels(), tau in 0.5..3.0f64) {
        prop_assume!((p.a - p.b).abs() > 0.05);
        let c = DiscountCurve::flat(0.01, 60.0).unwrap();
        let truth = PremiumSpec::step(dx, dy, lx, ly, tau).unwrap();
        let pts = [(tau, tau + 0.25), (tau, tau + 10.0), (40.0, 40.25), (40.0, 50.0)];
        let f: Vec<RateForecast> = pts
            .iter()
            .map(|&(t, m)| RateForecast::new(t, m, expected_rate_p(&c, &p, &truth, t, m).unwrap()).unwrap())
            .collect();
        let cst = calibrate_p(&c, &p, PremiumKind::Constant, &f[..2], &[], tau).unwrap();
        let stp = calibrate_p(&c, &p, PremiumKind::Step, &f[..2], &f[2..], tau).unwrap();
        let lin = calibrate_p(&c, &p, PremiumKind::Linear, &f[..2], &f[2..], tau);
        prop_assert!((cst.d_x() - stp.d_x()).abs() < 1e-9 && (cst.d_y() - stp.d_y()).abs() < 1e-9);
        let mut specs = vec![cst, stp];
        if let Ok(l) = lin {
            specs.push(l);
        }
        for s in &specs[1..] {
            prop_assert!((s.rp_x(&p, tau) - cst.rp_x(&p, tau)).abs() < 1e-9);
            prop_assert!((s.rp_y(&p, tau) - cst.rp_y(&p, tau)).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn rp_closed_forms_match_trapezoid(p in params(), (dx, dy, lx, ly) in premium_levels(), tau in 0.25..5.0f64, t in 0.0..30.0f64, kind_ix in 0usize..3) {
        let s = PremiumSpec::from_levels(PremiumKind::ALL[kind_ix], dx, dy, lx, ly, tau).unwrap();
        prop_assume!(t > 0.0);
        let (qx, qy) = rp_by_trapezoid(&s, &p, t);
        // the step jump sits inside one cell: O(h) error
        let tol = if PremiumKind::ALL[kind_ix] == PremiumKind::Step { 1e-5 * t.max(1.0) } else { 1e-7 };
        prop_assert!((s.rp_x(&p, t) - qx).abs() < tol, "{} vs {qx}", s.rp_x(&p, t));
        prop_assert!((s.rp_y(&p, t) - qy).abs() < tol);
    }

    #[test]
    fn g2_parity(p in params(), expiry in 1.0..10.0f64, tenor in 1usize..15, k in -0.01..0.03f64) {
        prop_assume!(p.sigma > 1e-4 && p.eta > 1e-4);
        let c = DiscountCurve::flat(0.01, 40.0).unwrap();
        let pay = SwaptionSpec::from_grid(expiry, tenor as f64, 1, k, ExerciseType::Payer).unwrap();
        let rec = pay.clone().with_exercise(ExerciseType::Receiver);
        let f = atm_forward_swap_rate(&c, &pay).unwrap();
        let ann = annuity(&c, &pay).unwrap();
        let vp = price_swaption_g2(&c, &p, &pay).unwrap();
        let vr = price_swaption_g2(&c, &p, &rec).unwrap();
        prop_assert!((vp - vr - ann * (f - k)).abs() < 1e-10);
        prop_assert!(vp >= 0.0 && vr >= 0.0);
    }
}
