use g2pp_core::calibration::{calibrate_q, SimplexConfig};
use g2pp_core::pricing::{price_swaption_g2, quote_spec};
use g2pp_core::{objective, DiscountCurve, G2Params, QuoteKind, SwaptionQuote};

const GRID: [f64; 6] = [5.0, 7.0, 10.0, 12.0, 15.0, 20.0];

fn reference_params() -> G2Params {
    G2Params::new(0.2997, 0.0407, 0.0114, 0.0114, -0.9998).unwrap()
}

fn quotes_from(curve: &DiscountCurve, p: &G2Params) -> Vec<SwaptionQuote> {
    let mut out = Vec::new();
    for &e in &GRID {
        for &t in &GRID {
            let q = SwaptionQuote::new(e, t, 0.0, QuoteKind::Price).unwrap();
            let price = price_swaption_g2(curve, p, &quote_spec(curve, &q, 1).unwrap()).unwrap();
            out.push(SwaptionQuote::new(e, t, price, QuoteKind::Price).unwrap());
        }
    }
    out
}

#[test]
fn objective_grows_with_sigma_perturbation() {
    let curve = DiscountCurve::flat(0.01, 45.0).unwrap();
    let p = reference_params();
    let quotes = quotes_from(&curve, &p);
    assert!(objective(&curve, &quotes, &p).unwrap() < 1e-12);
    let mut prev = f64::INFINITY;
    for bump in [0.1, 0.05, 0.02, 0.01] {
        let q = G2Params { sigma: p.sigma * (1.0 + bump), ..p };
        let f = objective(&curve, &quotes, &q).unwrap();
        assert!(f > 0.0 && f < prev, "bump {bump}: {f}");
        prev = f;
    }
}

#[test]
fn round_trip_from_perturbed_start() {
    let curve = DiscountCurve::flat(0.01, 45.0).unwrap();
    let truth = reference_params();
    let quotes = quotes_from(&curve, &truth);
    let cfg = SimplexConfig {
        start: G2Params {
            a: truth.a * 1.3,
            b: truth.b * 1.3,
            sigma: truth.sigma * 1.3,
            eta: truth.eta * 1.3,
            rho: truth.rho / 1.3,
        },
        restarts: 5,
        ..SimplexConfig::default()
    };
    let r = calibrate_q(&curve, &quotes, &cfg).unwrap();
    let got = r.params;
    eprintln!("{r:?}");
    for (g, t) in [(got.a, truth.a), (got.b, truth.b), (got.sigma, truth.sigma), (got.eta, truth.eta)] {
        assert!(((g - t) / t).abs() < 0.01, "{got:?}");
    }
    assert!((got.rho - truth.rho).abs() < 0.02);
    assert!(r.restarts_used <= 5);
}
