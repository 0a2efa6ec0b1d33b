//! Studentized range distribution by nested Gauss-Legendre quadrature.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

const NODES: usize = 20;
const INNER_PANELS: usize = 16;
const INNER_SPAN: f64 = 8.5;
const OUTER_PANELS: usize = 16;
/// Log-density drop that bounds the outer integration range.
const TAIL_LOG_DROP: f64 = 50.0;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(NODES).unwrap()))
}

fn integrate_panels(lo: f64, hi: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|i| {
            let a = lo + i as f64 * h;
            rule().integrate(a, a + h, &mut f)
        })
        .sum()
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// `P(Phi(z - w) < N < Phi(z))` in the numerically stable tail.
fn band(z: f64, w: f64) -> f64 {
    if z > w / 2.0 {
        norm_sf(z - w) - norm_sf(z)
    } else {
        norm_cdf(z) - norm_cdf(z - w)
    }
}

/// CDF of the range of `k` independent standard normals.
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let v = k as f64
        * integrate_panels(-INNER_SPAN, INNER_SPAN, INNER_PANELS, |z| {
            norm_pdf(z) * band(z, w).powi(km1)
        });
    v.clamp(0.0, 1.0)
}

/// Log density of `s = sqrt(X / df)` with `X ~ chi^2(df)`.
fn ln_scale_density(s: f64, df: f64) -> f64 {
    if s <= 0.0 {
        return f64::NEG_INFINITY;
    }
    LN_2 + 0.5 * df * df.ln() + (df - 1.0) * s.ln() - 0.5 * df * s * s - 0.5 * df * LN_2 - ln_gamma(0.5 * df)
}

fn outer_range(df: f64) -> (f64, f64) {
    let mode = if df > 1.0 { ((df - 1.0) / df).sqrt() } else { 0.0 };
    let peak = ln_scale_density(mode.max(1e-12), df);
    let step = (1.0 / (2.0 * df).sqrt()).max(1e-3);
    let mut hi = mode + step;
    while ln_scale_density(hi, df) > peak - TAIL_LOG_DROP {
        hi += step;
    }
    let mut lo = mode;
    while lo > 0.0 && ln_scale_density(lo, df) > peak - TAIL_LOG_DROP {
        lo = (lo - step).max(0.0);
    }
    (lo, hi)
}

/// CDF of the studentized range statistic with `k` groups and `df` error degrees
/// of freedom. `df = f64::INFINITY` gives the range of standard normals.
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    assert!(k >= 2, "studentized range needs at least 2 groups");
    if q <= 0.0 {
        return 0.0;
    }
    if df.is_infinite() {
        return range_cdf(q, k);
    }
    let (lo, hi) = outer_range(df);
    integrate_panels(lo, hi, OUTER_PANELS, |s| {
        ln_scale_density(s, df).exp() * range_cdf(q * s, k)
    })
    .clamp(0.0, 1.0)
}

/// Upper-tail probability `P(Q >= q)`.
pub fn tukey_p_value(q: f64, k: usize, df: f64) -> f64 {
    (1.0 - ptukey(q, k, df)).clamp(0.0, 1.0)
}
