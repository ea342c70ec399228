//! Sinusoidal dither signals with integer periods.
//!
//! Components come in sine/cosine pairs: component `2j` (0-based) runs at
//! period `odd_periods[j]` with phase `phi0`, component `2j + 1` at the same
//! period with phase `phi0 + π/2`. All frequency conditions are checked on
//! the integer periods, so no floating-point frequency comparison happens.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DVector;
use num_integer::Integer;

use crate::error::{Error, Result};

pub const MIN_PERIOD: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct DitherConfig {
    dim: usize,
    odd_periods: Vec<u64>,
    periods: Vec<u64>,
    phases: Vec<f64>,
    delta: f64,
    phi0: f64,
    agent_period: u64,
}

/// Builds and validates a paired dither configuration.
pub fn design_dither(
    dim: usize,
    odd_periods: &[u64],
    phi0: f64,
    delta: f64,
) -> Result<DitherConfig> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let expected = dim.div_ceil(2);
    if odd_periods.len() != expected {
        return Err(Error::PeriodCount {
            expected,
            got: odd_periods.len(),
        });
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dither amplitude must be positive, got {delta}"
        )));
    }
    if !phi0.is_finite() {
        return Err(Error::InvalidParameter("phase must be finite".into()));
    }
    check_periods(odd_periods)?;

    let periods: Vec<u64> = (0..dim).map(|p| odd_periods[p / 2]).collect();
    let phases: Vec<f64> = (0..dim)
        .map(|p| if p % 2 == 0 { phi0 } else { phi0 + FRAC_PI_2 })
        .collect();
    let agent_period = checked_lcm_all(odd_periods.iter().copied())?;
    Ok(DitherConfig {
        dim,
        odd_periods: odd_periods.to_vec(),
        periods,
        phases,
        delta,
        phi0,
        agent_period,
    })
}

/// Frequency conditions on the odd-component periods: minimum length,
/// pairwise distinct, no `1/τ_p + 1/τ_h = 1/τ_l`, and no triple whose signed
/// frequency sum is a nonzero multiple of 2π (which happens for `τ = 3`,
/// where `3ω ≡ 0`).
pub fn check_periods(odd_periods: &[u64]) -> Result<()> {
    if let Some(&short) = odd_periods.iter().find(|&&t| t < MIN_PERIOD) {
        return Err(Error::PeriodTooShort(short));
    }
    for (i, &a) in odd_periods.iter().enumerate() {
        if odd_periods[..i].contains(&a) {
            return Err(Error::DuplicateFrequency(a));
        }
    }
    let k = odd_periods.len();
    for i in 0..k {
        for j in i..k {
            let (p, h) = (odd_periods[i] as u128, odd_periods[j] as u128);
            for &l in odd_periods {
                // 1/p + 1/h = 1/l  <=>  l (p + h) = p h
                if l as u128 * (p + h) == p * h {
                    return Err(Error::SumCollision {
                        p: p as u64,
                        h: h as u64,
                        l,
                    });
                }
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            for m in j..k {
                let trio = [odd_periods[i], odd_periods[j], odd_periods[m]];
                if triple_aliases(trio) {
                    return Err(Error::AliasCollision(trio.to_vec()));
                }
            }
        }
    }
    Ok(())
}

// ±1/a ± 1/b ± 1/c equal to a nonzero integer
fn triple_aliases([a, b, c]: [u64; 3]) -> bool {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    let den = a * b * c;
    for sa in [-1i128, 1] {
        for sb in [-1i128, 1] {
            for sc in [-1i128, 1] {
                let num = sa * b * c + sb * a * c + sc * a * b;
                if num != 0 && num % den == 0 {
                    return true;
                }
            }
        }
    }
    false
}

impl DitherConfig {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn odd_periods(&self) -> &[u64] {
        &self.odd_periods
    }

    /// Per-component periods.
    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.periods.iter().map(|&t| 2.0 * PI / t as f64).collect()
    }

    /// Period of the whole signal (lcm of component periods).
    pub fn agent_period(&self) -> u64 {
        self.agent_period
    }

    /// Same frequencies and phases, different amplitude.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dither amplitude must be positive, got {delta}"
            )));
        }
        Ok(Self {
            delta,
            ..self.clone()
        })
    }

    /// Unit-amplitude signal at round `t`.
    pub fn sample(&self, t: u64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.sample_into(t, out.as_mut_slice());
        out
    }

    pub fn sample_into(&self, t: u64, out: &mut [f64]) {
        for ((o, &tau), &phase) in out.iter_mut().zip(&self.periods).zip(&self.phases) {
            // reduce t modulo the component period before scaling
            let m = (t % tau) as f64;
            *o = (2.0 * PI * m / tau as f64 + phase).sin();
        }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses `dim=2, delta=0.1, phi0=0, periods=[4]`.
    pub fn from_text(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, periods) = text
            .split_once("periods=")
            .ok_or_else(|| Error::Parse("missing periods=[...]".into()))?;
        let periods = periods
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::Parse("periods must be bracketed".into()))?;
        let periods = periods
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad period {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (mut dim, mut delta, mut phi0) = (None, None, None);
        for part in head.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            let bad = || Error::Parse(format!("bad value {v:?} for {k}"));
            match k.trim() {
                "dim" => dim = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                "delta" => delta = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
                "phi0" => phi0 = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing {k}"));
        design_dither(
            dim.ok_or_else(|| missing("dim"))?,
            &periods,
            phi0.ok_or_else(|| missing("phi0"))?,
            delta.ok_or_else(|| missing("delta"))?,
        )
    }
}

impl fmt::Display for DitherConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let periods: Vec<String> = self.odd_periods.iter().map(u64::to_string).collect();
        write!(
            f,
            "dim={}, delta={}, phi0={}, periods=[{}]",
            self.dim,
            self.delta,
            self.phi0,
            periods.join(", ")
        )
    }
}

/// Integer periods following the geometric frequency recipe
/// `τ_p = τ₀ · τ₀ᵢ^{((p+1)/2) / ⌊(n+1)/2⌋}` for odd `p`, rounded and bumped
/// upward until the frequency conditions hold.
pub fn recipe_periods(dim: usize, tau0: u64, tau0i: u64) -> Result<Vec<u64>> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    if tau0 < MIN_PERIOD || tau0i < 2 {
        return Err(Error::InvalidParameter(format!(
            "recipe needs tau0 >= 3 and tau0i >= 2, got {tau0}, {tau0i}"
        )));
    }
    let count = dim.div_ceil(2);
    let mut out: Vec<u64> = Vec::with_capacity(count);
    for j in 1..=count {
        let exponent = j as f64 / count as f64;
        let raw = tau0 as f64 * (tau0i as f64).powf(exponent);
        let mut cand = (raw.round() as u64).max(MIN_PERIOD);
        loop {
            out.push(cand);
            let ok = check_periods(&out).is_ok();
            out.pop();
            if ok {
                break;
            }
            cand += 1;
        }
        out.push(cand);
    }
    Ok(out)
}

/// Least common multiple of all agent periods.
pub fn common_period(configs: &[DitherConfig]) -> Result<u64> {
    if configs.is_empty() {
        return Err(Error::InvalidParameter("no dither configurations".into()));
    }
    checked_lcm_all(configs.iter().map(DitherConfig::agent_period))
}

pub fn checked_lcm_all(values: impl IntoIterator<Item = u64>) -> Result<u64> {
    values.into_iter().try_fold(1u64, |acc, v| {
        if v == 0 {
            return Err(Error::InvalidParameter("period must be positive".into()));
        }
        (acc / acc.gcd(&v)).checked_mul(v).ok_or(Error::Overflow)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::compensated_sum;
    use proptest::prelude::*;

    #[test]
    fn two_dim_pair() {
        let c = design_dither(2, &[4], 0.0, 0.1).unwrap();
        let w = c.frequencies();
        assert_eq!(w, vec![FRAC_PI_2, FRAC_PI_2]);
        assert_eq!(c.phases(), &[0.0, FRAC_PI_2]);
        assert_eq!(c.agent_period(), 4);
    }

    #[test]
    fn agent_period_is_lcm() {
        let c = design_dither(3, &[4, 6], 0.0, 0.1).unwrap();
        assert_eq!(c.periods(), &[4, 4, 6]);
        assert_eq!(c.agent_period(), 12);
        assert_eq!(checked_lcm_all([3, 4]).unwrap(), 12);
    }

    #[test]
    fn rejects_invalid_period_sets() {
        assert_eq!(
            design_dither(4, &[4, 4], 0.0, 0.1),
            Err(Error::DuplicateFrequency(4))
        );
        assert_eq!(
            design_dither(2, &[2], 0.0, 0.1),
            Err(Error::PeriodTooShort(2))
        );
        assert_eq!(design_dither(0, &[], 0.0, 0.1), Err(Error::EmptyDimension));
        // 1/12 + 1/6 = 1/4
        assert!(matches!(
            design_dither(6, &[4, 6, 12], 0.0, 0.1),
            Err(Error::SumCollision { .. })
        ));
        // 2 · (1/8) = 1/4
        assert!(matches!(
            design_dither(4, &[4, 8], 0.0, 0.1),
            Err(Error::SumCollision { p: 8, h: 8, l: 4 })
        ));
        // 3ω ≡ 0 (mod 2π)
        assert_eq!(
            design_dither(3, &[3, 4], 0.0, 0.1),
            Err(Error::AliasCollision(vec![3, 3, 3]))
        );
        assert!(matches!(
            design_dither(2, &[4, 5], 0.0, 0.1),
            Err(Error::PeriodCount {
                expected: 1,
                got: 2
            })
        ));
        assert!(design_dither(2, &[4], 0.0, 0.0).is_err());
    }

    #[test]
    fn period_three_breaks_cubic_vanishing() {
        // why 3 is rejected: the cosine component has a nonzero cubic mean
        let s: f64 = (1..=3)
            .map(|t| (2.0 * PI * t as f64 / 3.0).cos().powi(3))
            .sum();
        assert!((s - 0.75).abs() < 1e-12);
    }

    #[test]
    fn sample_values() {
        let c = design_dither(2, &[4], 0.0, 0.1).unwrap();
        let s0 = c.sample(0);
        assert_eq!(s0[0], 0.0);
        assert_eq!(s0[1], 1.0);
        assert_eq!(c.sample(4), s0);
        let s1 = c.sample(1);
        assert!((s1[0] - 1.0).abs() <= 1e-12);
        assert!(s1[1].abs() <= 1e-12);
    }

    #[test]
    fn recipe_examples() {
        assert_eq!(recipe_periods(1, 3, 2).unwrap(), vec![6]);
        assert_eq!(recipe_periods(2, 3, 2).unwrap(), vec![6]);
        assert_eq!(recipe_periods(3, 3, 2).unwrap(), vec![4, 6]);
        assert_eq!(recipe_periods(5, 3, 2).unwrap(), vec![4, 5, 6]);
        assert!(recipe_periods(2, 2, 2).is_err());
    }

    #[test]
    fn recipe_repairs_collisions() {
        for dim in 1..=24 {
            for tau0i in 2..6 {
                let periods = recipe_periods(dim, 3, tau0i).unwrap();
                assert_eq!(periods.len(), dim.div_ceil(2));
                assert!(check_periods(&periods).is_ok(), "{dim} {tau0i} {periods:?}");
            }
        }
        // 3 · 2^{1/5} ≈ 3.45 rounds to the aliased 3, bumped to 4
        assert_eq!(recipe_periods(9, 3, 2).unwrap()[0], 4);
    }

    #[test]
    fn common_period_examples() {
        let mk = |p: &[u64]| design_dither(2 * p.len(), p, 0.0, 0.1).unwrap();
        assert_eq!(common_period(&[mk(&[4])]).unwrap(), 4);
        assert_eq!(common_period(&[mk(&[4]), mk(&[6])]).unwrap(), 12);
        assert_eq!(common_period(&[mk(&[4]), mk(&[4]), mk(&[9])]).unwrap(), 36);
        assert!(common_period(&[]).is_err());
        assert_eq!(
            checked_lcm_all([u64::MAX - 1, u64::MAX - 2]),
            Err(Error::Overflow)
        );
    }

    #[test]
    fn text_roundtrip() {
        let c = design_dither(5, &[4, 5, 6], 0.25, 0.2).unwrap();
        let text = c.to_text();
        assert_eq!(text, "dim=5, delta=0.2, phi0=0.25, periods=[4, 5, 6]");
        assert_eq!(DitherConfig::from_text(&text).unwrap(), c);
        assert!(DitherConfig::from_text("dim=2, delta=0.1, periods=[4]").is_err());
        assert!(DitherConfig::from_text("dim=2, delta=0.1, phi0=0, periods=[4, 4]").is_err());
    }

    fn valid_config() -> impl Strategy<Value = DitherConfig> {
        (1usize..=6, prop::collection::vec(4u64..40, 3), -3.0f64..3.0).prop_filter_map(
            "invalid period set",
            |(dim, pool, phi0)| {
                let k = dim.div_ceil(2);
                design_dither(dim, &pool[..k], phi0, 0.1).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn period_sums(c in valid_config(), t0 in 0u64..10_000) {
            let tau = c.agent_period();
            let tol = 1e-10 * tau as f64;
            let samples: Vec<DVector<f64>> = (t0 + 1..=t0 + tau).map(|k| c.sample(k)).collect();
            let n = c.dim();
            for p in 0..n {
                let s1 = compensated_sum(samples.iter().map(|d| d[p]));
                prop_assert!(s1.abs() <= tol);
                for q in 0..n {
                    let s2 = compensated_sum(samples.iter().map(|d| d[p] * d[q]));
                    let want = if p == q { tau as f64 / 2.0 } else { 0.0 };
                    prop_assert!((s2 - want).abs() <= tol, "p={} q={} s2={}", p, q, s2);
                    for r in 0..n {
                        let s3 = compensated_sum(samples.iter().map(|d| d[p] * d[q] * d[r]));
                        prop_assert!(s3.abs() <= tol, "cubic {} {} {}: {}", p, q, r, s3);
                    }
                }
            }
        }

        #[test]
        fn periodic(c in valid_config(), t in 0u64..1_000_000) {
            let a = c.sample(t);
            let b = c.sample(t + c.agent_period());
            prop_assert!((a - b).amax() <= 1e-12);
        }
    }
}
