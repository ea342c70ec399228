//! Small numeric helpers shared across modules.

use nalgebra::DVector;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Component-wise compensated accumulator for vectors.
#[derive(Debug, Clone)]
pub struct CompensatedVec {
    parts: Vec<CompensatedSum>,
}

impl CompensatedVec {
    pub fn zeros(dim: usize) -> Self {
        Self {
            parts: vec![CompensatedSum::new(); dim],
        }
    }

    pub fn add_scaled(&mut self, scale: f64, v: &DVector<f64>) {
        for (acc, x) in self.parts.iter_mut().zip(v.iter()) {
            acc.add(scale * x);
        }
    }

    pub fn value(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.parts.len(),
            self.parts.iter().map(CompensatedSum::value),
        )
    }
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Formats like C's `%.12g`.
pub fn fmt_sig12(v: f64) -> String {
    const SIG: i32 = 12;
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // the exponent is taken after rounding to SIG digits, as %g does
    let sci = format!("{:.*e}", (SIG - 1) as usize, v);
    let (mantissa, e) = sci.split_once('e').unwrap();
    let exp: i32 = e.parse().unwrap();
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
