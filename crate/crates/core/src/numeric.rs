//! Small numeric helpers shared by the estimators.

/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

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

/// Fixed-point grid for payoff-scale quantities.
///
/// Values are snapped to multiples of `2^-45` times the smallest power of two
/// bounding the utility magnitudes. Sums and differences of a handful of
/// snapped values in that range are exact in `f64`, so decompositions such as
/// `(R_Z - R_0) + (R_X - R_Z) == R_X - R_0` hold bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffGrid {
    step: f64,
}

impl PayoffGrid {
    const BITS: i32 = 45;

    pub fn for_scale(max_abs_utility: f64) -> Self {
        let scale = if max_abs_utility > 0.0 && max_abs_utility.is_finite() {
            2f64.powi(max_abs_utility.log2().ceil() as i32)
        } else {
            1.0
        };
        Self {
            step: scale * 2f64.powi(-Self::BITS),
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn snap(&self, x: f64) -> f64 {
        (x / self.step).round() * self.step
    }
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn mix_seed(master: u64, parts: &[u64]) -> u64 {
    let mut z = master ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z = z.wrapping_add(p.wrapping_mul(0xBF58_476D_1CE4_E5B9)).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
