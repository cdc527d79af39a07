//! Compensated summation.
//!
//! Certificates compare energies across mesh resolutions at 1e-10 relative
//! tolerance, so per-triangle sums use Kahan accumulation with a fixed
//! (triangle-index) order. Results are independent of thread count because
//! there is exactly one reduction order.

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_input() {
        let mut k = KahanSum::new();
        let mut naive = 0.0f64;
        // 1.0 followed by many tiny values that a naive sum drops entirely.
        k.add(1.0);
        naive += 1.0;
        let tiny = 1e-17;
        for _ in 0..1_000_000 {
            k.add(tiny);
            naive += tiny;
        }
        let exact = 1.0 + 1e-11;
        assert!((k.value() - exact).abs() < 1e-14);
        assert!((naive - exact).abs() > 1e-12);
    }
}
