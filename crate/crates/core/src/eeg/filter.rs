use crate::scalar::Real;

/// Second-order section in transposed direct form II, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 3],
}

impl<T: Real> Biquad<T> {
    fn prewarp(fc: f64, fs: f64) -> f64 {
        (std::f64::consts::PI * fc / fs).tan()
    }

    /// Second-order Butterworth low-pass via the bilinear transform.
    pub fn butter_lowpass(fc: f64, fs: f64) -> Self {
        let k = Self::prewarp(fc, fs);
        let norm = 1.0 / (1.0 + std::f64::consts::SQRT_2 * k + k * k);
        let b0 = k * k * norm;
        Biquad {
            b: [T::lit(b0), T::lit(2.0 * b0), T::lit(b0)],
            a: [T::one(), T::lit(2.0 * (k * k - 1.0) * norm), T::lit((1.0 - std::f64::consts::SQRT_2 * k + k * k) * norm)],
        }
    }

    /// Second-order Butterworth high-pass via the bilinear transform.
    pub fn butter_highpass(fc: f64, fs: f64) -> Self {
        let k = Self::prewarp(fc, fs);
        let norm = 1.0 / (1.0 + std::f64::consts::SQRT_2 * k + k * k);
        Biquad {
            b: [T::lit(norm), T::lit(-2.0 * norm), T::lit(norm)],
            a: [T::one(), T::lit(2.0 * (k * k - 1.0) * norm), T::lit((1.0 - std::f64::consts::SQRT_2 * k + k * k) * norm)],
        }
    }

    /// DC gain.
    pub fn dc_gain(&self) -> T {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// State that makes the section's response to a unit step start in steady state.
    fn step_state(&self) -> [T; 2] {
        let y = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * y;
        let z1 = self.b[1] - self.a[1] * y + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [T], mut z: [T; 2]) {
        for v in x.iter_mut() {
            let xi = *v;
            let y = self.b[0] * xi + z[0];
            z[0] = self.b[1] * xi - self.a[1] * y + z[1];
            z[1] = self.b[2] * xi - self.a[2] * y;
            *v = y;
        }
    }
}

/// Cascade of sections, each started in its step steady state scaled by the
/// first input sample.
fn cascade<T: Real>(sections: &[Biquad<T>], x: &mut [T]) {
    let Some(&x0) = x.first() else { return };
    let mut level = x0;
    for s in sections {
        let st = s.step_state();
        s.run(x, [st[0] * level, st[1] * level]);
        level = level * s.dc_gain();
    }
}

/// Zero-phase forward-backward filtering with odd-symmetric edge extension.
pub fn filtfilt<T: Real>(sections: &[Biquad<T>], x: &[T], padlen: usize) -> Vec<T> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = padlen.min(n - 1);
    let two = T::lit(2.0);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| two * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| two * x[n - 1] - x[n - 1 - i]));
    cascade(sections, &mut ext);
    ext.reverse();
    cascade(sections, &mut ext);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}
