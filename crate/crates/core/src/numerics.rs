//! Small numerical helpers shared across the crate.

/// Compensated (Neumaier) accumulator.
///
/// Norms and inner products of production-size wavefunctions involve sums
/// over ~10⁶ terms; plain summation error (~n·ε) would already exceed the
/// 1e-12 per-step norm-drift budget we have to certify.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Composite Simpson quadrature of `f` over [a, b] with `n` panels
/// (`n` is rounded up to the next even integer).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = KahanSum::new();
    acc.add(f(a));
    acc.add(f(b));
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(a + i as f64 * h));
    }
    acc.value() * h / 3.0
}

/// Golden-section maximization of `f` on [a, b] down to interval width `tol`.
///
/// Assumes `f` is unimodal on the bracket; returns the abscissa of the max.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Abscissa of the vertex of the parabola through three equally spaced
/// samples (x0-h, y0), (x0, y1), (x0+h, y2). Falls back to x0 when the
/// samples are collinear.
pub fn parabolic_vertex(x0: f64, h: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return x0;
    }
    x0 + 0.5 * h * (y0 - y2) / denom
}

/// Full-precision decimal formatting (17 significant digits), round-trip
/// exact for f64. All persisted numbers go through this.
pub fn fmt_full(x: f64) -> String {
    format!("{:.16e}", x)
}
