//! Small numeric helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Sum {
    total: f64,
    comp: f64,
}

impl Sum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.comp += (self.total - t) + x;
        } else {
            self.comp += (x - t) + self.total;
        }
        self.total = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.total + self.comp
    }
}

pub(crate) fn sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = Sum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Logistic function `e^x / (1 + e^x)`, evaluated without overflow.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ceil(p * n)` for a probability `p`, robust to the product landing one
/// ulp above an integer (e.g. `0.95 * 100`). Never less than 1.
pub(crate) fn ceil_count(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let c = (x - 1e-9 * x.max(1.0)).ceil();
    (c.max(1.0) as usize).min(n)
}
