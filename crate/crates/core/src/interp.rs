//! Cubic Hermite tables on uniform grids.

/// Piecewise cubic Hermite interpolant on a uniform grid, continued linearly
/// past both ends with the end derivatives.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x0: f64,
    dx: f64,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl HermiteTable {
    /// Table from values and derivatives at `x0 + k dx`.
    pub fn new(x0: f64, dx: f64, ys: Vec<f64>, ms: Vec<f64>) -> Self {
        assert!(ys.len() >= 2 && ys.len() == ms.len() && dx > 0.0);
        HermiteTable { x0, dx, ys, ms }
    }

    /// Same as [`HermiteTable::new`] after Fritsch–Carlson limiting of the
    /// derivatives, so the interpolant is monotone on every interval where the
    /// data are.
    pub fn monotone(x0: f64, dx: f64, ys: Vec<f64>, mut ms: Vec<f64>) -> Self {
        let n = ys.len();
        for k in 0..n - 1 {
            let delta = (ys[k + 1] - ys[k]) / dx;
            if delta == 0.0 {
                ms[k] = 0.0;
                ms[k + 1] = 0.0;
                continue;
            }
            if ms[k] * delta < 0.0 {
                ms[k] = 0.0;
            }
            if ms[k + 1] * delta < 0.0 {
                ms[k + 1] = 0.0;
            }
            let a = ms[k] / delta;
            let b = ms[k + 1] / delta;
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                ms[k] = t * a * delta;
                ms[k + 1] = t * b * delta;
            }
        }
        Self::new(x0, dx, ys, ms)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn node_value(&self, k: usize) -> f64 {
        self.ys[k]
    }

    pub fn lo(&self) -> f64 {
        self.x0
    }

    pub fn hi(&self) -> f64 {
        self.node(self.ys.len() - 1)
    }

    /// Interval index `k` with `x` in `[x_k, x_{k+1}]` and the local
    /// coordinate, or `None` outside the table.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x - self.x0) / self.dx;
        let last = self.ys.len() - 1;
        if !(0.0..=last as f64).contains(&s) {
            return None;
        }
        let k = (s.floor() as usize).min(last - 1);
        Some((k, s - k as f64))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((k, t)) => self.eval_interval(k, t),
            None => self.extend(x).0,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((k, t)) => {
                let (y0, y1, m0, m1) = self.coeffs(k);
                let t2 = t * t;
                let dh00 = 6.0 * t2 - 6.0 * t;
                let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
                let dh01 = -dh00;
                let dh11 = 3.0 * t2 - 2.0 * t;
                (dh00 * y0 + dh01 * y1) / self.dx + dh10 * m0 + dh11 * m1
            }
            None => self.extend(x).1,
        }
    }

    /// Value at interval `k`, local coordinate `t ∈ [0, 1]`.
    pub fn eval_interval(&self, k: usize, t: f64) -> f64 {
        let (y0, y1, m0, m1) = self.coeffs(k);
        if t == 0.0 {
            return y0;
        }
        if t == 1.0 {
            return y1;
        }
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h01 * y1 + self.dx * (h10 * m0 + h11 * m1)
    }

    fn coeffs(&self, k: usize) -> (f64, f64, f64, f64) {
        (self.ys[k], self.ys[k + 1], self.ms[k], self.ms[k + 1])
    }

    fn extend(&self, x: f64) -> (f64, f64) {
        let last = self.ys.len() - 1;
        if x < self.x0 {
            (self.ys[0] + self.ms[0] * (x - self.x0), self.ms[0])
        } else {
            let xe = self.node(last);
            (self.ys[last] + self.ms[last] * (x - xe), self.ms[last])
        }
    }
}
