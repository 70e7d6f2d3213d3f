use crate::error::{Error, Result};

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::Degenerate("spline needs at least 2 knots".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let m = second_derivatives(&xs, &ys);
        Ok(Self { xs, ys, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.xs.len();
        let i = match self.xs.partition_point(|&x| x <= t) {
            0 => 0,
            p if p >= k => k - 2,
            p => p - 1,
        };
        self.eval_segment(i, t)
    }

    fn eval_segment(&self, i: usize, t: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = x1 - t;
        let b = t - x0;
        self.m[i] * a * a * a / (6.0 * h)
            + self.m[i + 1] * b * b * b / (6.0 * h)
            + (self.ys[i] / h - self.m[i] * h / 6.0) * a
            + (self.ys[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }

    /// Evaluate at `0, 1, ..., n - 1`, writing into `out`.
    pub fn eval_grid_into(&self, out: &mut [f64]) {
        let k = self.xs.len();
        let mut seg = 0;
        for (j, o) in out.iter_mut().enumerate() {
            let t = j as f64;
            while seg + 2 < k && t > self.xs[seg + 1] {
                seg += 1;
            }
            *o = self.eval_segment(seg, t);
        }
    }
}

/// Tridiagonal solve (Thomas algorithm) for natural end conditions.
fn second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let k = xs.len();
    let mut m = vec![0.0; k];
    if k < 3 {
        return m;
    }
    let inner = k - 2;
    let mut diag = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for r in 0..inner {
        let i = r + 1;
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        diag[r] = 2.0 * (h0 + h1);
        upper[r] = h1;
        rhs[r] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    // forward sweep; sub-diagonal entry of row r is h0 of row r
    for r in 1..inner {
        let lower = xs[r + 1] - xs[r];
        let w = lower / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs[r] -= w * rhs[r - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for r in (0..inner - 1).rev() {
        m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
    }
    m
}

/// Envelope through the values of `x` at `idx`, with the two extrema nearest
/// each end mirrored about the end samples to tame boundary swings.
pub(crate) fn envelope_into(x: &[f64], idx: &[usize], out: &mut [f64]) {
    debug_assert!(idx.len() >= 2);
    let last = (x.len() - 1) as f64;
    let k = idx.len();
    let mut xs = Vec::with_capacity(k + 4);
    let mut ys = Vec::with_capacity(k + 4);
    for &i in idx[..2].iter().rev() {
        xs.push(-(i as f64));
        ys.push(x[i]);
    }
    for &i in idx {
        xs.push(i as f64);
        ys.push(x[i]);
    }
    for &i in idx[k - 2..].iter().rev() {
        xs.push(2.0 * last - i as f64);
        ys.push(x[i]);
    }
    let spline = CubicSpline::natural(xs, ys).expect("mirrored extrema are strictly increasing");
    spline.eval_grid_into(out);
}
