//! Uniform grid on a fixed interval `[l1, l2]`, with plain trapezoid
//! weights. Used by the eigenvalue solver and the fixed-domain marches,
//! which must share one discretization so steady states of the march are
//! fixed points of the eigensolver's operator.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalGrid {
    pub l1: f64,
    pub l2: f64,
    pub n: usize,
}

impl IntervalGrid {
    pub fn new(l1: f64, l2: f64, n: usize) -> Self {
        assert!(l1 < l2 && n >= 2);
        IntervalGrid { l1, l2, n }
    }

    pub fn dx(&self) -> f64 {
        (self.l2 - self.l1) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.l1 + i as f64 * self.dx()
    }

    pub fn len(&self) -> f64 {
        self.l2 - self.l1
    }

    /// Trapezoid weight: `dx/2` at the two ends, `dx` inside.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }
}

/// Kernel samples at node offsets of an interval grid.
pub(crate) fn interval_kernel_table(
    kernel: &crate::kernel::Kernel,
    iv: &IntervalGrid,
) -> (Vec<f64>, usize) {
    let dx = iv.dx();
    let reach = (kernel.support_radius() / dx).ceil() as usize;
    let table = (0..=reach).map(|k| kernel.density(k as f64 * dx)).collect();
    (table, reach)
}

/// `out[i] = ∫_{l1}^{l2} J(x_i - y) f(y) dy` by the trapezoid rule.
pub(crate) fn convolve_on_interval(
    out: &mut [f64],
    f: &[f64],
    iv: &IntervalGrid,
    table: &[f64],
    reach: usize,
) {
    let n = iv.n;
    let dx = iv.dx();
    for i in 0..n {
        let jmin = i.saturating_sub(reach);
        let jmax = (i + reach).min(n - 1);
        let left = i - jmin;
        let mut sum: f64 = f[jmin..=i]
            .iter()
            .zip(table[..=left].iter().rev())
            .map(|(a, b)| a * b)
            .sum();
        if i < jmax {
            let right = jmax - i;
            sum += f[i + 1..=jmax]
                .iter()
                .zip(table[1..=right].iter())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        sum *= dx;
        if jmin == 0 {
            sum -= 0.5 * dx * table[i] * f[0];
        }
        if jmax == n - 1 {
            sum -= 0.5 * dx * table[n - 1 - i] * f[n - 1];
        }
        out[i] = sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_length() {
        let iv = IntervalGrid::new(-1.5, 2.5, 17);
        let total: f64 = (0..iv.n).map(|i| iv.weight(i)).sum();
        assert!((total - iv.len()).abs() < 1e-14);
    }

    #[test]
    fn nodes_hit_endpoints() {
        let iv = IntervalGrid::new(0.0, 5.0, 11);
        assert_eq!(iv.node(0), 0.0);
        assert_eq!(iv.node(10), 5.0);
    }
}
