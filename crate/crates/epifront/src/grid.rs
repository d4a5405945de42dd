//! Master spatial grid, quadrature over a moving active window, the discrete
//! nonlocal convolution, and the boundary-flux integrals.
//!
//! The grid is fixed; the active window `[g, h]` moves continuously through
//! it (front positions are reals, never snapped to nodes). Fields vanish at
//! the window ends, so every integral over `[g, h]` is a composite trapezoid
//! rule whose partial end cells interpolate linearly down to zero at `g`
//! and `h`.

use thiserror::Error;

use crate::kernel::Kernel;

/// Uniform master grid on `[-L, L]` with an odd number of nodes so that
/// `x = 0` is a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self, GridError> {
        if !(half_length > 0.0) || n < 3 || n.is_multiple_of(2) {
            return Err(GridError::BadGrid { half_length, n });
        }
        Ok(Grid { half_length, n })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.dx()
    }

    /// Index of the node at `x = 0`.
    pub fn center_index(&self) -> usize {
        (self.n - 1) / 2
    }
}

/// The moving interval `[g, h]` currently occupied by the epidemic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveWindow {
    pub g: f64,
    pub h: f64,
}

impl ActiveWindow {
    pub fn gap(&self) -> f64 {
        self.h - self.g
    }
}

/// A sampled function on the master grid, zero outside the active window.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            values: vec![0.0; grid.n()],
        }
    }

    /// Sample `f` on the nodes strictly inside the window; zero elsewhere.
    pub fn from_fn(grid: &Grid, w: &ActiveWindow, f: impl Fn(f64) -> f64) -> Self {
        let mut field = Field::zeros(grid);
        if let Some((lo, hi)) = active_range(grid, w) {
            for i in lo..=hi {
                field.values[i] = f(grid.node(i));
            }
        }
        field
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs positive half-length and odd n >= 3, got L = {half_length}, n = {n}")]
    BadGrid { half_length: f64, n: usize },
    #[error("window [{g}, {h}] leaves the master grid [-{half_length}, {half_length}]")]
    WindowOutOfGrid { g: f64, h: f64, half_length: f64 },
    #[error("field is negative at node {index}: {value}")]
    NegativeField { index: usize, value: f64 },
}

fn check_window(grid: &Grid, w: &ActiveWindow) -> Result<(), GridError> {
    if w.g < -grid.half_length() || w.h > grid.half_length() || !(w.g < w.h) {
        return Err(GridError::WindowOutOfGrid {
            g: w.g,
            h: w.h,
            half_length: grid.half_length(),
        });
    }
    Ok(())
}

/// Indices of the nodes strictly inside `(g, h)`, or `None` when the window
/// holds no node.
pub fn active_range(grid: &Grid, w: &ActiveWindow) -> Option<(usize, usize)> {
    let dx = grid.dx();
    let l = grid.half_length();
    let mut lo = (((w.g + l) / dx).floor() as isize + 1).max(0) as usize;
    while lo < grid.n() && grid.node(lo) <= w.g {
        lo += 1;
    }
    let mut hi = (((w.h + l) / dx).ceil() as isize - 1).min(grid.n() as isize - 1);
    while hi >= 0 && grid.node(hi as usize) >= w.h {
        hi -= 1;
    }
    if hi < lo as isize {
        None
    } else {
        Some((lo, hi as usize))
    }
}

/// Trapezoid weight of active node `i`, including the partial end cells
/// where the integrand falls linearly to zero at `g` and `h`.
pub(crate) fn quad_weight(grid: &Grid, w: &ActiveWindow, lo: usize, hi: usize, i: usize) -> f64 {
    let dx = grid.dx();
    if lo == hi {
        return 0.5 * (w.h - w.g);
    }
    if i == lo {
        0.5 * dx + 0.5 * (grid.node(lo) - w.g)
    } else if i == hi {
        0.5 * dx + 0.5 * (w.h - grid.node(hi))
    } else {
        dx
    }
}

/// `∫_g^h f dx` by the composite trapezoid rule with partial end cells.
pub fn active_quadrature(f: &Field, w: &ActiveWindow, grid: &Grid) -> Result<f64, GridError> {
    check_window(grid, w)?;
    let Some((lo, hi)) = active_range(grid, w) else {
        return Ok(0.0);
    };
    let mut sum = 0.0;
    for i in lo..=hi {
        sum += quad_weight(grid, w, lo, hi, i) * f.values()[i];
    }
    Ok(sum)
}

/// Integrate `x ↦ f(x) scale(x)` over the active window with the same rule.
pub(crate) fn weighted_quadrature(
    f: &[f64],
    w: &ActiveWindow,
    grid: &Grid,
    lo: usize,
    hi: usize,
    scale: impl Fn(f64) -> f64,
) -> f64 {
    let mut sum = 0.0;
    for i in lo..=hi {
        sum += quad_weight(grid, w, lo, hi, i) * f[i] * scale(grid.node(i));
    }
    sum
}

/// Kernel samples at node offsets: `table[k] = J(k dx)` for
/// `k = 0..=reach`, with `reach` covering the (truncated) support.
pub(crate) struct KernelTable {
    pub table: Vec<f64>,
    pub reach: usize,
}

impl KernelTable {
    pub fn build(kernel: &Kernel, grid: &Grid) -> Self {
        let dx = grid.dx();
        let reach = (kernel.support_radius() / dx).ceil() as usize;
        let table = (0..=reach).map(|k| kernel.density(k as f64 * dx)).collect();
        KernelTable { table, reach }
    }
}

/// Core of the discrete convolution: writes
/// `out[i] = ∫_g^h J(x_i - y) f(y) dy` for the active nodes only. Callers
/// that expose `out` as a field must zero the inactive entries themselves.
pub(crate) fn convolve_core(
    f: &[f64],
    w: &ActiveWindow,
    grid: &Grid,
    kt: &KernelTable,
    lo: usize,
    hi: usize,
    out: &mut [f64],
) {
    let dx = grid.dx();
    // End-node weights differ from dx; apply them as corrections after the
    // uniform-weight pass so the inner loops stay plain dot products over
    // slices (no per-element index arithmetic).
    let w_lo = quad_weight(grid, w, lo, hi, lo);
    let w_hi = quad_weight(grid, w, lo, hi, hi);
    for i in lo..=hi {
        let jmin = i.saturating_sub(kt.reach).max(lo);
        let jmax = (i + kt.reach).min(hi);
        // j <= i: offsets i - j run down to zero.
        let left = i - jmin;
        let mut sum: f64 = f[jmin..=i]
            .iter()
            .zip(kt.table[..=left].iter().rev())
            .map(|(a, b)| a * b)
            .sum();
        // j > i: offsets j - i run up from one.
        if i < jmax {
            let right = jmax - i;
            sum += f[i + 1..=jmax]
                .iter()
                .zip(kt.table[1..=right].iter())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        sum *= dx;
        if jmin == lo {
            sum += (w_lo - dx) * kt.table[i - lo] * f[lo];
        }
        if jmax == hi && hi != lo {
            sum += (w_hi - dx) * kt.table[hi - i] * f[hi];
        }
        out[i] = sum;
    }
}

/// `x ↦ ∫_g^h J(x - y) f(y) dy` sampled at every active node.
pub fn nonlocal_convolve(
    f: &Field,
    w: &ActiveWindow,
    kernel: &Kernel,
    grid: &Grid,
) -> Result<Field, GridError> {
    check_window(grid, w)?;
    let mut out = Field::zeros(grid);
    if let Some((lo, hi)) = active_range(grid, w) {
        let kt = KernelTable::build(kernel, grid);
        convolve_core(f.values(), w, grid, &kt, lo, hi, out.values_mut());
    }
    Ok(out)
}

/// Which front a flux integral feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Outward boundary flux of `f` across one front:
/// `Right = ∫_g^h f(x) T(h - x) dx`, `Left = ∫_g^h f(x) T(x - g) dx`,
/// with `T` the kernel tail. The front-speed factor `μ` is the caller's.
pub fn boundary_flux(
    f: &Field,
    w: &ActiveWindow,
    kernel: &Kernel,
    grid: &Grid,
    side: Side,
) -> Result<f64, GridError> {
    check_window(grid, w)?;
    let Some((lo, hi)) = active_range(grid, w) else {
        return Ok(0.0);
    };
    for i in lo..=hi {
        if f.values()[i] < -1e-12 {
            return Err(GridError::NegativeField {
                index: i,
                value: f.values()[i],
            });
        }
    }
    Ok(flux_unchecked(f.values(), w, grid, kernel, lo, hi, side))
}

pub(crate) fn flux_unchecked(
    f: &[f64],
    w: &ActiveWindow,
    grid: &Grid,
    kernel: &Kernel,
    lo: usize,
    hi: usize,
    side: Side,
) -> f64 {
    match side {
        Side::Right => weighted_quadrature(f, w, grid, lo, hi, |x| kernel.tail(w.h - x)),
        Side::Left => weighted_quadrature(f, w, grid, lo, hi, |x| kernel.tail(x - w.g)),
    }
}
