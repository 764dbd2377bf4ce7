//! Frequency-domain cross-check of the worst-case impact.
//!
//! When the monitor channel is minimum phase and its relative degree does
//! not exceed the target's, the constrained supremum equals the squared peak
//! gain of the ratio `G_t(jw) / G_m(jw)`. This route never touches the
//! matrix inequality.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::impact::Impact;
use crate::sysid::SystemRealization;

#[derive(Debug, Clone, Copy)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid { omega_min: 1e-4, omega_max: 1e4, points: 2000 }
    }
}

impl FrequencyGrid {
    pub fn omegas(&self) -> Vec<f64> {
        let (l0, l1) = (self.omega_min.log10(), self.omega_max.log10());
        let n = self.points.max(2);
        (0..n).map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (n - 1) as f64)).collect()
    }
}

/// `|G_t(jw)|^2 / |G_m(jw)|^2` from one complex solve of `(jwI - A) x = B`.
pub fn gain_ratio(sys: &SystemRealization, omega: f64) -> f64 {
    let n = sys.n();
    let a = sys.a_matrix();
    let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        let d = if i == j { Complex::new(0.0, omega) } else { Complex::new(0.0, 0.0) };
        d - Complex::new(a[(i, j)], 0.0)
    });
    let rhs = DVector::<Complex<f64>>::from_fn(n, |i, _| {
        Complex::new(if i == sys.attack().index() { 1.0 } else { 0.0 }, 0.0)
    });
    match m.lu().solve(&rhs) {
        Some(x) => x[sys.target().index()].norm_sqr() / x[sys.monitor().index()].norm_sqr(),
        None => f64::INFINITY,
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Supremum of the squared gain ratio over the grid, refined around the
/// discrete peak by golden-section search in `log10(w)`.
///
/// Returns `Unbounded` when the ratio keeps growing at least like `w^2` over
/// the last two decades of the grid (monitor relative degree above the
/// target's) or blows up on the grid.
pub fn impact_oracle_frequency(sys: &SystemRealization, grid: &FrequencyGrid) -> Result<Impact> {
    let omegas = grid.omegas();
    let ratios: Vec<f64> = omegas.iter().map(|&w| gain_ratio(sys, w)).collect();
    if ratios.iter().any(|r| !r.is_finite()) {
        return Ok(Impact::Unbounded);
    }
    let last = omegas.len() - 1;
    let tail = gain_ratio(sys, grid.omega_max / 100.0);
    let slope = (ratios[last].log10() - tail.log10()) / 2.0;
    if slope > 1.0 {
        return Ok(Impact::Unbounded);
    }
    let (k, &peak) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if k == last && slope > 0.02 {
        return Err(Error::GridTooCoarse { omega: omegas[k] });
    }
    if k == 0 || k == last {
        return Ok(Impact::Finite(peak));
    }
    let (l0, l1) = (omegas[k - 1].log10(), omegas[k + 1].log10());
    let (_, refined) = golden_max(|lw| gain_ratio(sys, 10f64.powf(lw)), l0, l1);
    Ok(Impact::Finite(refined.max(peak)))
}

/// Cheap estimate of the peak ratio for a symmetric state matrix, from a
/// coarse grid over the modal expansion `sum_k (c u_k)(u_k b) / (jw - l_k)`.
/// `None` when `A` is not symmetric or the peak sits at the grid edge.
pub(crate) fn modal_peak_estimate(sys: &SystemRealization) -> Option<f64> {
    let a = sys.a_matrix();
    if (a - a.transpose()).amax() > 1e-12 * (1.0 + a.amax()) {
        return None;
    }
    let eig = a.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let b = sys.attack().index();
    let (t, m) = (sys.target().index(), sys.monitor().index());
    let terms: Vec<(f64, f64, f64)> =
        (0..sys.n()).map(|k| (eig.eigenvalues[k], u[(t, k)] * u[(b, k)], u[(m, k)] * u[(b, k)])).collect();
    let ratio = |omega: f64| {
        let (mut gt, mut gm) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        for &(l, rt, rm) in &terms {
            let pole = Complex::new(1.0, 0.0) / Complex::new(-l, omega);
            gt += pole * rt;
            gm += pole * rm;
        }
        gt.norm_sqr() / gm.norm_sqr()
    };
    let grid = FrequencyGrid { points: 240, ..Default::default() };
    let omegas = grid.omegas();
    let ratios: Vec<f64> = omegas.iter().map(|&w| ratio(w)).collect();
    let (k, &peak) = ratios.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1))?;
    if !peak.is_finite() || k == omegas.len() - 1 {
        return None;
    }
    if k == 0 {
        return Some(peak.max(ratio(0.0)));
    }
    let (_, refined) = golden_max(|lw| ratio(10f64.powf(lw)), omegas[k - 1].log10(), omegas[k + 1].log10());
    Some(refined.max(peak))
}
