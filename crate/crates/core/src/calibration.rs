//! Finds the nonlinear strength ε*(g) whose entanglement dynamics best
//! overlaps the unit-coupling linear reference curve, fits the rational law
//! ε*(g) = (1−g)/(a₁g − a₂g²), and inverts it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubit::{entanglement_curve, EntanglementCurve};
use crate::report::fmt_g17;

/// Shared time window for every curve in a calibration: deviations are
/// integrals over a common grid, so no interpolation ever enters.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationWindow {
    pub t_final: f64,
    pub dt: f64,
}

impl Default for CalibrationWindow {
    fn default() -> Self {
        // two periods of the reference entanglement oscillation
        Self {
            t_final: 2.0 * std::f64::consts::PI,
            dt: 1e-3,
        }
    }
}

/// Golden-section search settings; the bracket is located by a coarse scan
/// before the section search starts.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub scan_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 6.0,
            tol: 1e-4,
            scan_points: 32,
        }
    }
}

/// Mean squared deviation d = (1/T)∫|E_a − E_b|² dt by trapezoidal
/// quadrature. The two curves must share their time grid exactly.
pub fn deviation(a: &EntanglementCurve, b: &EntanglementCurve) -> Result<f64> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (x - y).abs() > 0.0)
    {
        return Err(Error::ShapeMismatch(
            "deviation requires identical time grids".into(),
        ));
    }
    let t_total = *a.times.last().unwrap();
    if t_total <= 0.0 {
        return Err(Error::Domain("curves must span a positive window".into()));
    }
    let mut acc = 0.0;
    for i in 0..a.times.len() - 1 {
        let f0 = (a.entropies[i] - b.entropies[i]).powi(2);
        let f1 = (a.entropies[i + 1] - b.entropies[i + 1]).powi(2);
        acc += 0.5 * (f0 + f1) * (a.times[i + 1] - a.times[i]);
    }
    Ok(acc / t_total)
}

/// Result of one ε* search, with the probe set as a certificate of
/// minimality.
#[derive(Debug, Clone)]
pub struct EpsilonStarResult {
    pub g: f64,
    pub eps_star: f64,
    pub d_min: f64,
    /// True when the coarse scan found no interior minimum and the boundary
    /// value was returned instead.
    pub at_boundary: bool,
    /// Every (ε, d) pair evaluated during the search.
    pub probes: Vec<(f64, f64)>,
}

/// Reference curve plus window shared by a whole calibration run.
pub struct Calibrator {
    window: CalibrationWindow,
    reference: EntanglementCurve,
}

impl Calibrator {
    pub fn new(window: CalibrationWindow) -> Result<Self> {
        let reference = entanglement_curve(1.0, 0.0, window.t_final, window.dt)?;
        Ok(Self { window, reference })
    }

    pub fn window(&self) -> CalibrationWindow {
        self.window
    }

    pub fn reference(&self) -> &EntanglementCurve {
        &self.reference
    }

    /// d(E_{(g,ε)}, E_{(1,0)}) on the shared grid.
    pub fn objective(&self, g: f64, eps: f64) -> Result<f64> {
        let curve = entanglement_curve(g, eps, self.window.t_final, self.window.dt)?;
        deviation(&curve, &self.reference)
    }

    /// Locates argmin_ε d(E_{(g,ε)}, E_{(1,0)}) over [lo, hi]: a coarse scan
    /// brackets the minimum (the objective can have local minima), then
    /// golden-section search refines it to `tol`.
    pub fn find_epsilon_star(&self, g: f64, search: &SearchOptions) -> Result<EpsilonStarResult> {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Domain(format!("g must lie in (0, 1], got {g}")));
        }
        if !(search.lo < search.hi) || search.scan_points < 3 {
            return Err(Error::Domain("search bracket is empty".into()));
        }
        let mut probes: Vec<(f64, f64)> = Vec::new();
        let n = search.scan_points;
        let step = (search.hi - search.lo) / (n - 1) as f64;
        for k in 0..n {
            let eps = search.lo + step * k as f64;
            probes.push((eps, self.objective(g, eps)?));
        }
        let best = probes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .unwrap();

        if best == 0 || best == n - 1 {
            let (eps, d) = probes[best];
            return Ok(EpsilonStarResult {
                g,
                eps_star: eps,
                d_min: d,
                at_boundary: true,
                probes,
            });
        }

        let (mut lo, mut hi) = (probes[best - 1].0, probes[best + 1].0);
        let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let mut fc = self.objective(g, c)?;
        let mut fd = self.objective(g, d)?;
        probes.push((c, fc));
        probes.push((d, fd));
        while hi - lo > search.tol {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = self.objective(g, c)?;
                probes.push((c, fc));
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = self.objective(g, d)?;
                probes.push((d, fd));
            }
        }
        let mid = 0.5 * (lo + hi);
        probes.push((mid, self.objective(g, mid)?));
        // report the best probed point, so d(eps*) <= d(eps) holds over the
        // whole probe set by construction
        let &(eps_star, d_min) = probes
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        Ok(EpsilonStarResult {
            g,
            eps_star,
            d_min,
            at_boundary: false,
            probes,
        })
    }

    /// Full calibration over a g grid (independent searches, parallel map).
    pub fn calibrate(&self, g_grid: &[f64], search: &SearchOptions) -> Result<CalibrationResult> {
        let points: Vec<EpsilonStarResult> = g_grid
            .par_iter()
            .map(|&g| self.find_epsilon_star(g, search))
            .collect::<Result<Vec<_>>>()?;
        let eps_star: Vec<f64> = points.iter().map(|p| p.eps_star).collect();
        let d_min: Vec<f64> = points.iter().map(|p| p.d_min).collect();
        let at_boundary: Vec<bool> = points.iter().map(|p| p.at_boundary).collect();
        let fit = fit_rational(g_grid, &eps_star)?;
        let residuals = g_grid
            .iter()
            .zip(&eps_star)
            .map(|(&g, &e)| (1.0 - g) / e - (fit.a1 * g - fit.a2 * g * g))
            .collect();
        Ok(CalibrationResult {
            g_grid: g_grid.to_vec(),
            eps_star,
            d_min,
            at_boundary,
            fit,
            residuals,
        })
    }

    /// Quality-of-mimicry sweep: d at (g*(ε), ε) for each ε, with g* taken
    /// from the supplied fit coefficients.
    pub fn mimicry_curve(&self, eps_grid: &[f64], fit: &RationalFit) -> Result<Vec<MimicryPoint>> {
        eps_grid
            .par_iter()
            .map(|&eps| {
                let g = g_star(eps, fit.a1, fit.a2)?;
                let d = self.objective(g, eps)?;
                Ok(MimicryPoint {
                    eps,
                    g_star: g,
                    deviation: d,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MimicryPoint {
    pub eps: f64,
    pub g_star: f64,
    pub deviation: f64,
}

/// Coefficients of the rational law and the rms residual of the linearized
/// fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RationalFit {
    pub a1: f64,
    pub a2: f64,
    pub rms_residual: f64,
}

/// Fits (1−g)/ε* = a₁g − a₂g² by linear least squares in (a₁, a₂).
///
/// The transformation makes the problem exactly linear, removing any
/// nonlinear-optimizer nondeterminism; the residual is reported in the
/// transformed variable.
pub fn fit_rational(g_grid: &[f64], eps_star: &[f64]) -> Result<RationalFit> {
    if g_grid.len() != eps_star.len() {
        return Err(Error::ShapeMismatch("grid length mismatch".into()));
    }
    if g_grid.len() < 4 {
        return Err(Error::FitFailed(format!(
            "need at least 4 grid points, got {}",
            g_grid.len()
        )));
    }
    if g_grid.iter().any(|&g| !(g > 0.0 && g < 1.0)) {
        return Err(Error::FitFailed("grid points must lie in (0, 1)".into()));
    }
    if eps_star.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::FitFailed("eps* values must be positive".into()));
    }
    // normal equations for the 2-parameter linear model y = a1 g - a2 g^2
    let (mut s_xx, mut s_xy, mut s_yy) = (0.0f64, 0.0f64, 0.0f64);
    let (mut b_x, mut b_y) = (0.0f64, 0.0f64);
    for (&g, &e) in g_grid.iter().zip(eps_star) {
        let y = (1.0 - g) / e;
        let (f1, f2) = (g, -g * g);
        s_xx += f1 * f1;
        s_xy += f1 * f2;
        s_yy += f2 * f2;
        b_x += f1 * y;
        b_y += f2 * y;
    }
    let det = s_xx * s_yy - s_xy * s_xy;
    if det.abs() < 1e-12 * s_xx.max(s_yy).max(1e-300) {
        return Err(Error::FitFailed(
            "normal equations are singular (degenerate grid)".into(),
        ));
    }
    // the basis is (g, -g^2), so the second solved coefficient is a2 itself
    let a1 = (b_x * s_yy - b_y * s_xy) / det;
    let a2 = (s_xx * b_y - s_xy * b_x) / det;
    let mut ss = 0.0;
    for (&g, &e) in g_grid.iter().zip(eps_star) {
        let r = (1.0 - g) / e - (a1 * g - a2 * g * g);
        ss += r * r;
    }
    Ok(RationalFit {
        a1,
        a2,
        rms_residual: (ss / g_grid.len() as f64).sqrt(),
    })
}

/// Inverts the rational law: solves ε(a₁g − a₂g²) = 1 − g for the root in
/// (0, 1]. ε = 0 maps to g = 1.
pub fn g_star(eps: f64, a1: f64, a2: f64) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::Domain("eps must be non-negative".into()));
    }
    if eps == 0.0 {
        return Ok(1.0);
    }
    // eps*a2 g^2 - (eps*a1 + 1) g + 1 = 0, solved in the numerically stable
    // form q = ((eps*a1 + 1) + sqrt(disc))/2 with roots q/(eps*a2) and 1/q.
    let a = eps * a2;
    let b = eps * a1 + 1.0;
    let disc = b * b - 4.0 * a;
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "no real inverse for eps = {eps} with coefficients ({a1}, {a2})"
        )));
    }
    let q = 0.5 * (b + disc.sqrt());
    let candidates = [1.0 / q, if a != 0.0 { q / a } else { f64::NAN }];
    for root in candidates {
        if root.is_finite() && root > 0.0 && root <= 1.0 + 1e-12 {
            return Ok(root.min(1.0));
        }
    }
    Err(Error::Domain(format!(
        "no inverse in (0, 1] for eps = {eps}"
    )))
}

/// Calibration sweep output: the ε*(g) table, its rational fit, and the
/// per-point transformed residuals.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub g_grid: Vec<f64>,
    pub eps_star: Vec<f64>,
    pub d_min: Vec<f64>,
    pub at_boundary: Vec<bool>,
    pub fit: RationalFit,
    pub residuals: Vec<f64>,
}

#[derive(Serialize)]
struct FitReport<'a> {
    a1: f64,
    a2: f64,
    rms: f64,
    grid: &'a [f64],
}

impl CalibrationResult {
    /// `g, eps_star, d_min` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("g,eps_star,d_min\n");
        for i in 0..self.g_grid.len() {
            out.push_str(&fmt_g17(self.g_grid[i]));
            out.push(',');
            out.push_str(&fmt_g17(self.eps_star[i]));
            out.push(',');
            out.push_str(&fmt_g17(self.d_min[i]));
            out.push('\n');
        }
        out
    }

    /// JSON fit report: `{"a1": ..., "a2": ..., "rms": ..., "grid": [...]}`.
    pub fn fit_report_json(&self) -> String {
        serde_json::to_string_pretty(&FitReport {
            a1: self.fit.a1,
            a2: self.fit.a2,
            rms: self.fit.rms_residual,
            grid: &self.g_grid,
        })
        .expect("static schema")
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.eps_star.windows(2).all(|w| w[1] < w[0])
    }
}

/// CSV for a mimicry sweep: `eps, g_star, d`.
pub fn mimicry_csv(points: &[MimicryPoint]) -> String {
    let mut out = String::from("eps,g_star,d\n");
    for p in points {
        out.push_str(&fmt_g17(p.eps));
        out.push(',');
        out.push_str(&fmt_g17(p.g_star));
        out.push(',');
        out.push_str(&fmt_g17(p.deviation));
        out.push('\n');
    }
    out
}
