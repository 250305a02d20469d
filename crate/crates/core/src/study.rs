//! Refinement sweeps, least-squares order fits `w_h = w + C h^alpha`, and the
//! stabilization-parameter scan used to spot spurious frequencies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::assembly::{assemble, AssemblyError, BcKind, GlobalSystem};
use crate::eigsolve::{solve_smallest, EigenError, Spectrum, DEFAULT_TOL};
use crate::mesh::{generate_lshape_mesh, generate_square_mesh, Domain, MeshError, MeshFamily, PolygonalMesh};
use crate::vem::{Material, Stabilization};

pub const ALPHA_MIN: f64 = 0.25;
pub const ALPHA_MAX: f64 = 4.0;
const ALPHA_STEP: f64 = 0.05;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("need at least 3 samples for an order fit (got {0})")]
    TooFewSamples(usize),
    #[error("h and w have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("mesh sizes must be positive and strictly decreasing")]
    NonMonotone,
    #[error("non-finite sample")]
    NonFinite,
    #[error("N = {n}: {source}")]
    Mesh { n: usize, source: MeshError },
    #[error("N = {n}: {source}")]
    Assembly { n: usize, source: AssemblyError },
    #[error("N = {n}, beta = {beta}: {source}")]
    Solve { n: usize, beta: f64, source: EigenError },
    #[error("empty spectrum at N = {n}, beta = {beta}")]
    EmptySpectrum { n: usize, beta: f64 },
    #[error("invalid study: {0}")]
    Invalid(String),
}

/// Result of fitting `w_h = omega_ext + c h^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub omega_ext: f64,
    pub c: f64,
    pub alpha: f64,
    /// Root of the sum of squared residuals.
    pub residual: f64,
}

/// Linear least squares for `(a, c)` in `w = a + c x` given `x`; returns
/// `(a, c, ssr)`. Data are shifted by `w[last]` so a constant sample is fitted
/// exactly.
fn linear_fit(x: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let w0 = *w.last().unwrap();
    let y: Vec<f64> = w.iter().map(|v| v - w0).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - c * mx;
    let ssr = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - a - c * xi).powi(2))
        .sum();
    (w0 + a, c, ssr)
}

pub fn fit_order(h: &[f64], w: &[f64]) -> Result<ConvergenceFit, StudyError> {
    if h.len() != w.len() {
        return Err(StudyError::LengthMismatch(h.len(), w.len()));
    }
    if h.len() < 3 {
        return Err(StudyError::TooFewSamples(h.len()));
    }
    if h.iter().chain(w).any(|v| !v.is_finite()) {
        return Err(StudyError::NonFinite);
    }
    if !(h[0] > 0.0) || h.windows(2).any(|p| !(p[1] < p[0]) || !(p[1] > 0.0)) {
        return Err(StudyError::NonMonotone);
    }
    // working in h / h_0 makes alpha and omega_ext invariant under rescaling of h
    let h0 = h[0];
    let eval = |alpha: f64| {
        let x: Vec<f64> = h.iter().map(|v| (v / h0).powf(alpha)).collect();
        linear_fit(&x, w)
    };
    let steps = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize;
    let mut best = (ALPHA_MIN, eval(ALPHA_MIN));
    for k in 1..=steps {
        let alpha = ALPHA_MIN + k as f64 * ALPHA_STEP;
        let f = eval(alpha);
        if f.2 < best.1 .2 {
            best = (alpha, f);
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (
        (best.0 - ALPHA_STEP).max(ALPHA_MIN),
        (best.0 + ALPHA_STEP).min(ALPHA_MAX),
    );
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1.2 <= f2.2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let (ga, gf) = if f1.2 <= f2.2 { (x1, f1) } else { (x2, f2) };
    if gf.2 < best.1 .2 {
        best = (ga, gf);
    }
    let (alpha, (omega_ext, c_scaled, ssr)) = best;
    Ok(ConvergenceFit {
        omega_ext,
        c: c_scaled / h0.powf(alpha),
        alpha,
        residual: ssr.sqrt(),
    })
}

/// Boundary conditions of the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// `w = 0` on the whole boundary.
    Clamped,
    /// `w = 0` on `y = 0`, traction free elsewhere.
    BottomDirichlet,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Clamped => "clamped",
            Boundary::BottomDirichlet => "bottom-dirichlet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clamped" => Some(Boundary::Clamped),
            "bottom-dirichlet" | "bottom_dirichlet" | "mixed" => Some(Boundary::BottomDirichlet),
            _ => None,
        }
    }
}

/// One discrete problem family: everything except the refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub domain: Domain,
    pub family: MeshFamily,
    pub material: Material,
    pub scheme: Stabilization,
    pub beta: f64,
    pub boundary: Boundary,
    pub modes: usize,
    pub tol: f64,
}

impl Problem {
    /// Clamped unit square, triangles, unit Young modulus and density,
    /// `nu = 0.35`, dofi stabilization with `beta = 1`, ten modes.
    pub fn unit_square() -> Self {
        Problem {
            domain: Domain::Square,
            family: MeshFamily::Triangles,
            material: Material::from_young_poisson(1.0, 0.35, 1.0).unwrap(),
            scheme: Stabilization::DofiDofi,
            beta: 1.0,
            boundary: Boundary::Clamped,
            modes: 10,
            tol: DEFAULT_TOL,
        }
    }

    /// Mesh at refinement `n` with boundary tags applied. Voronoi meshes use
    /// `n^2` cells so that `h ~ 1/n` as for the structured families.
    pub fn mesh(&self, n: usize) -> Result<PolygonalMesh, StudyError> {
        let family = match self.family {
            MeshFamily::Voronoi { seed, .. } => MeshFamily::Voronoi {
                seed,
                cell_count: n * n,
            },
            f => f,
        };
        let mesh = match self.domain {
            Domain::Square => generate_square_mesh(n, family),
            Domain::Lshape => generate_lshape_mesh(n, family),
        }
        .map_err(|source| StudyError::Mesh { n, source })?;
        Ok(match self.boundary {
            Boundary::Clamped => mesh,
            Boundary::BottomDirichlet => mesh.with_bottom_dirichlet(),
        })
    }

    pub fn system(&self, mesh: &PolygonalMesh, n: usize) -> Result<GlobalSystem, StudyError> {
        let bc = match self.boundary {
            Boundary::Clamped => BcKind::ClampedAll,
            Boundary::BottomDirichlet => BcKind::DirichletOnTagged,
        };
        assemble(mesh, &self.material, self.scheme, self.beta, bc)
            .map_err(|source| StudyError::Assembly { n, source })
    }

    /// Mesh, assembled system and spectrum at refinement `n`.
    pub fn solve(&self, n: usize) -> Result<(PolygonalMesh, GlobalSystem, Spectrum), StudyError> {
        let mesh = self.mesh(n)?;
        let system = self.system(&mesh, n)?;
        let spectrum = solve_smallest(&system, self.modes, self.tol).map_err(|source| {
            StudyError::Solve {
                n,
                beta: self.beta,
                source,
            }
        })?;
        Ok((mesh, system, spectrum))
    }

    pub fn frequencies(&self, n: usize) -> Result<Vec<f64>, StudyError> {
        Ok(self.solve(n)?.2.frequencies)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// 1-based index of the frequency.
    pub mode: usize,
    /// One value per refinement, in the order of `n_list`.
    pub frequencies: Vec<f64>,
    pub fit: Option<ConvergenceFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub n_list: Vec<usize>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn h(&self) -> Vec<f64> {
        self.n_list.iter().map(|&n| 1.0 / n as f64).collect()
    }

    /// Header `mode,w_N<n>...,order,extrapolated`; fits need three or more
    /// refinements and are left empty otherwise.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode");
        for n in &self.n_list {
            let _ = write!(s, ",w_N{n}");
        }
        s.push_str(",order,extrapolated\n");
        for r in &self.rows {
            let _ = write!(s, "{}", r.mode);
            for w in &r.frequencies {
                let _ = write!(s, ",{w:.10}");
            }
            match r.fit {
                Some(f) => {
                    let _ = writeln!(s, ",{:.6},{:.10}", f.alpha, f.omega_ext);
                }
                None => s.push_str(",,\n"),
            }
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({ "n_list": self.n_list, "rows": self.rows })
    }
}

/// Solves at every refinement and fits each of the lowest frequencies
/// (tracked by sorted index) with `h = 1/N`.
pub fn convergence_study(problem: &Problem, n_list: &[usize]) -> Result<ConvergenceTable, StudyError> {
    if n_list.is_empty() {
        return Err(StudyError::Invalid("empty refinement list".into()));
    }
    if n_list.windows(2).any(|p| p[1] <= p[0]) {
        return Err(StudyError::NonMonotone);
    }
    let spectra: Vec<Vec<f64>> = n_list
        .iter()
        .map(|&n| problem.frequencies(n))
        .collect::<Result<_, _>>()?;
    let h: Vec<f64> = n_list.iter().map(|&n| 1.0 / n as f64).collect();
    let mut rows = Vec::with_capacity(problem.modes);
    for i in 0..problem.modes {
        let w: Vec<f64> = spectra.iter().map(|s| s[i]).collect();
        let fit = if n_list.len() >= 3 {
            Some(fit_order(&h, &w)?)
        } else {
            None
        };
        rows.push(ConvergenceRow {
            mode: i + 1,
            frequencies: w,
            fit,
        });
    }
    Ok(ConvergenceTable {
        n_list: n_list.to_vec(),
        rows,
    })
}

/// `beta = 4^k` for `k = -3..=3`.
pub fn default_betas() -> Vec<f64> {
    (-3..=3).map(|k| 4f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpuriousEntry {
    pub frequency: f64,
    pub spurious: bool,
    /// Nearest baseline frequency within the match tolerance.
    pub matched: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpuriousCell {
    pub beta: f64,
    pub n: usize,
    pub entries: Vec<SpuriousEntry>,
}

impl SpuriousCell {
    pub fn flag_count(&self) -> usize {
        self.entries.iter().filter(|e| e.spurious).count()
    }

    /// 1-based index of the first flagged frequency.
    pub fn first_flag(&self) -> Option<usize> {
        self.entries.iter().position(|e| e.spurious).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpuriousReport {
    pub betas: Vec<f64>,
    pub n_list: Vec<usize>,
    pub baseline_beta: f64,
    pub match_tol: f64,
    /// Ordered by refinement, then by `beta`.
    pub cells: Vec<SpuriousCell>,
}

impl SpuriousReport {
    pub fn cell(&self, beta: f64, n: usize) -> Option<&SpuriousCell> {
        self.cells.iter().find(|c| c.beta == beta && c.n == n)
    }

    /// One block per refinement: rows are frequency indices, columns are
    /// `beta` values; flagged frequencies carry a trailing `*`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mode");
        for b in &self.betas {
            let _ = write!(s, ",beta_{b}");
        }
        s.push('\n');
        for &n in &self.n_list {
            let cols: Vec<&SpuriousCell> = self
                .betas
                .iter()
                .filter_map(|&b| self.cell(b, n))
                .collect();
            let rows = cols.iter().map(|c| c.entries.len()).max().unwrap_or(0);
            for i in 0..rows {
                let _ = write!(s, "{n},{}", i + 1);
                for c in &cols {
                    match c.entries.get(i) {
                        Some(e) => {
                            let mark = if e.spurious { "*" } else { "" };
                            let _ = write!(s, ",{:.6}{mark}", e.frequency);
                        }
                        None => s.push(','),
                    }
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Flags every frequency farther than `match_tol` (relative to the baseline
/// value) from all baseline frequencies.
pub fn classify(frequencies: &[f64], baseline: &[f64], match_tol: f64) -> Vec<SpuriousEntry> {
    frequencies
        .iter()
        .map(|&w| {
            let nearest = baseline
                .iter()
                .copied()
                .map(|b| ((w - b).abs() / b, b))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match nearest {
                Some((d, b)) if d <= match_tol => SpuriousEntry {
                    frequency: w,
                    spurious: false,
                    matched: Some(b),
                },
                _ => SpuriousEntry {
                    frequency: w,
                    spurious: true,
                    matched: None,
                },
            }
        })
        .collect()
}

/// Solves `problem` for every `beta` and refinement and classifies each
/// spectrum against the `baseline_beta` spectrum at the same refinement.
pub fn spurious_scan(
    problem: &Problem,
    betas: &[f64],
    n_list: &[usize],
    baseline_beta: f64,
    match_tol: f64,
) -> Result<SpuriousReport, StudyError> {
    if betas.is_empty() || n_list.is_empty() {
        return Err(StudyError::Invalid("empty beta or refinement list".into()));
    }
    if match_tol.is_nan() || match_tol < 0.0 {
        return Err(StudyError::Invalid(format!("match tolerance {match_tol}")));
    }
    let run = |beta: f64, n: usize| -> Result<Vec<f64>, StudyError> {
        let p = Problem {
            beta,
            ..problem.clone()
        };
        let w = match p.solve(n) {
            Ok((_, _, s)) => s.frequencies,
            Err(StudyError::Solve {
                source: EigenError::Insufficient { partial, .. },
                ..
            }) => partial.frequencies,
            Err(e) => return Err(e),
        };
        if w.is_empty() {
            return Err(StudyError::EmptySpectrum { n, beta });
        }
        Ok(w)
    };
    let mut cells = Vec::new();
    for &n in n_list {
        let baseline = run(baseline_beta, n)?;
        for &beta in betas {
            let w = if beta == baseline_beta {
                baseline.clone()
            } else {
                run(beta, n)?
            };
            cells.push(SpuriousCell {
                beta,
                n,
                entries: classify(&w, &baseline, match_tol),
            });
        }
    }
    Ok(SpuriousReport {
        betas: betas.to_vec(),
        n_list: n_list.to_vec(),
        baseline_beta,
        match_tol,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_quadratic_model() {
        let h = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        let w: Vec<f64> = h.iter().map(|h| 2.0 + 3.0 * h * h).collect();
        let f = fit_order(&h, &w).unwrap();
        assert!((f.alpha - 2.0).abs() < 1e-6, "{f:?}");
        assert!((f.omega_ext - 2.0).abs() < 1e-9);
        assert!((f.c - 3.0).abs() < 1e-4);
    }

    #[test]
    fn table_row_fit() {
        let h = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0];
        let w = [4.20193, 4.19522, 4.19364, 4.19324];
        let f = fit_order(&h, &w).unwrap();
        // least-squares optimum computed independently: alpha 2.0706, w 4.193129
        assert!((f.alpha - 2.0706).abs() < 1e-3, "{f:?}");
        assert!((f.omega_ext - 4.193129).abs() < 1e-5);
    }

    #[test]
    fn constant_signal() {
        let f = fit_order(&[0.5, 0.25, 0.125], &[4.2, 4.2, 4.2]).unwrap();
        assert_eq!(f.alpha, ALPHA_MIN);
        assert_eq!(f.c, 0.0);
        assert_eq!(f.omega_ext, 4.2);
    }

    #[test]
    fn fit_preconditions() {
        assert!(matches!(
            fit_order(&[0.5, 0.25], &[1.0, 1.0]),
            Err(StudyError::TooFewSamples(2))
        ));
        assert!(matches!(
            fit_order(&[0.5, 0.5, 0.25], &[1.0, 1.0, 1.0]),
            Err(StudyError::NonMonotone)
        ));
        assert!(matches!(
            fit_order(&[0.5, 0.25, 0.125], &[1.0, f64::NAN, 1.0]),
            Err(StudyError::NonFinite)
        ));
    }

    #[test]
    fn classify_self_and_thresholds() {
        let base = [1.0, 2.0, 3.0];
        assert!(classify(&base, &base, 0.1).iter().all(|e| !e.spurious));
        let e = classify(&[1.05, 2.5], &base, 0.1);
        assert_eq!(e[0].matched, Some(1.0));
        assert!(e[1].spurious);
        assert!(classify(&[7.0], &base, f64::INFINITY).iter().all(|e| !e.spurious));
        let zero = classify(&[1.0, 2.0 + 1e-15], &base, 0.0);
        assert!(!zero[0].spurious && zero[1].spurious);
    }

    proptest! {
        #[test]
        fn fit_invariant_under_power_of_two_rescaling(
            w0 in 1.0f64..10.0, c in -5.0f64..5.0, alpha in 0.5f64..3.5, k in -6i32..6
        ) {
            let h = [0.2f64, 0.1, 0.05, 0.025];
            let w: Vec<f64> = h.iter().map(|h| w0 + c * h.powf(alpha)).collect();
            let s = 2f64.powi(k);
            let hs: Vec<f64> = h.iter().map(|v| v * s).collect();
            let a = fit_order(&h, &w).unwrap();
            let b = fit_order(&hs, &w).unwrap();
            prop_assert_eq!(a.alpha, b.alpha);
            prop_assert_eq!(a.omega_ext, b.omega_ext);
            prop_assert!((b.c * s.powf(a.alpha) - a.c).abs() <= 1e-9 * a.c.abs().max(1e-12));
        }

        #[test]
        fn fit_nearly_invariant_under_any_rescaling(
            w0 in 1.0f64..10.0, c in 0.5f64..5.0, alpha in 0.5f64..3.5, s in 0.01f64..100.0
        ) {
            let h = [0.2f64, 0.1, 0.05];
            let w: Vec<f64> = h.iter().map(|h| w0 + c * h.powf(alpha)).collect();
            let hs: Vec<f64> = h.iter().map(|v| v * s).collect();
            let a = fit_order(&h, &w).unwrap();
            let b = fit_order(&hs, &w).unwrap();
            prop_assert!((a.alpha - b.alpha).abs() < 1e-6);
            prop_assert!((a.omega_ext - b.omega_ext).abs() < 1e-9 * w0);
        }

        #[test]
        fn flags_monotone_in_threshold(
            w in proptest::collection::vec(0.5f64..10.0, 1..12),
            base in proptest::collection::vec(0.5f64..10.0, 1..12),
            t1 in 0.0f64..0.5, t2 in 0.0f64..0.5,
        ) {
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let a = classify(&w, &base, lo);
            let b = classify(&w, &base, hi);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(x.spurious || !y.spurious);
            }
        }
    }

    #[test]
    fn study_columns_equal_direct_solves() {
        let p = Problem {
            modes: 3,
            ..Problem::unit_square()
        };
        let t = convergence_study(&p, &[4, 6, 8]).unwrap();
        for (j, &n) in t.n_list.iter().enumerate() {
            let direct = p.frequencies(n).unwrap();
            for r in &t.rows {
                assert_eq!(r.frequencies[j], direct[r.mode - 1]);
            }
        }
        assert_eq!(t, convergence_study(&p, &[4, 6, 8]).unwrap());
        assert!(t.to_csv().starts_with("mode,w_N4,w_N6,w_N8,order,extrapolated\n"));
    }

    #[test]
    fn baseline_column_has_no_flags() {
        let p = Problem {
            boundary: Boundary::BottomDirichlet,
            family: MeshFamily::Squares,
            modes: 6,
            ..Problem::unit_square()
        };
        let r = spurious_scan(&p, &[0.25, 1.0, 4.0], &[4], 1.0, 0.1).unwrap();
        assert_eq!(r.cell(1.0, 4).unwrap().flag_count(), 0);
        let loose = spurious_scan(&p, &[0.25, 1.0, 4.0], &[4], 1.0, f64::INFINITY).unwrap();
        assert!(loose.cells.iter().all(|c| c.flag_count() == 0));
        assert_eq!(r.to_csv().lines().count(), 1 + 6);
    }
}
