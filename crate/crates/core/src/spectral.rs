//! Resolvent solves on the imaginary axis, resolvent-norm estimates on the
//! complement of the null vector, and shift-invert eigenvalue searches for
//! the pencil `K v = λ G v`.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FsiError, Result};
use crate::fields::StateVector;
use crate::generator::OperatorPair;
use crate::linalg::{axpy, dot, norm2, CsrMatrix, Factorization, C64, ONE, ZERO};

/// Shifts below this magnitude are treated as the (singular) origin.
const ORIGIN: f64 = 1e-8;

pub const EIGEN_TOL: f64 = 1e-8;
pub const RESOLVENT_TOL: f64 = 1e-8;
pub const POWER_TOL: f64 = 1e-4;
pub const POWER_MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventSample {
    pub beta: f64,
    pub norm_estimate: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub samples: Vec<ResolventSample>,
    pub sup_estimate: f64,
    /// Beta at which the supremum is attained.
    pub sup_beta: f64,
    pub h: f64,
    pub beta_max: f64,
    pub beta_spacing: f64,
    /// Set when at least one sample failed to converge.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    /// Shift actually used (may differ from the request after a re-shift).
    pub shift: C64,
    pub eigenvalues: Vec<C64>,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<C64>>,
}

/// Factored `iβG − K` together with whatever is needed to apply the
/// resolvent and its energy adjoint on the null-vector complement.
pub struct ResolventOperator<'a> {
    pair: &'a OperatorPair,
    pub beta: f64,
    lu: Factorization,
    /// `(iβG − K)ᴴ` factorization, only kept separately at β = 0 where
    /// both systems are singular and need their own pinned row.
    adjoint_lu: Option<Factorization>,
}

impl<'a> ResolventOperator<'a> {
    pub fn new(pair: &'a OperatorPair, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(FsiError::Parameters(format!("beta must be finite, got {beta}")));
        }
        let z = C64::new(0.0, beta);
        if beta.abs() < ORIGIN {
            // −K is singular with null vector Φ₀ on both sides; Φ₀ has a unit
            // pressure at reduced index 0, so that row can be pinned.
            let lu = Factorization::new_pinned(z, &pair.g, -ONE, &pair.k, 0)?;
            let kt = pair.k.transpose();
            let adjoint_lu = Factorization::new_pinned(z.conj(), &pair.g, -ONE, &kt, 0)?;
            Ok(Self {
                pair,
                beta,
                lu,
                adjoint_lu: Some(adjoint_lu),
            })
        } else {
            let lu = Factorization::new(z, &pair.g, -ONE, &pair.k)?;
            Ok(Self {
                pair,
                beta,
                lu,
                adjoint_lu: None,
            })
        }
    }

    /// `P (iβG − K)⁻¹ G x` on reduced coordinates.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = self.lu.solve(&self.pair.g.matvec(x))?;
        self.pair.project(&mut y);
        Ok(y)
    }

    /// Energy adjoint `P (iβG − K)⁻ᴴ G P y`.
    pub fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        let mut py = y.to_vec();
        self.pair.project(&mut py);
        let rhs = self.pair.g.matvec(&py);
        let mut x = match &self.adjoint_lu {
            Some(lu) => lu.solve(&rhs)?,
            None => self.lu.solve_adjoint(&rhs)?,
        };
        self.pair.project(&mut x);
        Ok(x)
    }

    /// One step of iterative refinement of `x ≈ P(iβG − K)⁻¹ G r`.
    pub fn refine(&self, x: &mut [C64], r: &[C64]) -> Result<()> {
        let z = C64::new(0.0, self.beta);
        let mut res = self.pair.g.matvec(r);
        let mut ax = self.pair.g.matvec(x);
        ax.iter_mut().for_each(|v| *v *= z);
        axpy(-ONE, &self.pair.k.matvec(x), &mut ax);
        axpy(-ONE, &ax, &mut res);
        let mut dx = self.lu.solve(&res)?;
        self.pair.project(&mut dx);
        axpy(ONE, &dx, x);
        Ok(())
    }

    /// Relative residual `‖(iβG − K)x − G r‖ / ‖G r‖` (Euclidean).
    pub fn residual(&self, x: &[C64], r: &[C64]) -> f64 {
        let gr = self.pair.g.matvec(r);
        let den = norm2(&gr);
        if den == 0.0 {
            return norm2(x);
        }
        let z = C64::new(0.0, self.beta);
        let mut res = self.pair.g.matvec(x);
        res.iter_mut().for_each(|v| *v *= z);
        axpy(-ONE, &self.pair.k.matvec(x), &mut res);
        axpy(-ONE, &gr, &mut res);
        norm2(&res) / den
    }
}

/// `‖(iβG − K)⁻¹ G Φ₀‖_G / ‖Φ₀‖_G` without projection, a lower bound for
/// the unrestricted resolvent norm. It equals `1/|β|` and so blows up at
/// the origin, which is why sweeps work on the complement.
pub fn null_direction_gain(pair: &OperatorPair, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta != 0.0) {
        return Err(FsiError::Parameters(format!("beta must be finite and nonzero, got {beta}")));
    }
    let lu = Factorization::new(C64::new(0.0, beta), &pair.g, -ONE, &pair.k)?;
    let phi0 = pair.null_reduced();
    let y = lu.solve(&pair.g.matvec(phi0))?;
    Ok(pair.norm(&y) / pair.norm(phi0))
}

/// Solves `(iβG − K)Φ = G Φ*` after projecting `Φ*` onto the complement,
/// and projects the result.
pub fn solve_resolvent(pair: &OperatorPair, beta: f64, rhs: &StateVector) -> Result<StateVector> {
    let op = ResolventOperator::new(pair, beta)?;
    let mut r = pair.restrict(rhs)?;
    pair.project(&mut r);
    let mut x = op.apply(&r)?;
    for _ in 0..2 {
        op.refine(&mut x, &r)?;
    }
    let res = op.residual(&x, &r);
    if res > RESOLVENT_TOL {
        return Err(FsiError::Solver(format!(
            "resolvent residual {res:.3e} at beta = {beta} exceeds {RESOLVENT_TOL:e}"
        )));
    }
    Ok(pair.extend(&x))
}

/// Deterministic real start vector for power iterations; being real makes
/// the estimates at `β` and `−β` conjugate-identical.
fn start_vector(pair: &OperatorPair) -> Vec<C64> {
    let mut x: Vec<C64> = (0..pair.dim())
        .map(|i| {
            let t = i as f64;
            C64::new(1.0 + 0.5 * (0.37 * t).sin() + 0.25 * (1.91 * t).cos(), 0.0)
        })
        .collect();
    pair.project(&mut x);
    let nrm = pair.norm(&x);
    x.iter_mut().for_each(|v| *v /= nrm);
    x
}

/// Largest energy-norm gain of the resolvent on the null-vector complement,
/// by power iteration on `R* R`.
pub fn resolvent_norm(pair: &OperatorPair, beta: f64, tol: f64) -> Result<ResolventSample> {
    let op = ResolventOperator::new(pair, beta)?;
    resolvent_norm_with(&op, tol, POWER_MAX_ITER)
}

pub fn resolvent_norm_with(op: &ResolventOperator<'_>, tol: f64, max_iter: usize) -> Result<ResolventSample> {
    let pair = op.pair;
    let mut x = start_vector(pair);
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        let y = op.apply(&x)?;
        let s = pair.norm(&y);
        let z = op.apply_adjoint(&y)?;
        let zn = pair.norm(&z);
        if zn == 0.0 || !zn.is_finite() {
            return Err(FsiError::Solver(format!("power iteration collapsed at beta = {}", op.beta)));
        }
        // ‖R*R x‖ ≥ ‖R x‖² for unit x, so this bound is never worse.
        let estimate = zn.sqrt().max(s);
        let converged = (estimate - sigma).abs() <= tol * estimate;
        sigma = estimate;
        if converged {
            return Ok(ResolventSample {
                beta: op.beta,
                norm_estimate: sigma,
                iterations: it,
                converged: true,
            });
        }
        x = z.into_iter().map(|v| v / zn).collect();
    }
    Ok(ResolventSample {
        beta: op.beta,
        norm_estimate: sigma,
        iterations: max_iter,
        converged: false,
    })
}

/// Nonnegative sample frequencies: a uniform grid on `[0, β_max]` plus the
/// mandatory points `{0, ½, 1, 2}` that fall inside the range.
pub fn sweep_betas(beta_max: f64, n_samples: usize) -> Vec<f64> {
    let mut betas: Vec<f64> = (0..n_samples)
        .map(|i| beta_max * i as f64 / (n_samples - 1) as f64)
        .collect();
    for b in [0.0, 0.5, 1.0, 2.0] {
        if b <= beta_max {
            betas.push(b);
        }
    }
    betas.sort_by(f64::total_cmp);
    betas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * beta_max.max(1.0));
    betas
}

/// Resolvent-norm samples over `[−β_max, β_max]`; negative frequencies are
/// filled in by conjugation symmetry.
pub fn resolvent_sweep(pair: &OperatorPair, beta_max: f64, n_samples: usize) -> Result<SweepResult> {
    resolvent_sweep_with(pair, beta_max, n_samples, POWER_TOL)
}

/// [`resolvent_sweep`] with an explicit relative tolerance for the power
/// iterations.
pub fn resolvent_sweep_with(pair: &OperatorPair, beta_max: f64, n_samples: usize, tol: f64) -> Result<SweepResult> {
    if !(beta_max.is_finite() && beta_max > 0.0) {
        return Err(FsiError::Parameters(format!("beta_max must be positive, got {beta_max}")));
    }
    if n_samples < 3 {
        return Err(FsiError::Parameters(format!("need at least 3 samples, got {n_samples}")));
    }
    let betas = sweep_betas(beta_max, n_samples);
    let positive: Vec<ResolventSample> = betas
        .par_iter()
        .map(|&b| resolvent_norm(pair, b, tol))
        .collect::<Result<_>>()?;

    let mut samples: Vec<ResolventSample> = positive
        .iter()
        .filter(|s| s.beta > 0.0)
        .map(|s| ResolventSample { beta: -s.beta, ..*s })
        .collect();
    samples.extend(positive.iter().copied());
    samples.sort_by(|a, b| a.beta.total_cmp(&b.beta));

    let best = samples
        .iter()
        .filter(|s| s.converged)
        .max_by(|a, b| a.norm_estimate.total_cmp(&b.norm_estimate));
    let (sup_estimate, sup_beta) = best.map_or((f64::NAN, f64::NAN), |s| (s.norm_estimate, s.beta));
    Ok(SweepResult {
        partial: samples.iter().any(|s| !s.converged),
        samples,
        sup_estimate,
        sup_beta,
        h: pair.grid.hx.max(pair.grid.hy),
        beta_max,
        beta_spacing: beta_max / (n_samples - 1) as f64,
    })
}

impl SweepResult {
    /// Samples with `|β| > cutoff`.
    pub fn tail(&self, cutoff: f64) -> impl Iterator<Item = &ResolventSample> {
        self.samples.iter().filter(move |s| s.beta.abs() > cutoff)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,norm_estimate,iterations,converged\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::output::fmt_f64(s.beta),
                crate::output::fmt_f64(s.norm_estimate),
                s.iterations,
                s.converged
            ));
        }
        out
    }
}

impl EigenReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_lambda,im_lambda,residual\n");
        for (l, r) in self.eigenvalues.iter().zip(&self.residuals) {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::output::fmt_f64(l.re),
                crate::output::fmt_f64(l.im),
                crate::output::fmt_f64(*r)
            ));
        }
        out
    }
}

/// Options for the shift-invert Arnoldi iteration.
#[derive(Debug, Clone, Copy)]
pub struct ArnoldiOptions {
    pub tol: f64,
    /// Restrict the iteration to the complement of the null vector.
    pub complement: bool,
    pub max_basis: usize,
    /// When the basis is exhausted, return the converged subset of the
    /// wanted Ritz values instead of failing.
    pub partial: bool,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            tol: EIGEN_TOL,
            complement: false,
            max_basis: 240,
            partial: false,
        }
    }
}

/// The `k` eigenvalues of `K v = λ G v` nearest `shift`.
pub fn eigs_near(pair: &OperatorPair, shift: C64, k: usize) -> Result<EigenReport> {
    eigs_near_with(pair, shift, k, ArnoldiOptions::default())
}

pub fn eigs_near_with(pair: &OperatorPair, shift: C64, k: usize, opts: ArnoldiOptions) -> Result<EigenReport> {
    if k == 0 {
        return Ok(EigenReport {
            shift,
            eigenvalues: Vec::new(),
            residuals: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let k = k.min(pair.dim().saturating_sub(2));
    let g_lu = Factorization::new(ONE, &pair.g, ZERO, &pair.zero())?;

    // The origin is an eigenvalue of the unrestricted pencil; step off it.
    // On the complement the tiny shift only inflates the null direction,
    // which the projection removes.
    let mut sigma = shift;
    if sigma.norm() < ORIGIN {
        sigma = C64::new(1e-6, 0.0);
    }
    let mut last_err = None;
    for attempt in 0..3 {
        match Factorization::new(sigma, &pair.g, -ONE, &pair.k) {
            Ok(lu) => match arnoldi(pair, &lu, &g_lu, sigma, k, opts) {
                Ok(r) => return Ok(r),
                Err(e @ FsiError::Solver(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            },
            Err(e) => last_err = Some(e),
        }
        let bump = 1e-5 * (1.0 + sigma.norm()) * (attempt + 1) as f64;
        sigma += C64::new(bump, 0.5 * bump);
    }
    Err(last_err.unwrap_or_else(|| FsiError::Eigen("shift-invert failed".into())))
}

fn arnoldi(
    pair: &OperatorPair,
    lu: &Factorization,
    g_lu: &Factorization,
    sigma: C64,
    k: usize,
    opts: ArnoldiOptions,
) -> Result<EigenReport> {
    let n = pair.dim();
    let m_max = opts.max_basis.min(n - 1).max(k + 2);
    let op = |x: &[C64]| -> Result<Vec<C64>> {
        let mut y = lu.solve(&pair.g.matvec(x))?;
        if opts.complement {
            pair.project(&mut y);
        }
        Ok(y)
    };

    let mut v0 = start_vector_complex(n);
    if opts.complement {
        pair.project(&mut v0);
    }
    let nrm = pair.norm(&v0);
    v0.iter_mut().for_each(|v| *v /= nrm);
    let mut basis: Vec<Vec<C64>> = vec![v0.clone()];
    let mut gbasis: Vec<Vec<C64>> = vec![pair.g.matvec(&v0)];
    let mut h = vec![vec![ZERO; m_max]; m_max + 1];

    let check_every = 10usize;
    let mut next_check = (2 * k + 10).min(m_max);
    for j in 0..m_max {
        let mut w = op(&basis[j])?;
        // two passes of classical Gram–Schmidt in the G inner product
        for _ in 0..2 {
            for (i, gv) in gbasis.iter().enumerate() {
                let c = dot(&w, gv);
                h[i][j] += c;
                axpy(-c, &basis[i], &mut w);
            }
        }
        let beta = pair.norm(&w);
        h[j + 1][j] = C64::new(beta, 0.0);
        let m = j + 1;
        let breakdown = beta <= 1e-14 * h.iter().take(m).map(|r| r[j].norm()).fold(0.0, f64::max);
        if m >= next_check || m == m_max || breakdown {
            next_check = (m + check_every).min(m_max);
            let last = breakdown || m == m_max;
            if let Some(report) = ritz(pair, g_lu, sigma, k, &basis, &h, m, opts.tol, last && opts.partial)? {
                return Ok(report);
            }
            if breakdown || m == m_max {
                break;
            }
        }
        w.iter_mut().for_each(|v| *v /= beta);
        gbasis.push(pair.g.matvec(&w));
        basis.push(w);
    }
    Err(FsiError::Eigen(format!(
        "shift-invert Arnoldi stagnated at shift {sigma} with basis size {}",
        basis.len()
    )))
}

fn start_vector_complex(n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            C64::new(1.0 + (0.61 * t).sin(), 0.5 * (1.37 * t).cos())
        })
        .collect()
}

/// Ritz extraction; returns a report once the `k` Ritz values nearest the
/// shift all have true residuals below `tol`.
#[allow(clippy::too_many_arguments)]
fn ritz(
    pair: &OperatorPair,
    g_lu: &Factorization,
    sigma: C64,
    k: usize,
    basis: &[Vec<C64>],
    h: &[Vec<C64>],
    m: usize,
    tol: f64,
    partial: bool,
) -> Result<Option<EigenReport>> {
    let hm = Mat::<C64>::from_fn(m, m, |i, j| h[i][j]);
    let evd = hm
        .eigen()
        .map_err(|e| FsiError::Eigen(format!("dense Hessenberg eigensolver failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..m).filter(|&i| s[i].norm() > 0.0).collect();
    // largest |θ| ⇔ nearest λ
    order.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()));
    if order.len() < k {
        return Ok(None);
    }
    // cheap filter with the Arnoldi residual |h_{m+1,m}| |y_m| / |θ|
    let hsub = h[m][m - 1].norm();
    for &i in order.iter().take(k) {
        let ynorm: f64 = (0..m).map(|r| u[(r, i)].norm_sqr()).sum::<f64>().sqrt();
        let est = hsub * u[(m - 1, i)].norm() / ynorm / s[i].norm();
        let lambda = sigma - ONE / s[i];
        if est > tol * lambda.norm().max(1.0) * 10.0 && !partial {
            return Ok(None);
        }
    }

    let mut eigenvalues = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let lambda = sigma - ONE / s[i];
        let mut v = vec![ZERO; pair.dim()];
        for (r, b) in basis.iter().take(m).enumerate() {
            axpy(u[(r, i)], b, &mut v);
        }
        let res = pencil_residual(pair, g_lu, lambda, &v)?;
        if res > tol {
            if partial {
                continue;
            }
            return Ok(None);
        }
        let nrm = pair.norm(&v);
        v.iter_mut().for_each(|x| *x /= nrm);
        eigenvalues.push(lambda);
        residuals.push(res);
        vectors.push(v);
    }
    if eigenvalues.is_empty() {
        return Ok(None);
    }
    Ok(Some(EigenReport {
        shift: sigma,
        eigenvalues,
        residuals,
        vectors,
    }))
}

/// `‖G⁻¹(K − λG)v‖_G / (‖v‖_G · max(1, |λ|))`.
pub fn pencil_residual(pair: &OperatorPair, g_lu: &Factorization, lambda: C64, v: &[C64]) -> Result<f64> {
    let mut r = pair.k.matvec(v);
    let gv = pair.g.matvec(v);
    axpy(-lambda, &gv, &mut r);
    let y = g_lu.solve(&r)?;
    Ok(pair.norm(&y) / (pair.norm(v) * lambda.norm().max(1.0)))
}

/// Settings of the imaginary-axis scan used for the spectral abscissa.
#[derive(Debug, Clone, Copy)]
pub struct AbscissaScan {
    pub beta_max: f64,
    pub step: f64,
    pub per_shift: usize,
}

impl Default for AbscissaScan {
    fn default() -> Self {
        Self {
            beta_max: 60.0,
            step: 2.5,
            per_shift: 8,
        }
    }
}

/// Collects eigenvalues of the complement pencil near the imaginary axis
/// and returns them sorted by decreasing real part.
pub fn least_damped(pair: &OperatorPair, k: usize, scan: AbscissaScan) -> Result<Vec<C64>> {
    let n_shift = (scan.beta_max / scan.step).ceil() as usize + 1;
    // neighbouring shifts overlap, so a shift may settle for what converged
    let opts = ArnoldiOptions {
        complement: true,
        partial: true,
        ..Default::default()
    };
    let reports: Vec<EigenReport> = (0..n_shift)
        .into_par_iter()
        .map(|i| {
            let beta = (i as f64 * scan.step).min(scan.beta_max);
            eigs_near_with(pair, C64::new(0.0, beta), scan.per_shift, opts)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<C64> = Vec::new();
    for r in reports {
        for l in r.eigenvalues {
            // mirror into both half planes; the pencil is real
            for cand in [l, l.conj()] {
                if !all.iter().any(|x| (x - cand).norm() <= 1e-6 * cand.norm().max(1.0)) {
                    all.push(cand);
                }
            }
        }
    }
    all.sort_by(|a, b| b.re.total_cmp(&a.re));
    all.truncate(k.max(1));
    Ok(all)
}

/// Largest real part among the `k` least-damped eigenvalues of the pencil
/// restricted to the complement of the null vector. Errors if it is not
/// strictly negative.
pub fn spectral_abscissa_complement(pair: &OperatorPair, k: usize) -> Result<f64> {
    spectral_abscissa_with(pair, k, AbscissaScan::default())
}

pub fn spectral_abscissa_with(pair: &OperatorPair, k: usize, scan: AbscissaScan) -> Result<f64> {
    let eigs = least_damped(pair, k, scan)?;
    let a = eigs.first().map(|l| l.re).ok_or_else(|| FsiError::Eigen("no eigenvalues found".into()))?;
    if a >= 0.0 {
        return Err(FsiError::Spectrum(format!(
            "eigenvalue with nonnegative real part {a:.3e} on the complement"
        )));
    }
    Ok(a)
}

/// All eigenvalues of `G⁻¹K` by a dense solve; intended for coarse grids.
pub fn dense_spectrum(pair: &OperatorPair) -> Result<Vec<C64>> {
    let n = pair.dim();
    let g_lu = Factorization::new(ONE, &pair.g, ZERO, &pair.zero())?;
    let kt = dense_columns(&pair.k);
    let cols: Vec<Vec<C64>> = kt
        .into_par_iter()
        .map(|c| g_lu.solve(&c))
        .collect::<Result<_>>()?;
    let a = Mat::<C64>::from_fn(n, n, |i, j| cols[j][i]);
    let ev = a
        .eigenvalues()
        .map_err(|e| FsiError::Eigen(format!("dense eigensolver failed: {e:?}")))?;
    Ok(ev)
}

fn dense_columns(a: &CsrMatrix) -> Vec<Vec<C64>> {
    let mut cols = vec![vec![ZERO; a.nrows()]; a.ncols()];
    for (r, c, v) in a.iter() {
        cols[c][r] = C64::new(v, 0.0);
    }
    cols
}
