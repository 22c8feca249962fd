//! Hydrodynamic eigenvalue branches: Taylor seeds, Newton refinement, branch
//! continuation in the wave number, critical wave numbers, and winding-number
//! root counting.

use crate::complexfun::Cx;
use crate::spectral::{
    longitudinal_factor, longitudinal_factor_derivative, shear_condition,
    shear_condition_derivative, sigma_closed, SpectralError, SpectralParams,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// k_crit(shear) * tau = sqrt(pi/2); the minimal critical wave number.
pub const KCRIT_SHEAR_TAU: f64 = 1.2533141373155003;

#[derive(Debug, Error)]
pub enum ModesError {
    #[error("Newton did not converge after {iterations} iterations (last |target| = {residual:.3e} at {last})")]
    NonConvergence { iterations: usize, residual: f64, last: Cx },
    #[error("iterate escaped the strip at {0}; branch presumed terminated")]
    StripEscape(Cx),
    #[error("continuation failed at k = {k}: {source}")]
    ContinuationFailed { k: f64, source: Box<ModesError> },
    #[error("spectral function smaller than 1e-8 on the counting contour at {0}")]
    ContourThroughZero(Cx),
    #[error("winding number {0:.4} is not close to an integer")]
    NonIntegerWinding(f64),
    #[error("mode {label:?} violates its realness/ordering invariant: {value}")]
    InvariantViolation { label: BranchLabel, value: Cx },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// The four spectral branches. The acoustic pair is complex conjugate;
/// `AcousticPlus` is the member with positive imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchLabel {
    Diffusion,
    Shear,
    AcousticPlus,
    AcousticMinus,
}

/// The five hydrodynamic eigenvalues at one (k, tau), shear counted twice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub lambda_diff: Cx,
    pub lambda_shear: Cx,
    /// The acoustic eigenvalue with Im > 0; its conjugate is the fifth mode.
    pub lambda_ac: Cx,
    pub k: f64,
    pub tau: f64,
    pub shear_multiplicity: usize,
}

impl ModeSet {
    /// Validates realness of diffusion/shear, sign of the acoustic imaginary
    /// part, and strip membership, then folds the negligible imaginary parts.
    pub fn new(
        lambda_diff: Cx,
        lambda_shear: Cx,
        lambda_ac: Cx,
        params: &SpectralParams,
    ) -> Result<Self, ModesError> {
        let tol = 1e-11;
        for (label, lam) in [
            (BranchLabel::Diffusion, lambda_diff),
            (BranchLabel::Shear, lambda_shear),
        ] {
            if lam.im.abs() > tol * (1.0 + lam.norm()) {
                return Err(ModesError::InvariantViolation { label, value: lam });
            }
        }
        if lambda_ac.im <= 0.0 {
            return Err(ModesError::InvariantViolation {
                label: BranchLabel::AcousticPlus,
                value: lambda_ac,
            });
        }
        for lam in [lambda_diff, lambda_shear, lambda_ac] {
            if lam.re <= -1.0 / params.tau || lam.re >= 0.0 {
                return Err(ModesError::InvariantViolation {
                    label: BranchLabel::Diffusion,
                    value: lam,
                });
            }
        }
        Ok(ModeSet {
            lambda_diff: Cx::new(lambda_diff.re, 0.0),
            lambda_shear: Cx::new(lambda_shear.re, 0.0),
            lambda_ac,
            k: params.k,
            tau: params.tau,
            shear_multiplicity: 2,
        })
    }

    pub fn lambda(&self, label: BranchLabel) -> Cx {
        match label {
            BranchLabel::Diffusion => self.lambda_diff,
            BranchLabel::Shear => self.lambda_shear,
            BranchLabel::AcousticPlus => self.lambda_ac,
            BranchLabel::AcousticMinus => self.lambda_ac.conj(),
        }
    }

    /// All five eigenvalues in the order (diff, ac, ac*, shear, shear).
    pub fn all(&self) -> [Cx; 5] {
        [
            self.lambda_diff,
            self.lambda_ac,
            self.lambda_ac.conj(),
            self.lambda_shear,
            self.lambda_shear,
        ]
    }

    pub fn max_re(&self) -> f64 {
        self.lambda_diff
            .re
            .max(self.lambda_shear.re)
            .max(self.lambda_ac.re)
    }
}

/// Small-k polynomial seeds for each branch.
pub fn taylor_seed(label: BranchLabel, k: f64, tau: f64) -> Cx {
    let k2 = k * k;
    let k3 = k2 * k;
    let k4 = k2 * k2;
    let t3 = tau * tau * tau;
    match label {
        BranchLabel::Diffusion => Cx::new(-tau * k2 + 1.8 * t3 * k4, 0.0),
        BranchLabel::Shear => Cx::new(-tau * k2 + t3 * k4, 0.0),
        BranchLabel::AcousticPlus | BranchLabel::AcousticMinus => {
            let im = (5.0f64 / 3.0).sqrt() * k + 7.0 * tau * tau / (6.0 * 15.0f64.sqrt()) * k3;
            let lam = Cx::new(-tau * k2 + 62.0 / 45.0 * t3 * k4, im);
            if label == BranchLabel::AcousticMinus {
                lam.conj()
            } else {
                lam
            }
        }
    }
}

/// Newton refinement of one branch root. Shear refines the shear condition;
/// the other branches refine the longitudinal factor. Derivatives come from
/// the Z differential equation.
pub fn refine_root(
    label: BranchLabel,
    guess: Cx,
    params: &SpectralParams,
) -> Result<Cx, ModesError> {
    let target = |lam: Cx| -> Result<Cx, SpectralError> {
        match label {
            BranchLabel::Shear => shear_condition(lam, params),
            _ => longitudinal_factor(lam, params),
        }
    };
    let deriv = |lam: Cx| -> Result<Cx, SpectralError> {
        match label {
            BranchLabel::Shear => shear_condition_derivative(lam, params),
            _ => longitudinal_factor_derivative(lam, params),
        }
    };
    // drive Newton to the evaluation floor (quadratic steps, then stagnation),
    // and only then verify the convergence contract
    let tol_resid = 1e-12 * residual_scale(label, params);
    let mut lam = guess;
    let mut prev_step = f64::INFINITY;
    let mut last_step = f64::INFINITY;
    let mut iterations = 0usize;
    for it in 0..60 {
        iterations = it + 1;
        let f = match target(lam) {
            Ok(f) => f,
            Err(SpectralError::OutsideStrip(l, _)) => return Err(ModesError::StripEscape(l)),
            Err(e) => return Err(e.into()),
        };
        if f.norm() == 0.0 {
            last_step = 0.0;
            break;
        }
        let d = deriv(lam)?;
        let step = f / d;
        let next = lam - step;
        if next.re <= -1.0 / params.tau || next.re > 0.5 {
            return Err(ModesError::StripEscape(next));
        }
        lam = next;
        last_step = step.norm();
        if last_step <= 1e-15 * (1.0 + lam.norm()) {
            break;
        }
        if last_step <= 1e-8 * (1.0 + lam.norm()) && last_step >= 0.5 * prev_step {
            break; // rounding floor reached; the contract check below decides
        }
        prev_step = last_step;
    }
    let resid = target(lam).map_err(ModesError::from)?.norm();
    if resid <= tol_resid && last_step <= 1e-10 * (1.0 + lam.norm()) {
        Ok(lam)
    } else {
        Err(ModesError::NonConvergence { iterations, residual: resid, last: lam })
    }
}

/// Absolute-residual scale: the shear condition is O(1); the longitudinal
/// factor grows like |zeta|^4 (k tau)^2 ~ 1/k^2 at small k, so an absolute
/// 1e-12 would sit below evaluation noise there.
fn residual_scale(label: BranchLabel, params: &SpectralParams) -> f64 {
    match label {
        BranchLabel::Shear => 1.0,
        _ => {
            let zeta_mag = 1.0 / (params.k * params.tau);
            1.0f64.max(zeta_mag * zeta_mag)
        }
    }
}

/// Solve all branches at one (k, tau) from Taylor seeds, with continuation
/// from smaller k when the seeds alone are out of reach.
pub fn solve_modes(params: &SpectralParams) -> Result<ModeSet, ModesError> {
    let kt = params.k * params.tau;
    if kt < 0.35 {
        let d = refine_root(
            BranchLabel::Diffusion,
            taylor_seed(BranchLabel::Diffusion, params.k, params.tau),
            params,
        )?;
        let s = refine_root(
            BranchLabel::Shear,
            taylor_seed(BranchLabel::Shear, params.k, params.tau),
            params,
        )?;
        let a = refine_root(
            BranchLabel::AcousticPlus,
            taylor_seed(BranchLabel::AcousticPlus, params.k, params.tau),
            params,
        )?;
        return ModeSet::new(d, s, a, params);
    }
    // walk k upward from a seedable wave number
    let mut k = 0.3 / params.tau;
    let p = SpectralParams::new(k, params.tau).unwrap();
    let mut d = refine_root(BranchLabel::Diffusion, taylor_seed(BranchLabel::Diffusion, k, params.tau), &p)?;
    let mut s = refine_root(BranchLabel::Shear, taylor_seed(BranchLabel::Shear, k, params.tau), &p)?;
    let mut a = refine_root(BranchLabel::AcousticPlus, taylor_seed(BranchLabel::AcousticPlus, k, params.tau), &p)?;
    let mut dk = 0.05 / params.tau;
    while k < params.k {
        let kn = (k + dk).min(params.k);
        let p = SpectralParams::new(kn, params.tau).unwrap();
        let attempt = (|| -> Result<(Cx, Cx, Cx), ModesError> {
            Ok((
                refine_root(BranchLabel::Diffusion, d, &p)?,
                refine_root(BranchLabel::Shear, s, &p)?,
                refine_root(BranchLabel::AcousticPlus, a, &p)?,
            ))
        })();
        match attempt {
            Ok((dn, sn, an)) => {
                k = kn;
                d = dn;
                s = sn;
                a = an;
            }
            Err(e) => {
                dk /= 2.0;
                if dk < 1e-9 / params.tau {
                    return Err(ModesError::ContinuationFailed { k: kn, source: Box::new(e) });
                }
            }
        }
    }
    ModeSet::new(d, s, a, params)
}

/// One branch continued in k with a secant predictor and adaptive steps.
#[derive(Debug, Clone)]
pub struct SingleTrace {
    pub label: BranchLabel,
    pub tau: f64,
    pub samples: Vec<(f64, Cx)>,
    /// Bracket (last alive k, first dead k) when the branch terminated.
    pub termination: Option<(f64, f64)>,
}

fn branch_dead(lam: Cx, tau: f64) -> bool {
    lam.re + 1.0 / tau < 1e-6 / tau
}

/// Continuation of a single branch. Steps halve on corrector failure, double
/// after five consecutive successes (capped at the requested dk).
pub fn trace_single(
    label: BranchLabel,
    tau: f64,
    k_max: f64,
    dk_user: f64,
) -> Result<SingleTrace, ModesError> {
    assert!(dk_user > 0.0 && k_max > 0.0);
    let k0 = (0.02 / tau).min(dk_user).min(k_max / 2.0);
    let p0 = SpectralParams::new(k0, tau).unwrap();
    let lam0 = refine_root(label, taylor_seed(label, k0, tau), &p0)?;
    let mut samples = vec![(k0, lam0)];
    let mut dk = dk_user.min(0.05 / tau);
    let mut successes = 0usize;
    let mut failures = 0usize;
    let mut termination = None;
    loop {
        let (k_prev, lam_prev) = *samples.last().unwrap();
        if k_prev >= k_max {
            break;
        }
        let kn = (k_prev + dk).min(k_max);
        let guess = match samples.len() {
            1 => lam_prev,
            _ => {
                let (k_pp, lam_pp) = samples[samples.len() - 2];
                lam_prev + (lam_prev - lam_pp) * ((kn - k_prev) / (k_prev - k_pp))
            }
        };
        // corrector must stay near the prediction, else Newton has hopped
        // onto a different branch of the longitudinal factor; the Taylor-seed
        // motion supplies the scale before a secant history exists
        let seed_motion =
            (taylor_seed(label, kn, tau) - taylor_seed(label, k_prev, tau)).norm();
        let allowed_jump =
            8.0 * (guess - lam_prev).norm() + 4.0 * seed_motion + 1e-3 * (1.0 + lam_prev.norm());
        let p = SpectralParams::new(kn, tau).unwrap();
        match refine_root(label, guess, &p) {
            Ok(lam) if !branch_dead(lam, tau) && (lam - guess).norm() <= allowed_jump => {
                samples.push((kn, lam));
                successes += 1;
                failures = 0;
                if successes >= 5 {
                    dk = (dk * 2.0).min(dk_user);
                    successes = 0;
                }
            }
            outcome => {
                successes = 0;
                failures += 1;
                dk /= 2.0;
                if dk < 1e-10 * (1.0 + k_prev) || failures >= 3 {
                    match outcome {
                        Ok(_)
                        | Err(ModesError::StripEscape(_))
                        | Err(ModesError::NonConvergence { .. }) => {
                            termination = Some((k_prev, kn));
                            break;
                        }
                        Err(e) => {
                            return Err(ModesError::ContinuationFailed {
                                k: kn,
                                source: Box::new(e),
                            })
                        }
                    }
                }
            }
        }
    }
    Ok(SingleTrace { label, tau, samples, termination })
}

/// Full mode-set curve in k.
#[derive(Debug, Clone)]
pub struct BranchCurve {
    pub tau: f64,
    pub samples: Vec<(f64, ModeSet)>,
}

/// Traces all branches together, stopping at `k_max`, at the labeled branch's
/// termination, or at the first wave number where any of the five modes dies
/// (a full ModeSet no longer exists there). The shear branch dies first, so
/// in practice the curve ends by min(k_max, sqrt(pi/2)/tau).
pub fn trace_branch(
    label: BranchLabel,
    tau: f64,
    k_max: f64,
    dk: f64,
) -> Result<BranchCurve, ModesError> {
    let _ = label;
    let shear_end = KCRIT_SHEAR_TAU / tau;
    let stop = k_max.min(shear_end * (1.0 - 1e-9));
    let mut samples = Vec::new();
    let mut k = (0.02 / tau).min(dk).min(stop / 2.0);
    loop {
        let p = SpectralParams::new(k, tau).unwrap();
        match solve_modes(&p) {
            Ok(ms) => samples.push((k, ms)),
            Err(ModesError::StripEscape(_)) | Err(ModesError::NonConvergence { .. }) => break,
            Err(ModesError::ContinuationFailed { .. }) => break,
            Err(e) => return Err(e),
        }
        if (stop - k) < 1e-12 {
            break;
        }
        k = (k + dk).min(stop);
    }
    Ok(BranchCurve { tau, samples })
}

/// Critical wave number. Shear is analytic, sqrt(pi/2)/tau; the other
/// branches are located by tracing to termination and bisecting the bracket
/// to 1e-8 relative.
pub fn critical_wavenumber(label: BranchLabel, tau: f64) -> Result<f64, ModesError> {
    match label {
        BranchLabel::Shear => Ok(KCRIT_SHEAR_TAU / tau),
        _ => critical_wavenumber_traced(label, tau),
    }
}

/// Branch-termination route for any label (for shear it cross-checks the
/// analytic value numerically).
pub fn critical_wavenumber_traced(label: BranchLabel, tau: f64) -> Result<f64, ModesError> {
    let trace = trace_single(label, tau, 2.0 / tau, 0.02 / tau)?;
    let (mut alive, mut dead) = trace.termination.ok_or(ModesError::ContinuationFailed {
        k: 2.0 / tau,
        source: Box::new(ModesError::StripEscape(Cx::new(0.0, 0.0))),
    })?;
    let tail: Vec<(f64, Cx)> = trace.samples.iter().rev().take(2).cloned().collect();
    let extrapolate = |k: f64| -> Cx {
        if tail.len() == 2 {
            let (k1, l1) = tail[0];
            let (k2, l2) = tail[1];
            l1 + (l1 - l2) * ((k - k1) / (k1 - k2))
        } else {
            tail[0].1
        }
    };
    let mut lam_alive = tail[0].1;
    while (dead - alive) > 1e-8 * alive {
        let mid = 0.5 * (alive + dead);
        let p = SpectralParams::new(mid, tau).unwrap();
        match refine_root(label, extrapolate(mid), &p) {
            Ok(lam) if !branch_dead(lam, tau) => {
                alive = mid;
                lam_alive = lam;
            }
            _ => match refine_root(label, lam_alive, &p) {
                Ok(lam) if !branch_dead(lam, tau) => {
                    alive = mid;
                    lam_alive = lam;
                }
                _ => dead = mid,
            },
        }
    }
    Ok(0.5 * (alive + dead))
}

/// Number of zeros of the spectral function (with multiplicity) inside the
/// rectangle {-(1-margin)/tau < Re < -margin/tau, |Im| <= 2k}, by the
/// argument principle along an adaptively refined contour.
pub fn count_roots(params: &SpectralParams, margin: f64) -> Result<usize, ModesError> {
    count_roots_in_rectangle(params, -(1.0 - margin) / params.tau, -margin / params.tau, 2.0 * params.k)
}

/// Argument-principle zero count over an arbitrary rectangle in the strip.
pub fn count_roots_in_rectangle(
    params: &SpectralParams,
    re_lo: f64,
    re_hi: f64,
    im_max: f64,
) -> Result<usize, ModesError> {
    let left = re_lo;
    let right = re_hi;
    let top = im_max;
    let corners = [
        Cx::new(left, -top),
        Cx::new(right, -top),
        Cx::new(right, top),
        Cx::new(left, top),
    ];
    let sigma = |lam: Cx| -> Result<Cx, ModesError> {
        let v = sigma_closed(lam, params)?;
        if v.norm() < 1e-8 {
            return Err(ModesError::ContourThroughZero(lam));
        }
        Ok(v)
    };
    // pre-sample densely so no full phase wrap can hide between neighbors,
    // then refine adaptively until each increment is under pi/2
    let presample = 128usize;
    let mut total = 0.0f64;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let mut stack: Vec<(f64, f64, Cx, Cx)> = Vec::new();
        let mut prev = sigma(a)?;
        for s in 1..=presample {
            let t = s as f64 / presample as f64;
            let f = sigma(a + (b - a) * t)?;
            stack.push(((s - 1) as f64 / presample as f64, t, prev, f));
            prev = f;
        }
        while let Some((t0, t1, f0, f1)) = stack.pop() {
            let dphi = (f1 / f0).arg();
            if dphi.abs() < std::f64::consts::FRAC_PI_2 || (t1 - t0) < 1e-12 {
                total += dphi;
            } else {
                let tm = 0.5 * (t0 + t1);
                let fm = sigma(a + (b - a) * tm)?;
                stack.push((t0, tm, f0, fm));
                stack.push((tm, t1, fm, f1));
            }
        }
    }
    let winding = total / std::f64::consts::TAU;
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.01 || rounded < -0.1 {
        return Err(ModesError::NonIntegerWinding(winding));
    }
    Ok(rounded as usize)
}
