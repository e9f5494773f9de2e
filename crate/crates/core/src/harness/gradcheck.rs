//! Central finite-difference verification of every analytic gradient.
//!
//! The error for one configuration is the ∞-norm relative error
//! `max_i |a_i − f_i| / max_j max(|a_j|, |f_j|)` between the analytic
//! gradient `a` and the central difference `f`; the worst coordinate is
//! reported alongside it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{draw_sketch, gaussian_matrix, Matrix, RngStream};
use crate::network::{backward, cross_entropy, forward, MlpModel};
use crate::regularizers::{
    strong_directions, strong_sigreg_with_directions, weak_sigreg_with_sketch, QuadratureGrid, SigregConfig,
    Variant,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckTarget {
    Weak,
    Strong,
    CrossEntropy,
    /// Cross-entropy plus weak SIGReg on the penultimate layer, w.r.t. all
    /// model parameters.
    ModelWeak,
    ModelStrong,
}

impl CheckTarget {
    pub const ALL: [CheckTarget; 5] = [
        CheckTarget::Weak,
        CheckTarget::Strong,
        CheckTarget::CrossEntropy,
        CheckTarget::ModelWeak,
        CheckTarget::ModelStrong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckTarget::Weak => "weak",
            CheckTarget::Strong => "strong",
            CheckTarget::CrossEntropy => "cross_entropy",
            CheckTarget::ModelWeak => "model_weak",
            CheckTarget::ModelStrong => "model_strong",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CheckTarget::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

/// One shape/seed cell of the sweep. For model targets `n` is the batch size,
/// `c` the hidden width and `k` the sketch dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeCase {
    pub n: usize,
    pub c: usize,
    pub k: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSpec {
    pub targets: Vec<CheckTarget>,
    pub cases: Vec<ShapeCase>,
    /// Cases for the whole-model targets (4 dense layers).
    pub model_cases: Vec<ShapeCase>,
    pub step: f64,
    pub tolerance: f64,
    /// Regularizer weight in the whole-model loss.
    pub alpha: f64,
    /// Negative control: perturbs one analytic gradient entry so the check
    /// must fail.
    pub inject_fault: bool,
}

impl Default for GradcheckSpec {
    /// 20 seeded cases cycling through `N ∈ {4, 32}`, `C ∈ {8, 128}`,
    /// `K ∈ {4, 16}`, plus 4-layer width-16 model checks.
    fn default() -> Self {
        let mut cases = Vec::with_capacity(20);
        for s in 0..20u64 {
            let i = s as usize;
            cases.push(ShapeCase {
                n: [4, 32][i % 2],
                c: [8, 128][(i / 2) % 2],
                k: [4, 16][(i / 4) % 2],
                seed: 1000 + s,
            });
        }
        let model_cases = (0..4u64)
            .map(|s| ShapeCase {
                n: 16,
                c: 16,
                k: [4, 8][s as usize % 2],
                seed: 2000 + s,
            })
            .collect();
        GradcheckSpec {
            targets: CheckTarget::ALL.to_vec(),
            cases,
            model_cases,
            step: 1e-5,
            tolerance: 1e-5,
            alpha: 0.5,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub target: CheckTarget,
    pub case: ShapeCase,
    pub max_rel_error: f64,
    pub worst_coordinate: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub step: f64,
    pub results: Vec<CheckResult>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        !self.results.is_empty() && self.results.iter().all(|r| r.passed)
    }

    pub fn worst(&self) -> Option<&CheckResult> {
        self.results.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>4} {:>5} {:>4} {:>6} {:>12} {:>8} {:>14} {:>14}  result",
            "target", "N", "C", "K", "seed", "max_rel_err", "worst", "analytic", "numeric"
        )?;
        for r in &self.results {
            writeln!(
                f,
                "{:<14} {:>4} {:>5} {:>4} {:>6} {:>12.3e} {:>8} {:>14.6e} {:>14.6e}  {}",
                r.target.as_str(),
                r.case.n,
                r.case.c,
                r.case.k,
                r.case.seed,
                r.max_rel_error,
                r.worst_coordinate,
                r.analytic,
                r.numeric,
                if r.passed { "PASS" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "overall: {} ({} checks, tolerance {:e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.results.len(),
            self.tolerance
        )
    }
}

/// Compares `analytic` against central differences of `loss` over `params`.
/// Returns `(max_rel_error, worst index, analytic, numeric)`.
pub fn compare_with_finite_differences(
    params: &[f64],
    analytic: &[f64],
    step: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> (f64, usize, f64, f64) {
    let mut work = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + step;
        let plus = loss(&work);
        work[i] = orig - step;
        let minus = loss(&work);
        work[i] = orig;
        numeric.push((plus - minus) / (2.0 * step));
    }
    let scale = analytic
        .iter()
        .chain(&numeric)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = (0.0f64, 0usize);
    for (i, (a, f)) in analytic.iter().zip(&numeric).enumerate() {
        let d = (a - f).abs();
        if d > worst.0 || d.is_nan() {
            worst = (d, i);
        }
    }
    let rel = if scale > 0.0 { worst.0 / scale } else { worst.0 };
    (rel, worst.1, analytic[worst.1], numeric[worst.1])
}

fn corrupt(grad: &mut [f64]) {
    if let Some((i, _)) = grad
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    {
        grad[i] = grad[i] * 1.01 + 1e-3;
    }
}

fn check_batch_target(target: CheckTarget, case: ShapeCase, spec: &GradcheckSpec) -> Result<CheckResult> {
    let mut rng = RngStream::new(case.seed);
    let z = gaussian_matrix(&mut rng, case.n, case.c, 1.0);
    let (n, c) = z.shape();
    let to_matrix = |p: &[f64]| Matrix::from_vec(n, c, p.to_vec()).expect("shape");
    let errs = match target {
        CheckTarget::Weak => {
            let sketch = if c > case.k {
                Some(draw_sketch(&mut rng, case.k, c)?)
            } else {
                None
            };
            let mut a = weak_sigreg_with_sketch(&z, sketch.as_ref())?.grad.into_vec();
            if spec.inject_fault {
                corrupt(&mut a);
            }
            compare_with_finite_differences(z.as_slice(), &a, spec.step, |p| {
                weak_sigreg_with_sketch(&to_matrix(p), sketch.as_ref()).map_or(f64::NAN, |l| l.value)
            })
        }
        CheckTarget::Strong => {
            let cfg = SigregConfig::strong();
            let grid = QuadratureGrid::gaussian_trapezoid(cfg.integration_points, cfg.t_max)?;
            let dirs = strong_directions(&mut rng, case.k, c);
            let mut a = strong_sigreg_with_directions(&z, &dirs, &grid)?.grad.into_vec();
            if spec.inject_fault {
                corrupt(&mut a);
            }
            compare_with_finite_differences(z.as_slice(), &a, spec.step, |p| {
                strong_sigreg_with_directions(&to_matrix(p), &dirs, &grid).map_or(f64::NAN, |l| l.value)
            })
        }
        CheckTarget::CrossEntropy => {
            let labels: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
            let logits = z.scale(2.0);
            let mut a = cross_entropy(&logits, &labels)?.grad.into_vec();
            if spec.inject_fault {
                corrupt(&mut a);
            }
            compare_with_finite_differences(logits.as_slice(), &a, spec.step, |p| {
                cross_entropy(&to_matrix(p), &labels).map_or(f64::NAN, |l| l.value)
            })
        }
        CheckTarget::ModelWeak | CheckTarget::ModelStrong => unreachable!("model targets handled separately"),
    };
    Ok(result(target, case, errs, spec.tolerance))
}

/// Total loss `CE + α·SIGReg(penultimate)` of a 4-layer model and its analytic
/// parameter gradient, with the sketch held fixed.
fn check_model_target(target: CheckTarget, case: ShapeCase, spec: &GradcheckSpec) -> Result<CheckResult> {
    let variant = if target == CheckTarget::ModelWeak {
        Variant::Weak
    } else {
        Variant::Strong
    };
    let (input, classes) = (8, 4);
    let rng = RngStream::new(case.seed);
    let widths = [input, case.c, case.c, case.c, classes];
    let model = MlpModel::he_init(&widths, &rng.substream("init"))?;
    let mut data_rng = rng.substream("data");
    let x = gaussian_matrix(&mut data_rng, case.n, input, 1.0);
    let labels: Vec<usize> = (0..case.n).map(|_| data_rng.below(classes)).collect();
    let mut sketch_rng = rng.substream("sketch");
    let sketch = if case.c > case.k {
        Some(draw_sketch(&mut sketch_rng, case.k, case.c)?)
    } else {
        None
    };
    let grid = QuadratureGrid::gaussian_trapezoid(17, 5.0)?;
    let dirs = strong_directions(&mut sketch_rng, case.k, case.c);
    let attach = model.penultimate();
    let alpha = spec.alpha;

    let reg = |h: &Matrix| match variant {
        Variant::Weak => weak_sigreg_with_sketch(h, sketch.as_ref()),
        Variant::Strong => strong_sigreg_with_directions(h, &dirs, &grid),
    };
    let total_loss = |m: &MlpModel| -> Result<f64> {
        let trace = forward(m, &x)?;
        Ok(cross_entropy(trace.logits(), &labels)?.value + alpha * reg(trace.hidden(attach)?)?.value)
    };

    let trace = forward(&model, &x)?;
    let task = cross_entropy(trace.logits(), &labels)?;
    let mut reg_grad = reg(trace.hidden(attach)?)?.grad;
    reg_grad.scale_in_place(alpha);
    let grads = backward(&model, &trace, &task.grad, &[(attach, &reg_grad)])?;
    let mut analytic: Vec<f64> = grads.values().collect();
    if spec.inject_fault {
        corrupt(&mut analytic);
    }
    let params = model.parameters();
    let mut probe = model.clone();
    let errs = compare_with_finite_differences(&params, &analytic, spec.step, |p| {
        for (i, v) in p.iter().enumerate() {
            *probe.parameter_mut(i) = *v;
        }
        total_loss(&probe).unwrap_or(f64::NAN)
    });
    Ok(result(target, case, errs, spec.tolerance))
}

fn result(target: CheckTarget, case: ShapeCase, errs: (f64, usize, f64, f64), tolerance: f64) -> CheckResult {
    let (max_rel_error, worst_coordinate, analytic, numeric) = errs;
    CheckResult {
        target,
        case,
        max_rel_error,
        worst_coordinate,
        analytic,
        numeric,
        passed: max_rel_error < tolerance,
    }
}

pub fn run_gradcheck(spec: &GradcheckSpec) -> Result<GradcheckReport> {
    let mut results = Vec::new();
    for &target in &spec.targets {
        match target {
            CheckTarget::ModelWeak | CheckTarget::ModelStrong => {
                for &case in &spec.model_cases {
                    results.push(check_model_target(target, case, spec)?);
                }
            }
            _ => {
                for &case in &spec.cases {
                    results.push(check_batch_target(target, case, spec)?);
                }
            }
        }
    }
    Ok(GradcheckReport {
        tolerance: spec.tolerance,
        step: spec.step,
        results,
    })
}
