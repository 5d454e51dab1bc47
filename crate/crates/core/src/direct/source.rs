use std::fmt;
use std::sync::Arc;

use crate::error::{CbfError, Result};
use crate::fields::{divergence, Grid, ScalarField, VectorField};

type PointFn = Arc<dyn Fn([f64; 3], f64) -> f64 + Send + Sync>;
type ForcingFn = Arc<dyn Fn(&Grid, f64) -> VectorField + Send + Sync>;

/// Time-dependent scalar factor `g(x, t)` of the source.
#[derive(Clone)]
pub enum TimeProfile {
    /// Snapshots at increasing times, linearly interpolated in between.
    /// Rates default to the piecewise slopes when not supplied.
    Sampled {
        times: Vec<f64>,
        values: Vec<ScalarField>,
        rates: Option<Vec<ScalarField>>,
    },
    /// Closed-form sampler for `g` and `g_t`.
    Function { label: String, g: PointFn, g_t: PointFn },
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Sampled { times, .. } => write!(f, "Sampled({} times)", times.len()),
            TimeProfile::Function { label, .. } => write!(f, "Function({label})"),
        }
    }
}

impl TimeProfile {
    pub fn function(
        label: impl Into<String>,
        g: impl Fn([f64; 3], f64) -> f64 + Send + Sync + 'static,
        g_t: impl Fn([f64; 3], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TimeProfile::Function {
            label: label.into(),
            g: Arc::new(g),
            g_t: Arc::new(g_t),
        }
    }

    /// `g = a + b t`, uniform in space.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::function(format!("{a} + {b} t"), move |_, t| a + b * t, move |_, _| b)
    }

    pub fn constant(c: f64) -> Self {
        Self::affine(c, 0.0)
    }

    pub fn sampled(times: Vec<f64>, values: Vec<ScalarField>, rates: Option<Vec<ScalarField>>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(CbfError::Data(format!(
                "g needs at least two samples with matching times, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CbfError::Data("g sample times must increase strictly".into()));
        }
        if let Some(r) = &rates {
            if r.len() != times.len() {
                return Err(CbfError::Data("g_t needs one sample per g sample".into()));
            }
        }
        let grid = *values[0].grid();
        for v in values.iter().chain(rates.iter().flatten()) {
            grid.check_same(v.grid())?;
        }
        Ok(TimeProfile::Sampled { times, values, rates })
    }

    /// Multiply `g` (and `g_t`) by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            TimeProfile::Sampled { times, values, rates } => TimeProfile::Sampled {
                times: times.clone(),
                values: values.iter().map(|v| v * c).collect(),
                rates: rates.as_ref().map(|r| r.iter().map(|v| v * c).collect()),
            },
            TimeProfile::Function { label, g, g_t } => {
                let (g, g_t) = (g.clone(), g_t.clone());
                TimeProfile::Function {
                    label: format!("{c} * ({label})"),
                    g: Arc::new(move |x, t| c * g(x, t)),
                    g_t: Arc::new(move |x, t| c * g_t(x, t)),
                }
            }
        }
    }

    pub fn label(&self) -> String {
        format!("{self:?}")
    }

    /// Covered time interval.
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            TimeProfile::Sampled { times, .. } => {
                let tol = 1e-12 * (1.0 + t1.abs());
                times[0] <= t0 + tol && *times.last().expect("non-empty") >= t1 - tol
            }
            TimeProfile::Function { .. } => true,
        }
    }

    fn bracket(times: &[f64], t: f64) -> (usize, f64) {
        let last = times.len() - 1;
        let k = match times.iter().position(|&s| s > t) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => last - 1,
        };
        let w = ((t - times[k]) / (times[k + 1] - times[k])).clamp(0.0, 1.0);
        (k, w)
    }

    pub fn at(&self, grid: &Grid, t: f64) -> ScalarField {
        match self {
            TimeProfile::Sampled { times, values, .. } => {
                let (k, w) = Self::bracket(times, t);
                let mut out = &values[k] * (1.0 - w);
                out.axpy(w, &values[k + 1]);
                out
            }
            TimeProfile::Function { g, .. } => ScalarField::from_fn(*grid, |x| g(x, t)),
        }
    }

    pub fn rate_at(&self, grid: &Grid, t: f64) -> ScalarField {
        match self {
            TimeProfile::Sampled { times, values, rates } => {
                let (k, w) = Self::bracket(times, t);
                match rates {
                    Some(r) => {
                        let mut out = &r[k] * (1.0 - w);
                        out.axpy(w, &r[k + 1]);
                        out
                    }
                    None => &(&values[k + 1] - &values[k]) * (1.0 / (times[k + 1] - times[k])),
                }
            }
            TimeProfile::Function { g_t, .. } => ScalarField::from_fn(*grid, |x| g_t(x, t)),
        }
    }

    /// Largest `|g|` and `|g_t|` over the cells at the given times.
    pub fn sup_norms(&self, grid: &Grid, times: &[f64]) -> (f64, f64) {
        let mut g_sup = 0.0_f64;
        let mut gt_sup = 0.0_f64;
        for &t in times {
            g_sup = g_sup.max(self.at(grid, t).max_abs());
            gt_sup = gt_sup.max(self.rate_at(grid, t).max_abs());
        }
        (g_sup, gt_sup)
    }
}

/// Known additive forcing `F_aux(x, t)` acting alongside `f g`; used by
/// manufactured solutions whose residual is not of product form.
#[derive(Clone)]
pub struct AuxForcing {
    pub label: String,
    eval: ForcingFn,
}

impl fmt::Debug for AuxForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AuxForcing({})", self.label)
    }
}

impl AuxForcing {
    pub fn new(label: impl Into<String>, eval: impl Fn(&Grid, f64) -> VectorField + Send + Sync + 'static) -> Self {
        AuxForcing {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn at(&self, grid: &Grid, t: f64) -> VectorField {
        (self.eval)(grid, t)
    }
}

/// Total body force `F = f g + F_aux`.
#[derive(Clone, Debug)]
pub struct SourceProfile {
    pub f: VectorField,
    pub g: TimeProfile,
    pub aux: Option<AuxForcing>,
}

/// Relative divergence tolerance for admissible spatial factors.
pub const SOURCE_DIV_TOL: f64 = 1e-8;

impl SourceProfile {
    pub fn new(f: VectorField, g: TimeProfile) -> Result<Self> {
        let s = SourceProfile { f, g, aux: None };
        s.check_f()?;
        Ok(s)
    }

    pub fn with_aux(mut self, aux: AuxForcing) -> Self {
        self.aux = Some(aux);
        self
    }

    /// Same `g` and auxiliary forcing, different spatial factor.
    pub fn with_f(&self, f: VectorField) -> Self {
        SourceProfile {
            f,
            g: self.g.clone(),
            aux: self.aux.clone(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    fn check_f(&self) -> Result<()> {
        let grid = self.f.grid();
        let scale = self.f.max_abs() / grid.h();
        let div = divergence(&self.f).max_abs();
        if div > SOURCE_DIV_TOL * scale.max(1.0) {
            return Err(CbfError::Data(format!(
                "source factor f is not divergence-free (max |div f| = {div:.3e})"
            )));
        }
        Ok(())
    }

    pub fn forcing(&self, t: f64) -> VectorField {
        let grid = *self.grid();
        let mut out = self.f.mul_scalar_field(&self.g.at(&grid, t));
        if let Some(aux) = &self.aux {
            out += &aux.at(&grid, t);
        }
        out
    }

    pub fn aux_at(&self, t: f64) -> VectorField {
        match &self.aux {
            Some(a) => a.at(self.grid(), t),
            None => VectorField::zeros(*self.grid()),
        }
    }
}
