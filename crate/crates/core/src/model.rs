//! Problem data: periodic diffusion coefficients, reaction terms, grids on
//! the truncated line (or one period), discrete profiles and initial data.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    NonPositivePeriod(f64),
    /// The diffusion coefficient is not strictly positive at some point.
    NonPositiveCoefficient { x: f64, value: f64 },
    ThresholdOutOfRange(f64),
    /// Modulation amplitude would change the sign structure of the reaction.
    ModulationTooLarge(f64),
    BadIntervals(&'static str),
    EmptySeries,
    BadGrid(&'static str),
    /// Heaviside crossing closer than one period to the domain boundary.
    CrossingOutsideDomain { crossing_x: f64 },
    ProfileLength { expected: usize, got: usize },
    NonFiniteValue { index: usize },
    BadDecayRate(f64),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NonPositivePeriod(l) => write!(f, "period must be positive, got {l}"),
            ModelError::NonPositiveCoefficient { x, value } => {
                write!(f, "diffusion coefficient {value} is not positive at x = {x}")
            }
            ModelError::ThresholdOutOfRange(t) => write!(f, "threshold {t} is not in (0, 1)"),
            ModelError::ModulationTooLarge(e) => {
                write!(f, "modulation amplitude {e} must satisfy |eps| < 1")
            }
            ModelError::BadIntervals(why) => write!(f, "invalid interval stack: {why}"),
            ModelError::EmptySeries => write!(f, "series nonlinearity needs at least one power"),
            ModelError::BadGrid(why) => write!(f, "invalid grid: {why}"),
            ModelError::BadDecayRate(l) => write!(f, "decay rate must be positive, got {l}"),
            ModelError::CrossingOutsideDomain { crossing_x } => write!(
                f,
                "crossing point {crossing_x} is less than one period from a boundary"
            ),
            ModelError::ProfileLength { expected, got } => {
                write!(f, "profile has {got} values, grid has {expected} nodes")
            }
            ModelError::NonFiniteValue { index } => write!(f, "non-finite value at node {index}"),
        }
    }
}

impl core::error::Error for ModelError {}

/// Reduces `x` into `[0, period)`.
fn reduce(x: f64, period: f64) -> f64 {
    let r = x - period * libm::floor(x / period);
    if r >= period || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// `mean + sum_k cos_k cos(2 pi k x / L) + sin_k sin(2 pi k x / L)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigSeries {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(value: f64) -> Self {
        Self { mean: value, cos: Vec::new(), sin: Vec::new() }
    }

    /// Parses the flat layout `[a0, a1, b1, a2, b2, ...]`.
    pub fn from_flat(coeffs: &[f64]) -> Result<Self, ModelError> {
        let (&mean, rest) = coeffs.split_first().ok_or(ModelError::EmptySeries)?;
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for pair in rest.chunks(2) {
            cos.push(pair[0]);
            sin.push(pair.get(1).copied().unwrap_or(0.0));
        }
        Ok(Self { mean, cos, sin })
    }

    fn eval_reduced(&self, r: f64, period: f64) -> f64 {
        let theta = 2.0 * PI * r / period;
        let mut s = self.mean;
        for (k, (c, sn)) in self.cos.iter().zip(&self.sin).enumerate() {
            let arg = (k + 1) as f64 * theta;
            s += c * libm::cos(arg) + sn * libm::sin(arg);
        }
        s
    }

    fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CoefficientRepr {
    Series(TrigSeries),
    /// Uniform samples over one period, periodic Catmull-Rom interpolation.
    Samples(Vec<f64>),
}

/// Positive, L-periodic diffusion coefficient `a(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCoefficient {
    period: f64,
    repr: CoefficientRepr,
}

impl PeriodicCoefficient {
    pub fn constant(period: f64, value: f64) -> Result<Self, ModelError> {
        Self::series(period, TrigSeries::constant(value))
    }

    pub fn series(period: f64, series: TrigSeries) -> Result<Self, ModelError> {
        let c = Self { period: check_period(period)?, repr: CoefficientRepr::Series(series) };
        c.check_positive()?;
        Ok(c)
    }

    pub fn samples(period: f64, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() < 4 {
            return Err(ModelError::BadGrid("need at least 4 coefficient samples"));
        }
        let c = Self { period: check_period(period)?, repr: CoefficientRepr::Samples(values) };
        c.check_positive()?;
        Ok(c)
    }

    fn check_positive(&self) -> Result<(), ModelError> {
        let probes = match &self.repr {
            CoefficientRepr::Series(s) => 64 * (s.cos.len() + 1),
            CoefficientRepr::Samples(v) => 8 * v.len(),
        };
        for j in 0..probes {
            let x = self.period * j as f64 / probes as f64;
            let value = self.eval(x);
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositiveCoefficient { x, value });
            }
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = reduce(x, self.period);
        match &self.repr {
            CoefficientRepr::Series(s) => s.eval_reduced(r, self.period),
            CoefficientRepr::Samples(v) => {
                let n = v.len();
                let pos = r / self.period * n as f64;
                let i = (libm::floor(pos) as usize).min(n - 1);
                let t = pos - i as f64;
                let p0 = v[(i + n - 1) % n];
                let p1 = v[i];
                let p2 = v[(i + 1) % n];
                let p3 = v[(i + 2) % n];
                let t2 = t * t;
                let t3 = t2 * t;
                0.5 * (2.0 * p1
                    + (p2 - p0) * t
                    + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
                    + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.repr {
            CoefficientRepr::Series(s) => s.is_constant(),
            CoefficientRepr::Samples(v) => v.iter().all(|x| *x == v[0]),
        }
    }

    /// Upper bound of `a` from dense sampling.
    pub fn max_value(&self) -> f64 {
        (0..1024)
            .map(|j| self.eval(self.period * j as f64 / 1024.0))
            .fold(f64::MIN, f64::max)
    }

    /// `x -> a(-x)`.
    pub fn reversed(&self) -> Self {
        match &self.repr {
            CoefficientRepr::Series(s) => Self {
                period: self.period,
                repr: CoefficientRepr::Series(TrigSeries {
                    mean: s.mean,
                    cos: s.cos.clone(),
                    sin: s.sin.iter().map(|v| -v).collect(),
                }),
            },
            CoefficientRepr::Samples(v) => {
                let n = v.len();
                let flipped = (0..n).map(|i| v[(n - i) % n]).collect();
                Self { period: self.period, repr: CoefficientRepr::Samples(flipped) }
            }
        }
    }

    /// Harmonic means of node values at the faces `i + 1/2`, one per phase.
    pub fn face_values(&self, cells: usize) -> Vec<f64> {
        let dx = self.period / cells as f64;
        let nodes: Vec<f64> = (0..cells).map(|i| self.eval(i as f64 * dx)).collect();
        (0..cells)
            .map(|i| {
                let (l, r) = (nodes[i], nodes[(i + 1) % cells]);
                2.0 * l * r / (l + r)
            })
            .collect()
    }
}

fn check_period(period: f64) -> Result<f64, ModelError> {
    if period > 0.0 && period.is_finite() {
        Ok(period)
    } else {
        Err(ModelError::NonPositivePeriod(period))
    }
}

/// Shape of one piece of a stacked multistable reaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IntervalShape {
    /// `A w (1 - w) (w - theta)` in the rescaled variable `w`.
    Bistable { theta: f64 },
    /// `A w (1 - w)`.
    Monostable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalSpec {
    pub lower: f64,
    pub upper: f64,
    pub shape: IntervalShape,
    pub amplitude: f64,
}

impl IntervalSpec {
    fn height(&self) -> f64 {
        self.upper - self.lower
    }

    /// Speed of the single front crossing this interval for `a = 1` and no
    /// modulation: `sqrt(A/h) (1 - 2 theta) / sqrt 2` for a bistable piece,
    /// the linear minimal speed `2 sqrt(A/h)` for a monostable one.
    pub fn homogeneous_speed(&self) -> f64 {
        let k = self.amplitude / self.height();
        match self.shape {
            IntervalShape::Bistable { theta } => libm::sqrt(k) * (1.0 - 2.0 * theta) / libm::sqrt(2.0),
            IntervalShape::Monostable => 2.0 * libm::sqrt(k),
        }
    }
}

/// Structured description of a reaction term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Preset {
    /// `u (1 - u)`.
    Kpp,
    /// `u (1 - u) (u - theta)`.
    Bistable { theta: f64 },
    /// `(u - theta)(1 - u)` above `theta`, zero below, C1-smoothed at `theta`.
    Ignition { theta: f64 },
    /// Piecewise cubics/quadratics on contiguous intervals starting at 0.
    Stacked(Vec<IntervalSpec>),
    /// `f = 0`.
    Zero,
    /// `sum_{j >= 1} c_j(x) u^j`; entry `j-1` is the flat series of `c_j`.
    Series(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearitySpec {
    pub preset: Preset,
    /// Multiplies the reaction by `1 + eps sin(2 pi x / L)`.
    pub modulation_eps: f64,
    pub period: f64,
    pub lipschitz_hint: Option<f64>,
}

impl NonlinearitySpec {
    pub fn homogeneous(preset: Preset) -> Self {
        Self { preset, modulation_eps: 0.0, period: 1.0, lipschitz_hint: None }
    }
}

/// Width of the C1 transition used by the ignition preset.
pub const IGNITION_SMOOTHING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Zero,
    Logistic,
    Cubic { theta: f64 },
    Ignition { theta: f64 },
    Stacked(Vec<IntervalSpec>),
}

impl Shape {
    fn eval(&self, u: f64) -> (f64, f64) {
        match self {
            Shape::Zero => (0.0, 0.0),
            Shape::Logistic => (u * (1.0 - u), 1.0 - 2.0 * u),
            Shape::Cubic { theta } => cubic(u, *theta),
            Shape::Ignition { theta } => ignition(u, *theta),
            Shape::Stacked(pieces) => stacked(pieces, u),
        }
    }
}

fn cubic(u: f64, theta: f64) -> (f64, f64) {
    let f = u * (1.0 - u) * (u - theta);
    let df = -3.0 * u * u + 2.0 * (1.0 + theta) * u - theta;
    (f, df)
}

fn ignition(u: f64, theta: f64) -> (f64, f64) {
    let w = IGNITION_SMOOTHING;
    if u <= theta {
        return (0.0, 0.0);
    }
    let raw = |v: f64| ((v - theta) * (1.0 - v), 1.0 + theta - 2.0 * v);
    if u >= theta + w {
        return raw(u);
    }
    // cubic Hermite from (theta, 0, 0) to the raw branch at theta + w
    let (f1, d1) = raw(theta + w);
    let s = (u - theta) / w;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    let dh01 = -6.0 * s * s + 6.0 * s;
    let dh11 = 3.0 * s * s - 2.0 * s;
    (h01 * f1 + h11 * w * d1, dh01 * f1 / w + dh11 * d1)
}

fn piece(p: &IntervalSpec, u: f64) -> (f64, f64) {
    let h = p.height();
    let w = (u - p.lower) / h;
    let (g, dg) = match p.shape {
        IntervalShape::Monostable => (w * (1.0 - w), 1.0 - 2.0 * w),
        IntervalShape::Bistable { theta } => cubic(w, theta),
    };
    (p.amplitude * g, p.amplitude * dg / h)
}

fn stacked(pieces: &[IntervalSpec], u: f64) -> (f64, f64) {
    let last = pieces.len() - 1;
    for (i, p) in pieces.iter().enumerate() {
        if u == p.upper && i < last {
            // breakpoint: report the larger one-sided slope
            let (f, dl) = piece(p, u);
            let (_, dr) = piece(&pieces[i + 1], u);
            return (f, dl.max(dr));
        }
        if u < p.upper || i == last {
            return piece(p, u);
        }
    }
    piece(&pieces[last], u)
}

#[derive(Debug, Clone, PartialEq)]
enum Form {
    /// `m(x) r(u)` with `m` a trigonometric series.
    Separable { shape: Shape, modulation: TrigSeries },
    /// `sum_j c_j(x) u^j`, `j = 1..`.
    Polynomial(Vec<TrigSeries>),
    /// `-inner(-x, top - u)`.
    Reversed { inner: Box<Form>, top: f64 },
}

impl Form {
    fn factor_count(&self) -> usize {
        match self {
            Form::Separable { .. } => 1,
            Form::Polynomial(c) => c.len(),
            Form::Reversed { inner, .. } => inner.factor_count(),
        }
    }

    fn factors_at(&self, x: f64, period: f64, out: &mut Vec<f64>) {
        match self {
            Form::Separable { modulation, .. } => {
                out.push(modulation.eval_reduced(reduce(x, period), period))
            }
            Form::Polynomial(c) => {
                let r = reduce(x, period);
                out.extend(c.iter().map(|s| s.eval_reduced(r, period)));
            }
            Form::Reversed { inner, .. } => inner.factors_at(-x, period, out),
        }
    }

    fn eval(&self, factors: &[f64], u: f64) -> (f64, f64) {
        match self {
            Form::Separable { shape, .. } => {
                let (f, df) = shape.eval(u);
                (factors[0] * f, factors[0] * df)
            }
            Form::Polynomial(_) => {
                // Horner on sum_j c_j u^j
                let mut f = 0.0;
                let mut df = 0.0;
                for (j, c) in factors.iter().enumerate().rev() {
                    df = df * u + (j + 1) as f64 * c;
                    f = (f + c) * u;
                }
                (f, df)
            }
            Form::Reversed { inner, top } => {
                let (f, df) = inner.eval(factors, top - u);
                (-f, df)
            }
        }
    }

    fn is_homogeneous(&self) -> bool {
        match self {
            Form::Separable { modulation, .. } => modulation.is_constant(),
            Form::Polynomial(c) => c.iter().all(TrigSeries::is_constant),
            Form::Reversed { inner, .. } => inner.is_homogeneous(),
        }
    }
}

/// Reaction term `f(x, u)` with its derivative in `u`; `f(x, 0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    period: f64,
    form: Form,
    pub kind_tag: String,
    pub lipschitz_bound_hint: Option<f64>,
    /// Interval stack of a stacked preset, kept for speed oracles.
    pub intervals: Option<Vec<IntervalSpec>>,
}

impl Nonlinearity {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn f(&self, x: f64, u: f64) -> f64 {
        self.eval(x, u).0
    }

    pub fn df_du(&self, x: f64, u: f64) -> f64 {
        self.eval(x, u).1
    }

    pub fn eval(&self, x: f64, u: f64) -> (f64, f64) {
        let mut factors = Vec::with_capacity(self.form.factor_count());
        self.form.factors_at(x, self.period, &mut factors);
        self.form.eval(&factors, u)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.form.is_homogeneous()
    }

    /// The reaction seen by `v = top - u(-x)`: `x, v -> -f(-x, top - v)`.
    pub fn reversed(&self, top: f64) -> Self {
        Self {
            period: self.period,
            form: Form::Reversed { inner: Box::new(self.form.clone()), top },
            kind_tag: alloc::format!("reversed-{}", self.kind_tag),
            lipschitz_bound_hint: self.lipschitz_bound_hint,
            intervals: None,
        }
    }

    /// Tabulates the x-dependence at the `cells` phases of one period.
    pub fn on_phases(&self, cells: usize) -> PhaseReaction<'_> {
        let k = self.form.factor_count();
        let dx = self.period / cells as f64;
        let mut factors = Vec::with_capacity(cells * k);
        for i in 0..cells {
            self.form.factors_at(i as f64 * dx, self.period, &mut factors);
        }
        PhaseReaction { form: &self.form, factors, stride: k }
    }

    /// Sampled bound of `sup |df/du|` over `x` in one period and `u` in
    /// `[lo, hi]`, unless a hint was supplied.
    pub fn lipschitz_bound(&self, lo: f64, hi: f64) -> f64 {
        if let Some(h) = self.lipschitz_bound_hint {
            return h;
        }
        let xs = if self.is_homogeneous() { 1 } else { 64 };
        let nu = 4001;
        let mut m = 0.0f64;
        for ix in 0..xs {
            let x = self.period * ix as f64 / xs as f64;
            for iu in 0..nu {
                let u = lo + (hi - lo) * iu as f64 / (nu - 1) as f64;
                m = m.max(self.df_du(x, u).abs());
            }
        }
        m * 1.02
    }

    /// `sup_u df/du` (signed), used for crude spreading-speed bounds.
    pub fn max_growth_rate(&self, lo: f64, hi: f64) -> f64 {
        let xs = if self.is_homogeneous() { 1 } else { 64 };
        let mut m = f64::MIN;
        for ix in 0..xs {
            let x = self.period * ix as f64 / xs as f64;
            for iu in 0..=2000 {
                let u = lo + (hi - lo) * iu as f64 / 2000.0;
                m = m.max(self.df_du(x, u));
            }
        }
        m
    }
}

/// Reaction evaluated at grid phases; the hot path of every stepper.
#[derive(Debug, Clone)]
pub struct PhaseReaction<'a> {
    form: &'a Form,
    factors: Vec<f64>,
    stride: usize,
}

impl PhaseReaction<'_> {
    #[inline]
    pub fn eval(&self, phase: usize, u: f64) -> (f64, f64) {
        let k = self.stride;
        self.form.eval(&self.factors[phase * k..(phase + 1) * k], u)
    }

    #[inline]
    pub fn f(&self, phase: usize, u: f64) -> f64 {
        self.eval(phase, u).0
    }
}

/// Builds a reaction term from a preset description.
pub fn build_nonlinearity(spec: &NonlinearitySpec) -> Result<Nonlinearity, ModelError> {
    let period = check_period(spec.period)?;
    let eps = spec.modulation_eps;
    if !(eps.abs() < 1.0) {
        return Err(ModelError::ModulationTooLarge(eps));
    }
    let check_theta = |t: f64| {
        if t > 0.0 && t < 1.0 {
            Ok(t)
        } else {
            Err(ModelError::ThresholdOutOfRange(t))
        }
    };
    let modulation = if eps == 0.0 {
        TrigSeries::constant(1.0)
    } else {
        TrigSeries { mean: 1.0, cos: vec![0.0], sin: vec![eps] }
    };
    let mut intervals = None;
    let (form, tag) = match &spec.preset {
        Preset::Kpp => (Form::Separable { shape: Shape::Logistic, modulation }, "kpp"),
        Preset::Bistable { theta } => (
            Form::Separable { shape: Shape::Cubic { theta: check_theta(*theta)? }, modulation },
            "bistable",
        ),
        Preset::Ignition { theta } => (
            Form::Separable { shape: Shape::Ignition { theta: check_theta(*theta)? }, modulation },
            "ignition",
        ),
        Preset::Zero => (Form::Separable { shape: Shape::Zero, modulation }, "zero"),
        Preset::Stacked(pieces) => {
            validate_stack(pieces)?;
            for p in pieces {
                if let IntervalShape::Bistable { theta } = p.shape {
                    check_theta(theta)?;
                }
            }
            intervals = Some(pieces.clone());
            let tag = match pieces.len() {
                2 => "tristable",
                3 => "quadristable",
                _ => "multistable",
            };
            (Form::Separable { shape: Shape::Stacked(pieces.clone()), modulation }, tag)
        }
        Preset::Series(powers) => {
            if powers.is_empty() {
                return Err(ModelError::EmptySeries);
            }
            let mut coeffs = powers
                .iter()
                .map(|c| TrigSeries::from_flat(c))
                .collect::<Result<Vec<_>, _>>()?;
            if eps != 0.0 {
                // (1 + eps sin) c_j(x): fold the modulation into each power
                coeffs = coeffs.into_iter().map(|c| multiply_by_modulation(&c, eps)).collect();
            }
            (Form::Polynomial(coeffs), "custom")
        }
    };
    Ok(Nonlinearity {
        period,
        form,
        kind_tag: String::from(tag),
        lipschitz_bound_hint: spec.lipschitz_hint,
        intervals,
    })
}

fn validate_stack(pieces: &[IntervalSpec]) -> Result<(), ModelError> {
    let first = pieces.first().ok_or(ModelError::BadIntervals("no intervals"))?;
    if first.lower != 0.0 {
        return Err(ModelError::BadIntervals("first interval must start at 0"));
    }
    for (i, p) in pieces.iter().enumerate() {
        if !(p.upper > p.lower) {
            return Err(ModelError::BadIntervals("interval with non-positive height"));
        }
        if !(p.amplitude > 0.0) {
            return Err(ModelError::BadIntervals("amplitude must be positive"));
        }
        if i > 0 && pieces[i - 1].upper != p.lower {
            return Err(ModelError::BadIntervals("intervals must be contiguous"));
        }
    }
    Ok(())
}

/// Product of a series with `1 + eps sin(theta)`, exact in trigonometric form.
fn multiply_by_modulation(c: &TrigSeries, eps: f64) -> TrigSeries {
    let k = c.cos.len() + 1;
    let mut cos = vec![0.0; k];
    let mut sin = vec![0.0; k];
    let mut mean = c.mean;
    // copy the original coefficients
    for i in 0..c.cos.len() {
        cos[i] += c.cos[i];
        sin[i] += c.sin[i];
    }
    // eps sin(t) * mean
    sin[0] += eps * c.mean;
    for i in 0..c.cos.len() {
        let m = i + 1;
        // sin t cos mt = (sin((m+1)t) - sin((m-1)t)) / 2
        sin[m] += 0.5 * eps * c.cos[i];
        if m == 1 {
            // sin(0) = 0
        } else {
            sin[m - 2] -= 0.5 * eps * c.cos[i];
        }
        // sin t sin mt = (cos((m-1)t) - cos((m+1)t)) / 2
        cos[m] -= 0.5 * eps * c.sin[i];
        if m == 1 {
            mean += 0.5 * eps * c.sin[i];
        } else {
            cos[m - 2] += 0.5 * eps * c.sin[i];
        }
    }
    TrigSeries { mean, cos, sin }
}

/// Uniform grid on `[-periods_left L, periods_right L]`, or on one period
/// with periodic wrap-around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    period: f64,
    cells_per_period: usize,
    periods_left: usize,
    periods_right: usize,
    periodic: bool,
}

impl Grid {
    pub fn line(
        period: f64,
        cells_per_period: usize,
        periods_left: usize,
        periods_right: usize,
    ) -> Result<Self, ModelError> {
        check_period(period)?;
        if cells_per_period < 16 {
            return Err(ModelError::BadGrid("cells_per_period must be at least 16"));
        }
        if periods_left < 1 || periods_right < 1 {
            return Err(ModelError::BadGrid("need at least one period on each side"));
        }
        Ok(Self { period, cells_per_period, periods_left, periods_right, periodic: false })
    }

    pub fn periodic(period: f64, cells_per_period: usize) -> Result<Self, ModelError> {
        check_period(period)?;
        if cells_per_period < 16 {
            return Err(ModelError::BadGrid("cells_per_period must be at least 16"));
        }
        Ok(Self { period, cells_per_period, periods_left: 0, periods_right: 1, periodic: true })
    }

    /// Cells per period for a requested spacing; the spacing is then
    /// re-derived as `L / cells`.
    pub fn cells_for_spacing(period: f64, dx: f64) -> Result<usize, ModelError> {
        if !(dx > 0.0) {
            return Err(ModelError::BadGrid("dx must be positive"));
        }
        let cells = libm::round(period / dx);
        if cells < 16.0 {
            return Err(ModelError::BadGrid("dx too coarse: fewer than 16 cells per period"));
        }
        Ok(cells as usize)
    }

    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn cells_per_period(&self) -> usize {
        self.cells_per_period
    }
    pub fn periods_left(&self) -> usize {
        self.periods_left
    }
    pub fn periods_right(&self) -> usize {
        self.periods_right
    }
    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn dx(&self) -> f64 {
        self.period / self.cells_per_period as f64
    }

    pub fn len(&self) -> usize {
        if self.periodic {
            self.cells_per_period
        } else {
            self.cells_per_period * (self.periods_left + self.periods_right) + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn offset(&self) -> i64 {
        (self.cells_per_period * self.periods_left) as i64
    }

    /// Coordinate of node `i`; period boundaries are exact multiples of `L`.
    pub fn x(&self, i: usize) -> f64 {
        let k = i as i64 - self.offset();
        let n = self.cells_per_period as i64;
        k.div_euclid(n) as f64 * self.period + k.rem_euclid(n) as f64 * self.dx()
    }

    /// Index of node `i` within its period.
    pub fn phase(&self, i: usize) -> usize {
        (i as i64 - self.offset()).rem_euclid(self.cells_per_period as i64) as usize
    }

    /// Node at the site `n L`, if inside the domain.
    pub fn site_node(&self, n: i64) -> Option<usize> {
        let k = n * self.cells_per_period as i64 + self.offset();
        if k >= 0 && (k as usize) < self.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Sites `n L` on the grid, from left to right.
    pub fn sites(&self) -> core::ops::RangeInclusive<i64> {
        if self.periodic {
            0..=0
        } else {
            -(self.periods_left as i64)..=self.periods_right as i64
        }
    }

    /// Nearest node at or left of `x`.
    pub fn node_at_or_left(&self, x: f64) -> Option<usize> {
        let k = libm::floor(x / self.dx() + 1e-9) as i64 + self.offset();
        if k >= 0 && (k as usize) < self.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn left_end(&self) -> f64 {
        -(self.periods_left as f64) * self.period
    }

    pub fn right_end(&self) -> f64 {
        self.periods_right as f64 * self.period
    }

    /// Expands a one-period profile (indexed by phase) onto every node.
    pub fn tile(&self, periodic_values: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| periodic_values[self.phase(i)]).collect()
    }
}

/// Values of `u(t, .)` at the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Profile {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self, ModelError> {
        if values.len() != grid.len() {
            return Err(ModelError::ProfileLength { expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteValue { index });
        }
        Ok(Self { grid, values, time })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()], time: 0.0 }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> f64) -> Result<Self, ModelError> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values, 0.0)
    }
}

/// `u0(x) = p(x)` for `x <= crossing_x`, `0` beyond. The discontinuity sits
/// at the node at (or just left of) `crossing_x`, which keeps the value of `p`.
pub fn make_heaviside(
    grid: &Grid,
    periodic_top: &[f64],
    crossing_x: f64,
) -> Result<Profile, ModelError> {
    if periodic_top.len() != grid.cells_per_period() {
        return Err(ModelError::ProfileLength {
            expected: grid.cells_per_period(),
            got: periodic_top.len(),
        });
    }
    if grid.is_periodic()
        || crossing_x < grid.left_end() + grid.period() - 1e-12
        || crossing_x > grid.right_end() - grid.period() + 1e-12
    {
        return Err(ModelError::CrossingOutsideDomain { crossing_x });
    }
    let cut = grid.node_at_or_left(crossing_x).ok_or(ModelError::CrossingOutsideDomain { crossing_x })?;
    let values = (0..grid.len())
        .map(|i| if i <= cut { periodic_top[grid.phase(i)] } else { 0.0 })
        .collect();
    Profile::new(*grid, values, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bistable(theta: f64, eps: f64) -> Nonlinearity {
        build_nonlinearity(&NonlinearitySpec {
            preset: Preset::Bistable { theta },
            modulation_eps: eps,
            period: 1.0,
            lipschitz_hint: None,
        })
        .unwrap()
    }

    pub(crate) fn quadristable(thetas: [f64; 3]) -> Vec<IntervalSpec> {
        let b = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        (0..3)
            .map(|i| IntervalSpec {
                lower: b[i],
                upper: b[i + 1],
                shape: IntervalShape::Bistable { theta: thetas[i] },
                amplitude: 1.0,
            })
            .collect()
    }

    #[test]
    fn kpp_preset_closed_form() {
        let f = build_nonlinearity(&NonlinearitySpec::homogeneous(Preset::Kpp)).unwrap();
        for &u in &[0.0, 0.2, 0.5, 1.0, 1.1] {
            assert_eq!(f.f(0.3, u), u * (1.0 - u));
            assert_eq!(f.df_du(0.3, u), 1.0 - 2.0 * u);
        }
    }

    #[test]
    fn bistable_roots() {
        let f = bistable(0.25, 0.0);
        for &r in &[0.0, 0.25, 1.0] {
            assert!(f.f(0.7, r).abs() <= 1e-12);
        }
    }

    #[test]
    fn quadristable_zero_table() {
        let f = build_nonlinearity(&NonlinearitySpec::homogeneous(Preset::Stacked(quadristable([
            0.2, 0.5, 0.8,
        ]))))
        .unwrap();
        let third = 1.0 / 3.0;
        for &r in &[0.0, third, 2.0 * third, 1.0] {
            assert!(f.f(0.0, r).abs() <= 1e-12, "f({r}) = {}", f.f(0.0, r));
        }
        for &(lo, t) in &[(0.0, 0.2), (third, 0.5), (2.0 * third, 0.8)] {
            let r = lo + t * third;
            assert!(f.f(0.0, r).abs() <= 1e-12);
        }
        // signs between roots alternate like a bistable cubic on each piece
        assert!(f.f(0.0, 0.05) < 0.0 && f.f(0.0, 0.2) > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad_theta = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 1.2 });
        assert_eq!(build_nonlinearity(&bad_theta), Err(ModelError::ThresholdOutOfRange(1.2)));
        let mut bad_eps = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.3 });
        bad_eps.modulation_eps = 1.0;
        assert_eq!(build_nonlinearity(&bad_eps), Err(ModelError::ModulationTooLarge(1.0)));
        let gap = vec![
            IntervalSpec { lower: 0.0, upper: 0.4, shape: IntervalShape::Monostable, amplitude: 1.0 },
            IntervalSpec { lower: 0.5, upper: 1.0, shape: IntervalShape::Monostable, amplitude: 1.0 },
        ];
        assert!(matches!(
            build_nonlinearity(&NonlinearitySpec::homogeneous(Preset::Stacked(gap))),
            Err(ModelError::BadIntervals(_))
        ));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut specs = vec![
            NonlinearitySpec::homogeneous(Preset::Kpp),
            NonlinearitySpec::homogeneous(Preset::Ignition { theta: 0.3 }),
            NonlinearitySpec::homogeneous(Preset::Stacked(quadristable([0.2, 0.5, 0.8]))),
            NonlinearitySpec::homogeneous(Preset::Series(vec![vec![0.5, 0.1, 0.2], vec![-1.0, 0.0, 0.3]])),
        ];
        let mut modulated = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.3 });
        modulated.modulation_eps = 0.4;
        specs.push(modulated);
        let h = 1e-5;
        for spec in &specs {
            let f = build_nonlinearity(spec).unwrap();
            let kinks: Vec<f64> = match &spec.preset {
                Preset::Stacked(p) => p.iter().map(|i| i.upper).collect(),
                Preset::Ignition { theta } => vec![*theta, theta + IGNITION_SMOOTHING],
                _ => vec![],
            };
            for ix in 0..8 {
                let x = ix as f64 / 8.0 + 0.01;
                for iu in 0..=60 {
                    let u = -0.05 + 1.1 * iu as f64 / 60.0 + 1e-4;
                    if kinks.iter().any(|k| (u - k).abs() < 2.0 * h) {
                        continue;
                    }
                    let fd = (f.f(x, u + h) - f.f(x, u - h)) / (2.0 * h);
                    assert!((fd - f.df_du(x, u)).abs() <= 1e-6, "{:?} x={x} u={u}", spec.preset);
                }
            }
        }
    }

    #[test]
    fn evaluation_is_exactly_periodic() {
        let mut spec = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.3 });
        spec.modulation_eps = 0.2;
        let f = build_nonlinearity(&spec).unwrap();
        let a = PeriodicCoefficient::series(1.0, TrigSeries::from_flat(&[1.0, 0.3, 0.1]).unwrap())
            .unwrap();
        for &x in &[0.0, 0.125, 0.375, 0.8125] {
            for k in -4i32..=4 {
                let shifted = x + k as f64;
                assert_eq!(f.f(shifted, 0.6).to_bits(), f.f(x, 0.6).to_bits());
                assert_eq!(a.eval(shifted).to_bits(), a.eval(x).to_bits());
            }
        }
    }

    #[test]
    fn modulation_folding_matches_product() {
        let powers = vec![vec![0.3, 0.2, -0.1, 0.05, 0.4], vec![-1.0, 0.0, 0.25]];
        let mut spec = NonlinearitySpec::homogeneous(Preset::Series(powers.clone()));
        let plain = build_nonlinearity(&spec).unwrap();
        spec.modulation_eps = 0.35;
        let modded = build_nonlinearity(&spec).unwrap();
        for ix in 0..16 {
            let x = ix as f64 / 16.0;
            let m = 1.0 + 0.35 * libm::sin(2.0 * PI * x);
            for &u in &[0.1, 0.5, 0.9] {
                assert!((modded.f(x, u) - m * plain.f(x, u)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn coefficient_positivity_enforced() {
        let bad = TrigSeries::from_flat(&[0.5, 0.0, 0.6]).unwrap();
        assert!(matches!(
            PeriodicCoefficient::series(1.0, bad),
            Err(ModelError::NonPositiveCoefficient { .. })
        ));
        assert!(PeriodicCoefficient::samples(1.0, vec![1.0, 0.5, -0.1, 1.0]).is_err());
        let ok = PeriodicCoefficient::samples(2.0, vec![1.0, 1.5, 2.0, 1.5]).unwrap();
        assert!((ok.eval(1.0) - 2.0).abs() < 1e-15);
        assert!((ok.eval(3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_nodes_hit_period_boundaries() {
        let g = Grid::line(0.7, 30, 3, 5).unwrap();
        assert_eq!(g.len(), 30 * 8 + 1);
        assert_eq!(g.x(0), -3.0 * 0.7);
        for n in g.sites() {
            let i = g.site_node(n).unwrap();
            assert_eq!(g.x(i), n as f64 * 0.7);
            assert_eq!(g.phase(i), 0);
        }
        assert!((g.dx() * 30.0 - 0.7).abs() < 1e-15);
        assert!(Grid::line(1.0, 8, 1, 1).is_err());
    }

    #[test]
    fn heaviside_definition() {
        let g = Grid::line(1.0, 16, 4, 4).unwrap();
        let ones = vec![1.0; 16];
        let u = make_heaviside(&g, &ones, 0.0).unwrap();
        let cut = g.site_node(0).unwrap();
        assert!(u.values[..=cut].iter().all(|v| *v == 1.0));
        assert!(u.values[cut + 1..].iter().all(|v| *v == 0.0));

        let p: Vec<f64> = (0..16).map(|i| 0.8 + 0.1 * libm::cos(2.0 * PI * i as f64 / 16.0)).collect();
        let u = make_heaviside(&g, &p, 3.0).unwrap();
        let cut = g.site_node(3).unwrap();
        assert_eq!(u.values[cut], p[0]);
        assert_eq!(u.values[cut + 1], 0.0);
        assert!(matches!(make_heaviside(&g, &ones, 4.0), Err(ModelError::CrossingOutsideDomain { .. })));
    }

    #[test]
    fn reversed_reaction_mirrors_bistable_threshold() {
        let f = bistable(0.25, 0.0);
        let r = f.reversed(1.0);
        let g = bistable(0.75, 0.0);
        for iu in 0..=20 {
            let u = iu as f64 / 20.0;
            assert!((r.f(0.0, u) - g.f(0.0, u)).abs() < 1e-15);
            assert!((r.df_du(0.0, u) - g.df_du(0.0, u)).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_table_agrees_with_pointwise() {
        let mut spec = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.3 });
        spec.modulation_eps = 0.2;
        let f = build_nonlinearity(&spec).unwrap().reversed(1.0);
        let table = f.on_phases(20);
        for i in 0..20 {
            let x = i as f64 / 20.0;
            assert!((table.f(i, 0.4) - f.f(x, 0.4)).abs() < 1e-14);
        }
    }
}
