//! Closed-form solutions of the forced system on the unit square.
//!
//! Velocities are curls of stream functions built from `sin^2(pi x)` and
//! `sin^4(pi x)` factors. Sampling takes the discrete curl of nodal stream
//! function values, so every sampled velocity is exactly divergence-free and
//! no-slip on the grid. The even symmetry of these profiles about each wall
//! keeps the odd-reflection ghost values second-order accurate.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::direct::{AuxForcing, Params, SolverOptions, SourceProfile, TimeProfile};
use crate::error::{CbfError, Result};
use crate::fields::ops::{damping, power};
use crate::fields::{advect, gradient, laplacian, Grid, ScalarField, VectorField};
use crate::inverse::OverdeterminationData;

/// `sin^k(pi x)` for `k` in {2, 4}, with derivatives up to third order.
#[derive(Clone, Copy, Debug)]
enum Profile {
    Sin2,
    Sin4,
}

impl Profile {
    fn eval(self, x: f64) -> [f64; 4] {
        let (s, c) = (PI * x).sin_cos();
        match self {
            Profile::Sin2 => {
                let (s2, c2) = (2.0 * PI * x).sin_cos();
                [s * s, PI * s2, 2.0 * PI * PI * c2, -4.0 * PI.powi(3) * s2]
            }
            Profile::Sin4 => [
                s.powi(4),
                4.0 * PI * s.powi(3) * c,
                4.0 * PI * PI * (3.0 * s * s * c * c - s.powi(4)),
                4.0 * PI.powi(3) * (6.0 * s * c.powi(3) - 10.0 * s.powi(3) * c),
            ],
        }
    }
}

/// `psi(x, y) = amp P(x) P(y)`, velocity `(d_y psi, -d_x psi)`.
#[derive(Clone, Copy, Debug)]
struct Stream {
    amp: f64,
    profile: Profile,
}

impl Stream {
    fn nodal(&self, x: f64, y: f64) -> f64 {
        self.amp * self.profile.eval(x)[0] * self.profile.eval(y)[0]
    }

    /// Velocity, velocity gradient `g[c][a] = d_a u_c` and Laplacian.
    fn local(&self, x: [f64; 3]) -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
        let p = self.profile.eval(x[0]);
        let q = self.profile.eval(x[1]);
        let a = self.amp;
        let u = [a * p[0] * q[1], -a * p[1] * q[0]];
        let g = [
            [a * p[1] * q[1], a * p[0] * q[2]],
            [-a * p[2] * q[0], -a * p[1] * q[1]],
        ];
        let lap = [a * (p[2] * q[1] + p[0] * q[3]), -a * (p[3] * q[0] + p[1] * q[2])];
        (u, g, lap)
    }

    /// Exact velocity sampled as the discrete curl of nodal values.
    fn sample(&self, grid: &Grid) -> VectorField {
        let h = grid.h();
        let mut u = VectorField::zeros(*grid);
        let sx = grid.face_shape(0);
        let c0 = u.comp_mut(0);
        sx.for_each(|i, k| {
            let x = i[0] as f64 * h;
            c0[k] = (self.nodal(x, (i[1] + 1) as f64 * h) - self.nodal(x, i[1] as f64 * h)) / h;
        });
        let sy = grid.face_shape(1);
        let c1 = u.comp_mut(1);
        sy.for_each(|i, k| {
            let y = i[1] as f64 * h;
            c1[k] = -(self.nodal((i[0] + 1) as f64 * h, y) - self.nodal(i[0] as f64 * h, y)) / h;
        });
        u.enforce_no_slip();
        u
    }
}

/// Zero-mean pressure `amp cos(pi x) cos(pi y)`.
#[derive(Clone, Copy, Debug)]
struct Pressure {
    amp: f64,
}

impl Pressure {
    fn value(&self, x: [f64; 3]) -> f64 {
        self.amp * (PI * x[0]).cos() * (PI * x[1]).cos()
    }

    fn grad(&self, x: [f64; 3]) -> [f64; 2] {
        [
            -self.amp * PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            -self.amp * PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManufacturedCase {
    /// `psi = A sin^2 sin^2 e^{-t}` with the residual supplied as auxiliary
    /// forcing and `f = 0`.
    DecayingVortex,
    /// Time-independent state balanced exactly by the discrete operators.
    Steady,
    /// Known `f*` (curl of a `sin^4 sin^4` bump) with `g = 1 + t`; the rest
    /// of the residual goes to the auxiliary channel.
    Separable,
}

impl FromStr for ManufacturedCase {
    type Err = CbfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decaying-vortex" => Ok(ManufacturedCase::DecayingVortex),
            "steady" => Ok(ManufacturedCase::Steady),
            "separable" => Ok(ManufacturedCase::Separable),
            other => Err(CbfError::Config(format!(
                "unknown manufactured case '{other}' (expected decaying-vortex, steady or separable)"
            ))),
        }
    }
}

impl ManufacturedCase {
    pub fn name(self) -> &'static str {
        match self {
            ManufacturedCase::DecayingVortex => "decaying-vortex",
            ManufacturedCase::Steady => "steady",
            ManufacturedCase::Separable => "separable",
        }
    }
}

/// Amplitude of the bump whose curl is the separable case's source factor.
pub const BUMP_AMPLITUDE: f64 = 0.5;

/// Smooth divergence-free bump: the discrete curl of
/// `amp sin^4(pi x) sin^4(pi y)`.
pub fn bump_source(grid: &Grid, amp: f64) -> Result<VectorField> {
    if grid.dim() != 2 {
        return Err(CbfError::Parameter("the bump source is defined in 2D only".into()));
    }
    Ok(Stream {
        amp,
        profile: Profile::Sin4,
    }
    .sample(grid))
}

#[derive(Clone, Copy, Debug)]
struct TimeFactor {
    kind: ManufacturedCase,
}

impl TimeFactor {
    fn value(&self, t: f64) -> f64 {
        match self.kind {
            ManufacturedCase::DecayingVortex => (-t).exp(),
            ManufacturedCase::Steady => 1.0,
            ManufacturedCase::Separable => 1.0 + 0.5 * t,
        }
    }

    fn rate(&self, t: f64) -> f64 {
        match self.kind {
            ManufacturedCase::DecayingVortex => -(-t).exp(),
            ManufacturedCase::Steady => 0.0,
            ManufacturedCase::Separable => 0.5,
        }
    }
}

/// A manufactured problem instance sampled on one grid.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub case: ManufacturedCase,
    pub grid: Grid,
    pub params: Params,
    pub u0: VectorField,
    pub f_true: VectorField,
    pub g: TimeProfile,
    pub aux: AuxForcing,
    pub source: SourceProfile,
    /// Exact `u(., T)` and `grad p(., T)` with `g(., T)`.
    pub exact_final: OverdeterminationData,
    stream: Stream,
    time: TimeFactor,
}

impl Manufactured {
    /// Exact velocity at time `t`, sampled like `u0`.
    pub fn u_exact(&self, t: f64) -> VectorField {
        self.stream.sample(&self.grid).scaled(self.time.value(t))
    }

    /// Exact `u_t` at time `t`.
    pub fn ut_exact(&self, t: f64) -> VectorField {
        self.stream.sample(&self.grid).scaled(self.time.rate(t))
    }

    /// The forcing residual `F(t) - f g(t)` carried by the auxiliary channel.
    pub fn forcing_residual(&self, t: f64) -> VectorField {
        self.aux.at(&self.grid, t)
    }
}

/// Build the named case on `grid` for the given constants. Only 2D grids are
/// supported.
pub fn make_manufactured(case: ManufacturedCase, grid: Grid, params: &Params) -> Result<Manufactured> {
    if grid.dim() != 2 {
        return Err(CbfError::Parameter("manufactured solutions are defined in 2D only".into()));
    }
    params.validate_for_dim(2)?;
    let stream = match case {
        ManufacturedCase::DecayingVortex => Stream {
            amp: 0.25,
            profile: Profile::Sin2,
        },
        ManufacturedCase::Steady => Stream {
            amp: 0.2,
            profile: Profile::Sin2,
        },
        ManufacturedCase::Separable => Stream {
            amp: 0.1,
            profile: Profile::Sin2,
        },
    };
    let pressure = Pressure { amp: 0.5 };
    let time = TimeFactor { kind: case };
    let bump = Stream {
        amp: BUMP_AMPLITUDE,
        profile: Profile::Sin4,
    };
    let (f_true, g) = match case {
        ManufacturedCase::Separable => (bump.sample(&grid), TimeProfile::affine(1.0, 1.0)),
        _ => (VectorField::zeros(grid), TimeProfile::constant(1.0)),
    };
    let p = *params;
    let aux = match case {
        ManufacturedCase::Steady => {
            // balance the discrete operators exactly so that u0 is a
            // discrete steady state
            let u = stream.sample(&grid);
            let mut res = laplacian(&u).scaled(-p.mu);
            res += &advect(&u, &u)?;
            res += &damping(&u, p.r, p.beta, p.alpha)?;
            res += &gradient(&ScalarField::from_fn(grid, |x| pressure.value(x)));
            AuxForcing::new("discrete steady residual", move |_, _| res.clone())
        }
        _ => {
            let forced = case == ManufacturedCase::Separable;
            AuxForcing::new(format!("{} residual", case.name()), move |grid: &Grid, t| {
                let th = time.value(t);
                let dth = time.rate(t);
                let gt = 1.0 + t;
                VectorField::from_fn_no_slip(*grid, |x| {
                    let (u, gr, lap) = stream.local(x);
                    let mag = th * (u[0] * u[0] + u[1] * u[1]).sqrt();
                    let absorb = p.alpha + p.beta * power(mag, p.r - 1.0);
                    let gp = pressure.grad(x);
                    let fb = if forced { bump.local(x).0 } else { [0.0, 0.0] };
                    let mut out = [0.0; 3];
                    for c in 0..2 {
                        let conv = u[0] * gr[c][0] + u[1] * gr[c][1];
                        out[c] = dth * u[c] - p.mu * th * lap[c] + th * th * conv + absorb * th * u[c] + th * gp[c]
                            - fb[c] * gt;
                    }
                    out
                })
            })
        }
    };
    let source = SourceProfile::new(f_true.clone(), g.clone())?.with_aux(aux.clone());
    let t_final = p.t_final;
    let phi = stream.sample(&grid).scaled(time.value(t_final));
    let p_t = ScalarField::from_fn(grid, |x| pressure.value(x) * time.value(t_final));
    let g_at_t = g.at(&grid, t_final);
    let floor = g_at_t.min_abs();
    let exact_final = OverdeterminationData::new(phi, gradient(&p_t), g_at_t, floor)?;
    let u0 = stream.sample(&grid).scaled(time.value(0.0));
    Ok(Manufactured {
        case,
        grid,
        params: p,
        u0,
        f_true,
        g,
        aux,
        source,
        exact_final,
        stream,
        time,
    })
}

/// `P(F + mu lap u - (u.grad)u - D(u))` evaluated on the sampled exact state;
/// zero for a discrete steady state.
pub fn exact_state_residual(m: &Manufactured, t: f64) -> Result<VectorField> {
    let opts = SolverOptions::default();
    let u = m.u_exact(t);
    crate::direct::extract_ut_from(&u, &VectorField::zeros(m.grid), t, &m.params, &m.source, &opts)
}
