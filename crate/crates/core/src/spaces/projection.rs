//! `inf_{gamma in Gamma} ||gamma u - y||`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scalar::{ComplexScalar, LogScalar};
use super::space::{modulus_norm, SpaceSpec};
use super::vector::{ScaledVector, SparseVector, VectorRef};
use crate::criterion::GammaSpec;
use crate::error::Result;
use crate::numerics::golden_section_min;

/// Grid resolution used for non-Euclidean searches over the plane or an annulus.
pub const GRID_MODULI: usize = 64;
pub const GRID_PHASES: usize = 64;

/// The scalar achieving the smallest distance and the distance itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarFit {
    pub gamma: LogScalar,
    pub distance: f64,
}

impl ScalarFit {
    pub fn gamma_complex(&self) -> ComplexScalar {
        self.gamma.to_complex()
    }
}

/// The coordinates of `u` and `y` aligned on the union of their supports.
struct Objective {
    pairs: Vec<(ComplexScalar, ComplexScalar)>,
    extra: Option<(ComplexScalar, ComplexScalar)>,
    exponent: Option<f64>,
}

fn merge(u: &SparseVector, y: &SparseVector) -> Vec<(ComplexScalar, ComplexScalar)> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(u.len() + y.len());
    let mut a = u.iter().peekable();
    let mut b = y.iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (Some(&(i, zu)), Some(&(j, zy))) => {
                if i == j {
                    out.push((zu, zy));
                    a.next();
                    b.next();
                } else if i < j {
                    out.push((zu, zero));
                    a.next();
                } else {
                    out.push((zero, zy));
                    b.next();
                }
            }
            (Some(&(_, zu)), None) => {
                out.push((zu, zero));
                a.next();
            }
            (None, Some(&(_, zy))) => {
                out.push((zero, zy));
                b.next();
            }
            (None, None) => break,
        }
    }
    out
}

impl Objective {
    fn new(u: VectorRef<'_>, y: VectorRef<'_>, space: &SpaceSpec) -> Result<Self> {
        space.check(u)?;
        space.check(y)?;
        let (pairs, extra) = match (u, y) {
            (VectorRef::Seq(a), VectorRef::Seq(b)) => (merge(a, b), None),
            (VectorRef::Sum(a), VectorRef::Sum(b)) => (merge(&a.x, &b.x), Some((a.lambda, b.lambda))),
            _ => unreachable!("conformance checked above"),
        };
        Ok(Self {
            pairs,
            extra,
            exponent: space.exponent(),
        })
    }

    fn eval(&self, beta: ComplexScalar) -> f64 {
        let inner = modulus_norm(self.pairs.iter().map(|&(u, y)| (beta * u - y).norm()), self.exponent);
        inner + self.extra.map_or(0.0, |(u, y)| (beta * u - y).norm())
    }

    fn norm_u(&self) -> f64 {
        modulus_norm(self.pairs.iter().map(|p| p.0.norm()), self.exponent) + self.extra.map_or(0.0, |p| p.0.norm())
    }

    fn norm_y(&self) -> f64 {
        modulus_norm(self.pairs.iter().map(|p| p.1.norm()), self.exponent) + self.extra.map_or(0.0, |p| p.1.norm())
    }

    /// `(sum |u_i|^2, sum conj(u_i) y_i)`, the least-squares ingredients.
    fn gram(&self) -> (f64, ComplexScalar) {
        let mut uu = 0.0;
        let mut uy = Complex64::new(0.0, 0.0);
        for &(u, y) in self.pairs.iter().chain(self.extra.iter()) {
            uu += u.norm_sqr();
            uy += u.conj() * y;
        }
        (uu, uy)
    }

    fn is_zero_u(&self) -> bool {
        self.pairs.iter().chain(self.extra.iter()).all(|p| p.0 == Complex64::new(0.0, 0.0))
    }
}

/// Best scalar in Gamma for approximating `y` by a multiple of `u`.
///
/// Full plane, annulus and ray lattices are solved exactly in Hilbert norm;
/// other norms use a convex line search (rays) or a 64 x 64 polar grid refined
/// by a shrinking compass search (plane and annulus).
pub fn best_scalar_distance<'a, 'b>(
    u: impl Into<VectorRef<'a>>,
    y: impl Into<VectorRef<'b>>,
    space: &SpaceSpec,
    gamma: &GammaSpec,
) -> Result<ScalarFit> {
    gamma.validate()?;
    let obj = Objective::new(u.into(), y.into(), space)?;
    Ok(solve(&obj, space.is_hilbert(), gamma, 0))
}

/// As [`best_scalar_distance`] for `u = 2^exp2 * v`, searching the effective
/// set `Gamma * 2^exp2` so that neither factor needs to be materialized.
pub fn best_scalar_distance_scaled<'b>(
    u: &ScaledVector,
    y: impl Into<VectorRef<'b>>,
    space: &SpaceSpec,
    gamma: &GammaSpec,
) -> Result<ScalarFit> {
    gamma.validate()?;
    let obj = Objective::new(u.vector.as_ref(), y.into(), space)?;
    Ok(solve(&obj, space.is_hilbert(), gamma, u.exp2))
}

const LN_SAFE: f64 = 700.0;

/// Evaluates the objective at the effective scalar `g * 2^exp2`.
fn eval_log(obj: &Objective, g: LogScalar, exp2: i64) -> f64 {
    let eff = g.scale_ln(exp2 as f64 * LN_2);
    if eff.is_zero() || eff.ln_abs < -LN_SAFE {
        return obj.eval(Complex64::new(0.0, 0.0));
    }
    if eff.ln_abs > LN_SAFE {
        return f64::INFINITY;
    }
    obj.eval(eff.to_complex())
}

fn solve(obj: &Objective, hilbert: bool, gamma: &GammaSpec, exp2: i64) -> ScalarFit {
    if obj.is_zero_u() {
        return ScalarFit {
            gamma: gamma.representative(),
            distance: obj.norm_y(),
        };
    }
    let shift = exp2 as f64 * LN_2;
    match gamma {
        GammaSpec::Finite { samples } => {
            let mut best = ScalarFit {
                gamma: LogScalar::from_complex(samples[0]),
                distance: f64::INFINITY,
            };
            for &s in samples {
                let g = LogScalar::from_complex(s);
                let d = eval_log(obj, g, exp2);
                if d < best.distance {
                    best = ScalarFit { gamma: g, distance: d };
                }
            }
            best
        }
        GammaSpec::FullPlane => {
            let beta = minimize_plane(obj, hilbert, None);
            ScalarFit {
                gamma: LogScalar::from_complex(beta).scale_ln(-shift),
                distance: obj.eval(beta),
            }
        }
        GammaSpec::Annulus { r_min, r_max } => {
            let lo = r_min.ln() + shift;
            let hi = r_max.ln() + shift;
            if hi < -LN_SAFE || lo > LN_SAFE {
                let g = LogScalar::from_real(if hi < -LN_SAFE { *r_max } else { *r_min });
                return ScalarFit {
                    gamma: g,
                    distance: eval_log(obj, g, exp2),
                };
            }
            let beta = minimize_plane(obj, hilbert, Some((lo.max(-LN_SAFE).exp(), hi.min(LN_SAFE).exp())));
            let g = LogScalar::from_complex(beta).scale_ln(-shift);
            ScalarFit {
                gamma: g,
                distance: obj.eval(beta),
            }
        }
        _ => {
            let lat = gamma.ray_lattice().expect("remaining kinds are ray lattices");
            solve_ray(obj, hilbert, &lat, exp2)
        }
    }
}

fn solve_ray(obj: &Objective, hilbert: bool, lat: &crate::criterion::gamma::RayLattice, exp2: i64) -> ScalarFit {
    let dir = Complex64::from_polar(1.0, lat.phase);
    let nu = obj.norm_u();
    let ny = obj.norm_y();
    let t_star = if hilbert {
        let (uu, uy) = obj.gram();
        (dir.conj() * uy).re / uu
    } else if ny == 0.0 {
        0.0
    } else {
        let hi = 2.0 * ny / nu;
        golden_section_min(|t| obj.eval(dir * t), 0.0, hi, 200).0
    };
    let shift = exp2 as f64 * LN_2;
    let ln_t = if t_star > 0.0 {
        t_star.ln() - shift
    } else {
        // The infimum sits at 0: aim for a scalar whose contribution is negligible.
        let floor = if ny > 0.0 { (1e-18 * ny / nu).ln() } else { -745.0 };
        floor - shift
    };
    let mut best = ScalarFit {
        gamma: lat.element(lat.lo),
        distance: f64::INFINITY,
    };
    let [a, b] = lat.bracket(ln_t);
    for j in [a, b, lat.lo] {
        let g = lat.element(j);
        let d = eval_log(obj, g, exp2);
        if d < best.distance {
            best = ScalarFit { gamma: g, distance: d };
        }
    }
    best
}

/// Minimizes over the plane, or over the annulus `radii` when given.
fn minimize_plane(obj: &Objective, hilbert: bool, radii: Option<(f64, f64)>) -> ComplexScalar {
    let (uu, uy) = obj.gram();
    let ls = uy / uu;
    let project = |z: ComplexScalar| -> ComplexScalar {
        match radii {
            None => z,
            Some((lo, hi)) => {
                let r = z.norm();
                if r == 0.0 {
                    Complex64::new(lo, 0.0)
                } else {
                    z * (r.clamp(lo, hi) / r)
                }
            }
        }
    };
    if hilbert {
        return project(ls);
    }
    let nu = obj.norm_u();
    let ny = obj.norm_y();
    let mut candidates: Vec<ComplexScalar> = vec![project(ls)];
    let moduli: Vec<f64> = match radii {
        None => {
            candidates.push(Complex64::new(0.0, 0.0));
            if ny == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let hi = 2.0 * ny / nu;
            let lo = hi / 4096.0;
            (0..GRID_MODULI)
                .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (GRID_MODULI - 1) as f64).exp())
                .collect()
        }
        Some((lo, hi)) => (0..GRID_MODULI)
            .map(|i| lo + (hi - lo) * i as f64 / (GRID_MODULI - 1) as f64)
            .collect(),
    };
    for &r in &moduli {
        for k in 0..GRID_PHASES {
            candidates.push(Complex64::from_polar(r, 2.0 * PI * k as f64 / GRID_PHASES as f64));
        }
    }
    let mut best = candidates[0];
    let mut best_f = obj.eval(best);
    for &c in &candidates[1..] {
        let f = obj.eval(c);
        if f < best_f {
            best = c;
            best_f = f;
        }
    }
    let scale = match radii {
        None => 2.0 * ny / nu,
        Some((_, hi)) => hi,
    };
    let mut step = scale / 64.0;
    let directions: Vec<ComplexScalar> = (0..8).map(|k| Complex64::from_polar(1.0, PI * k as f64 / 4.0)).collect();
    let mut evals = 0;
    while step > 1e-13 * scale && evals < 4000 {
        let mut improved = false;
        for d in &directions {
            let c = project(best + d * step);
            let f = obj.eval(c);
            evals += 1;
            if f < best_f {
                best = c;
                best_f = f;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}
