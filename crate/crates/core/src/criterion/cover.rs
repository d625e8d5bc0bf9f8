use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::GammaSpec;
use crate::error::{Error, Result};
use crate::spaces::ComplexScalar;

/// The part of Gamma assigned to one center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellMembers {
    Finite { samples: Vec<ComplexScalar> },
    /// Lattice elements from index `from` on.
    LatticeTail { from: i64 },
    /// `{r e^(i t) : r_lo <= r <= r_hi, t_lo <= t <= t_hi}`.
    Polar { r_lo: f64, r_hi: f64, t_lo: f64, t_hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCell {
    pub center: ComplexScalar,
    pub members: CellMembers,
}

/// Centers in Gamma such that every element lies at distance `< delta` from one.
pub fn cover_gamma(gamma: &GammaSpec, delta: f64) -> Result<Vec<CoverCell>> {
    gamma.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::out_of_range("delta", delta, "(0, inf)"));
    }
    match gamma {
        GammaSpec::Finite { samples } => Ok(greedy(samples, delta)),
        GammaSpec::Geometric { .. } | GammaSpec::QuadraticDecay { .. } => {
            let lat = gamma.ray_lattice().expect("lattice kinds");
            let ln_half = (delta / 2.0).ln();
            let mut head = Vec::new();
            let mut j = lat.lo;
            while lat.ln_modulus(j) >= ln_half {
                head.push(lat.element(j).to_complex());
                j += 1;
            }
            let mut cells = greedy(&head, delta);
            // everything from j on sits in the disc of radius delta/2
            cells.push(CoverCell {
                center: lat.element(j).to_complex(),
                members: CellMembers::LatticeTail { from: j },
            });
            Ok(cells)
        }
        GammaSpec::Annulus { r_min, r_max } => Ok(annulus(*r_min, *r_max, delta)),
        GammaSpec::UnboundedGen { .. } | GammaSpec::FullPlane => {
            Err(Error::NotApplicable("a finite cover needs a bounded scalar set".into()))
        }
    }
}

fn greedy(samples: &[ComplexScalar], delta: f64) -> Vec<CoverCell> {
    let mut centers: Vec<ComplexScalar> = Vec::new();
    let mut members: Vec<Vec<ComplexScalar>> = Vec::new();
    for &s in samples {
        match centers.iter().position(|&c| (s - c).norm() < delta) {
            Some(i) => members[i].push(s),
            None => {
                centers.push(s);
                members.push(vec![s]);
            }
        }
    }
    centers
        .into_iter()
        .zip(members)
        .map(|(center, samples)| CoverCell {
            center,
            members: CellMembers::Finite { samples },
        })
        .collect()
}

/// Polar cells whose points lie within `0.9 delta` of the cell's middle:
/// `|r e^(it) - r_c e^(i t_c)| <= |r - r_c| + r |t - t_c|`.
fn annulus(r_min: f64, r_max: f64, delta: f64) -> Vec<CoverCell> {
    let reach = 0.45 * delta;
    let rings = ((r_max - r_min) / (2.0 * reach)).ceil().max(1.0) as usize;
    let dr = (r_max - r_min) / rings as f64;
    let mut out = Vec::new();
    for i in 0..rings {
        let r_lo = r_min + dr * i as f64;
        let r_hi = if i + 1 == rings { r_max } else { r_lo + dr };
        let sectors = (2.0 * PI * r_hi / (2.0 * reach)).ceil().max(1.0) as usize;
        let dt = 2.0 * PI / sectors as f64;
        for j in 0..sectors {
            let t_lo = dt * j as f64;
            let rc = 0.5 * (r_lo + r_hi);
            out.push(CoverCell {
                center: Complex64::from_polar(rc, t_lo + 0.5 * dt),
                members: CellMembers::Polar {
                    r_lo,
                    r_hi,
                    t_lo,
                    t_hi: t_lo + dt,
                },
            });
        }
    }
    out
}

/// Largest distance from a sample to its nearest center.
pub fn cover_radius(cells: &[CoverCell], samples: &[ComplexScalar]) -> f64 {
    samples
        .iter()
        .map(|&s| cells.iter().map(|c| (s - c.center).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}
