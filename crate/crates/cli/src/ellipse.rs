//! Boundary curves of two-dimensional confidence regions.

use std::fmt::Write as _;
use std::io;

use svi_core::numerics::eig_sym;
use svi_core::{ConfidenceRegion, IntervalSet, NumericsError, RegionShape};

#[derive(Debug, thiserror::Error)]
pub enum EllipseError {
    #[error("ellipse output needs a 2-dimensional region, got dimension {0}")]
    DimensionNot2(usize),
    #[error("ellipse output needs a full-rank region")]
    NotFullRank,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `points` samples of `{z : (z − c)ᵀ Q (z − c) = radius}`, evenly spaced
/// in the angle of the principal-axis parametrization.
pub fn emit_ellipse_boundary(region: &ConfidenceRegion, points: usize) -> Result<Vec<[f64; 2]>, EllipseError> {
    if region.dim() != 2 {
        return Err(EllipseError::DimensionNot2(region.dim()));
    }
    let RegionShape::FullRank { shape, radius, .. } = &region.shape else {
        return Err(EllipseError::NotFullRank);
    };
    let eig = eig_sym(shape)?;
    let axes: Vec<[f64; 2]> = (0..2)
        .map(|k| {
            let len = (radius / eig.values[k]).sqrt();
            let v = eig.vectors.row(k);
            [len * v[0], len * v[1]]
        })
        .collect();
    let c = &region.center;
    Ok((0..points)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / points as f64;
            let (s, co) = theta.sin_cos();
            [c[0] + co * axes[0][0] + s * axes[1][0], c[1] + co * axes[0][1] + s * axes[1][1]]
        })
        .collect())
}

/// One closed curve per confidence level.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub level: f64,
    pub points: Vec<[f64; 2]>,
    pub enclosing: Option<IntervalSet>,
}

pub fn write_boundary_csv<W: io::Write>(out: W, curves: &[Boundary]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "x", "y"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([c.level.to_string(), p[0].to_string(), p[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Curves as polylines with their enclosing boxes dashed; `marker` is drawn
/// as a dot (typically the true solution).
pub fn boundary_svg(curves: &[Boundary], marker: Option<[f64; 2]>) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 24.0;
    let mut xs: Vec<f64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p[0])).collect();
    let mut ys: Vec<f64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p[1])).collect();
    if let Some(m) = marker {
        xs.push(m[0]);
        ys.push(m[1]);
    }
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let scale = (SIZE - 2.0 * PAD) / (x1 - x0).max(y1 - y0);
    let px = |x: f64| PAD + (x - x0) * scale;
    let py = |y: f64| SIZE - PAD - (y - y0) * scale;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for c in curves {
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1]))).collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1"><title>{}</title></polygon>"#,
            pts.join(" "),
            c.level
        );
        if let Some(b) = &c.enclosing {
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
                px(b.lower[0]),
                py(b.upper[1]),
                (b.upper[0] - b.lower[0]) * scale,
                (b.upper[1] - b.lower[1]) * scale
            );
        }
    }
    if let Some(m) = marker {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#, px(m[0]), py(m[1]));
    }
    svg.push_str("</svg>\n");
    svg
}
