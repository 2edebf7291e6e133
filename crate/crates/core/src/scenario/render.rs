use std::f64::consts::PI;

use super::{FieldSpec, PresetSpec};
use crate::grid::{GridField, TorusGrid};

/// Images whose weight falls below this are dropped from periodized sums.
const TAIL_CUTOFF: f64 = 1e-15;

/// `sum_s exp(-(x - s)^2 / (2 w^2))` over integer shifts, adding images in
/// order of distance until both new terms drop below the cutoff.
pub fn gaussian_bump_1d(x: f64, width: f64) -> f64 {
    let x = x - x.round();
    let g = |s: f64| (-(x - s) * (x - s) / (2.0 * width * width)).exp();
    let mut sum = g(0.0);
    let mut s = 1.0;
    loop {
        let (a, b) = (g(s), g(-s));
        sum += a + b;
        if a < TAIL_CUTOFF && b < TAIL_CUTOFF {
            return sum;
        }
        s += 1.0;
    }
}

/// Samples a field spec on the grid. Mode wavevectors must stay strictly
/// inside the Nyquist band.
pub fn render_field(spec: &FieldSpec, grid: TorusGrid) -> Result<GridField, String> {
    let dim = grid.dim();
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(format!("{name} = {v} is not finite"))
        }
    };
    let field = match spec {
        FieldSpec::Constant { value } => {
            finite("value", *value)?;
            GridField::constant(grid, *value)
        }
        FieldSpec::Modes { offset, modes } => {
            finite("offset", *offset)?;
            let nyq = grid.nyquist();
            for (i, m) in modes.iter().enumerate() {
                if m.k.len() != dim {
                    return Err(format!("mode {i}: k has {} components, grid has {dim}", m.k.len()));
                }
                if let Some(k) = m.k.iter().find(|k| k.abs() >= nyq) {
                    return Err(format!("mode {i}: |k| = {} reaches the grid Nyquist limit {nyq}", k.abs()));
                }
                finite("amplitude", m.amplitude)?;
                finite("phase", m.phase)?;
            }
            GridField::from_fn(grid, |x| {
                offset
                    + modes
                        .iter()
                        .map(|m| {
                            let kx: f64 = m.k.iter().zip(x).map(|(k, x)| *k as f64 * x).sum();
                            m.amplitude * (2.0 * PI * kx + m.phase).cos()
                        })
                        .sum::<f64>()
            })
            .map_err(|e| e.to_string())?
        }
        FieldSpec::Preset(PresetSpec::GaussianBump {
            center,
            width,
            height,
            baseline,
        }) => {
            if center.len() != dim {
                return Err(format!("center has {} components, grid has {dim}", center.len()));
            }
            if !(*width > 0.0 && width.is_finite()) {
                return Err(format!("width = {width} must be > 0"));
            }
            finite("height", *height)?;
            finite("baseline", *baseline)?;
            for c in center {
                finite("center", *c)?;
            }
            GridField::from_fn(grid, |x| {
                let product: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(x, c)| gaussian_bump_1d(x - c, *width))
                    .product();
                baseline + height * product
            })
            .map_err(|e| e.to_string())?
        }
    };
    Ok(field)
}
