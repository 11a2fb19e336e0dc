//! Moving-average learning curves written as CSV and SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::training::EpisodeStats;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("no episodes to plot")]
    Empty,
    #[error("window must be between 1 and the number of episodes ({0})")]
    Window(usize),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Means over every full window; point `i` covers `values[i..i + window]`.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>, CurveError> {
    if values.is_empty() {
        return Err(CurveError::Empty);
    }
    if window == 0 || window > values.len() {
        return Err(CurveError::Window(values.len()));
    }
    let mut out = Vec::with_capacity(values.len() - window + 1);
    let mut sum: f64 = values[..window].iter().sum();
    out.push(sum / window as f64);
    for i in window..values.len() {
        sum += values[i] - values[i - window];
        out.push(sum / window as f64);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: &'static str,
    /// Episode index at the end of each window.
    pub episodes: Vec<u32>,
    pub values: Vec<f64>,
}

pub fn curves(stats: &[EpisodeStats], window: usize) -> Result<Vec<Curve>, CurveError> {
    let episodes: Vec<u32> = stats.iter().skip(window.saturating_sub(1)).map(|s| s.episode).collect();
    let reward: Vec<f64> = stats.iter().map(|s| s.reward).collect();
    let steps: Vec<f64> = stats.iter().map(|s| s.steps as f64).collect();
    Ok(vec![
        Curve {
            name: "reward",
            episodes: episodes.clone(),
            values: moving_average(&reward, window)?,
        },
        Curve {
            name: "steps",
            episodes,
            values: moving_average(&steps, window)?,
        },
    ])
}

pub fn to_csv(curves: &[Curve]) -> String {
    let mut out = String::from("episode");
    for c in curves {
        out.push(',');
        out.push_str(c.name);
    }
    out.push('\n');
    let rows = curves.first().map_or(0, |c| c.values.len());
    for i in 0..rows {
        write!(out, "{}", curves[0].episodes[i]).unwrap();
        for c in curves {
            write!(out, ",{}", c.values[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn to_svg(curve: &Curve, window: usize) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let x0 = f64::from(*curve.episodes.first().unwrap_or(&0));
    let x1 = f64::from(*curve.episodes.last().unwrap_or(&1));
    let lo = curve.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = curve.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi - lo < 1e-9 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0).max(1.0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - lo) / (hi - lo) * (H - 2.0 * PAD);
    let points: Vec<String> = curve
        .episodes
        .iter()
        .zip(&curve.values)
        .map(|(e, v)| format!("{:.1},{:.1}", sx(f64::from(*e)), sy(*v)))
        .collect();
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{} (moving average, window {window})</text>"#,
        W / 2.0,
        curve.name
    )
    .unwrap();
    for (y, label) in [(sy(hi), hi), (sy(lo), lo)] {
        writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{label:.2}</text>"#,
            PAD - 4.0,
            y + 4.0
        )
        .unwrap();
    }
    for (x, label) in [(sx(x0), x0), (sx(x1), x1)] {
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{label}</text>"#,
            H - PAD + 16.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

/// Writes `curves.csv` plus one SVG per metric into `dir`.
pub fn emit_curves(stats: &[EpisodeStats], window: usize, dir: &Path) -> Result<Vec<PathBuf>, CurveError> {
    let curves = curves(stats, window)?;
    let write = |path: PathBuf, text: String| {
        fs::write(&path, text).map_err(|source| CurveError::Io {
            path: path.clone(),
            source,
        })?;
        Ok::<_, CurveError>(path)
    };
    fs::create_dir_all(dir).map_err(|source| CurveError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![write(dir.join("curves.csv"), to_csv(&curves))?];
    for c in &curves {
        written.push(write(dir.join(format!("{}.svg", c.name)), to_svg(c, window))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_window() {
        assert_eq!(moving_average(&[0.0, 10.0], 2).unwrap(), vec![5.0]);
    }

    #[test]
    fn window_one_is_identity() {
        let xs = [3.0, -1.0, 4.5];
        assert_eq!(moving_average(&xs, 1).unwrap(), xs.to_vec());
    }

    #[test]
    fn constant_series_is_flat() {
        let xs = vec![7.0; 50];
        assert!(moving_average(&xs, 10).unwrap().iter().all(|v| *v == 7.0));
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(moving_average(&[], 1), Err(CurveError::Empty)));
        assert!(matches!(moving_average(&[1.0], 2), Err(CurveError::Window(1))));
        assert!(matches!(moving_average(&[1.0], 0), Err(CurveError::Window(1))));
    }
}
