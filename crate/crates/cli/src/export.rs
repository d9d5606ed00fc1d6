//! CSV and JSON artifacts.

use std::path::Path;

use fractvec_core::{Field, VectorMeasure};

use crate::error::CliError;

/// Offset of the extra row placed just left of each atom.
pub const JUMP_OFFSET: f64 = 1e-9;

/// Abscissae of the cumulative CSV: `samples` equispaced points, every
/// breakpoint of `μ`, and a point just left of each atom.
pub fn sample_points(mu: &VectorMeasure, samples: usize) -> Vec<f64> {
    let m = samples.max(2) - 1;
    let mut ts: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    ts.extend(mu.breakpoints());
    ts.extend(mu.atoms().iter().map(|a| a.point - JUMP_OFFSET).filter(|&t| t >= 0.0));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// The cumulative function `t ↦ μ([0,t])` as CSV. Real measures get
/// columns `F_1..F_n`; complex ones `F_k_re, F_k_im`. Values are written in
/// shortest round-trip form.
pub fn write_cumulative<W: std::io::Write>(mu: &VectorMeasure, samples: usize, sink: W) -> csv::Result<()> {
    let complex = mu.field() == Field::Complex;
    let mut header = vec!["t".to_string()];
    for k in 1..=mu.dim() {
        if complex {
            header.push(format!("F_{k}_re"));
            header.push(format!("F_{k}_im"));
        } else {
            header.push(format!("F_{k}"));
        }
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&header)?;
    let profile = mu.cumulative_profile();
    let mut row = Vec::with_capacity(header.len());
    for t in sample_points(mu, samples) {
        row.clear();
        row.push(format!("{t:?}"));
        for z in profile.eval(t).iter() {
            row.push(format!("{:?}", z.re));
            if complex {
                row.push(format!("{:?}", z.im));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// [`write_cumulative`] into a string.
pub fn cumulative_csv(mu: &VectorMeasure, samples: usize) -> String {
    let mut buf = Vec::new();
    write_cumulative(mu, samples, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Writes the cumulative CSV of `μ` to `path`.
pub fn export_cumulative(mu: &VectorMeasure, samples: usize, path: &Path) -> Result<(), CliError> {
    if samples < 2 {
        return Err(CliError::Parse(format!("samples must be at least 2, got {samples}")));
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_cumulative(mu, samples, std::io::BufWriter::new(file)).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Io {
            path: path.into(),
            source: std::io::Error::other(format!("{other:?}")),
        },
    })
}

/// Writes `μ` in the measure JSON format to `path`.
pub fn export_measure(mu: &VectorMeasure, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(mu).expect("measure serialization cannot fail");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
