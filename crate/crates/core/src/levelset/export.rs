use std::io::Write;

use super::LevelSetComplex;
use crate::error::{LabError, Result};

/// Writes every arc vertex as `arc_id, vertex_index, re, im, r, theta`,
/// with a constant `format_version` column.
pub fn write_arcs_csv<W: Write>(cx: &LevelSetComplex, out: W) -> Result<()> {
    let io = |e: csv::Error| LabError::Evaluation(format!("csv export: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["arc_id", "vertex_index", "re", "im", "r", "theta", "format_version"])
        .map_err(io)?;
    for arc in &cx.arcs {
        for (k, v) in arc.vertices.iter().enumerate() {
            let z = v.z();
            w.serialize((arc.id, k, z.re, z.im, v.radius(), v.theta, crate::lab::FORMAT_VERSION))
                .map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| LabError::Evaluation(format!("csv export: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{LaurentSeries, PolarGrid};
    use crate::field::HarmonicField;
    use crate::levelset::trace_level;

    #[test]
    fn csv_round_trip() {
        let f = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(-1, 1.0)]));
        let cx = trace_level(&f, 0.0, &PolarGrid::new(1e-2, 32, 64).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_arcs_csv(&cx, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(
            rd.headers().unwrap().iter().collect::<Vec<_>>(),
            ["arc_id", "vertex_index", "re", "im", "r", "theta", "format_version"]
        );
        let rows: Vec<(usize, usize, f64, f64, f64, f64)> = rd.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), cx.arcs.iter().map(|a| a.vertices.len()).sum::<usize>());
        for (_, _, re, im, r, theta) in rows {
            assert!((re.hypot(im) - r).abs() < 1e-12);
            assert!((re - r * theta.cos()).abs() < 1e-12);
        }
    }
}
