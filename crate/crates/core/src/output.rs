//! CSV, SVG and mesh-snapshot files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{ExperimentRecord, SeriesPoint, Snapshot};
use crate::mesh::CurveMesh;
use crate::point::Vec2;

pub const CSV_HEADER: [&str; 14] = [
    "experiment",
    "k",
    "J",
    "h",
    "Nt",
    "tau",
    "t_final",
    "err_l2",
    "err_h1",
    "err_max",
    "order_l2",
    "mesh_ratio_initial",
    "mesh_ratio_final",
    "wall_ms",
];

pub const SERIES_HEADER: [&str; 4] = ["stepper", "step", "t", "mesh_ratio"];

/// Per-snapshot diagnostics of a single run.
pub const TRAJECTORY_HEADER: [&str; 6] = ["step", "t", "mesh_ratio", "err_l2", "err_h1", "err_max"];

/// Ten significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.9e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn record_fields(r: &ExperimentRecord) -> [String; 14] {
    [
        r.experiment.clone(),
        r.k.to_string(),
        r.elements.to_string(),
        format_float(r.h),
        r.steps.to_string(),
        format_float(r.tau),
        format_float(r.t_final),
        format_opt(r.err_l2),
        format_opt(r.err_h1),
        format_opt(r.err_max),
        format_opt(r.order_l2),
        format_float(r.mesh_ratio_initial),
        format_float(r.mesh_ratio_final),
        format_float(r.wall_ms),
    ]
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn records_csv(records: &[ExperimentRecord]) -> Vec<u8> {
    csv_bytes(&CSV_HEADER, records.iter().map(record_fields))
}

pub fn series_csv(series: &[SeriesPoint]) -> Vec<u8> {
    csv_bytes(
        &SERIES_HEADER,
        series.iter().map(|p| {
            [
                p.stepper.to_string(),
                p.step.to_string(),
                format_float(p.t),
                format_float(p.mesh_ratio),
            ]
        }),
    )
}

pub fn trajectory_csv(snapshots: &[Snapshot]) -> Vec<u8> {
    csv_bytes(
        &TRAJECTORY_HEADER,
        snapshots.iter().map(|s| {
            [
                s.step.to_string(),
                format_float(s.t),
                format_float(s.mesh_ratio),
                format_opt(s.error.map(|e| e.err_l2)),
                format_opt(s.error.map(|e| e.err_h1)),
                format_opt(s.error.map(|e| e.err_max)),
            ]
        }),
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    write_file(path, &records_csv(records))
}

pub fn write_trajectory(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    write_file(path, &trajectory_csv(snapshots))
}

pub fn write_series(path: &Path, series: &[SeriesPoint]) -> Result<()> {
    write_file(path, &series_csv(series))
}

/// Reads back the rows of a records CSV as string fields.
pub fn read_records(path: &Path) -> Result<Vec<Vec<String>>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(csv_err)
        })
        .collect()
}

pub struct LogLogPlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    /// Slope of the dashed reference line, anchored at the first point.
    pub reference_slope: f64,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0)
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// Standalone 800x600 log-log chart: data polyline, one marker per point
/// and a dashed reference slope.
pub fn loglog_svg(plot: &LogLogPlot<'_>) -> String {
    let pts: Vec<(f64, f64)> = plot
        .xs
        .iter()
        .zip(plot.ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(&x, &y)| (x, y))
        .collect();
    let guide = pts.first().map(|&(x0, y0)| {
        let x1 = pts.iter().map(|p| p.0).fold(x0, |a, x| {
            if (x - x0).abs() > (a - x0).abs() {
                x
            } else {
                a
            }
        });
        (x0, y0, x1, y0 * (x1 / x0).powf(plot.reference_slope))
    });
    let (x_lo, x_hi) = log_range(pts.iter().map(|p| p.0));
    let (y_lo, y_hi) = log_range(
        pts.iter()
            .map(|p| p.1)
            .chain(guide.iter().flat_map(|g| [g.1, g.3])),
    );
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x.log10() - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y.log10()) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="30" text-anchor="middle" font-family="sans-serif" font-size="18">{}</text>"#,
        WIDTH / 2.0,
        plot.title
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for d in x_lo as i32..=x_hi as i32 {
        let x = sx(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">1e{d}</text>"##,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 18.0
        );
    }
    for d in y_lo as i32..=y_hi as i32 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">1e{d}</text>"##,
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT,
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0,
        plot.x_label
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 20 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        plot.y_label
    );
    if let Some((x0, y0, x1, y1)) = guide {
        let _ = writeln!(
            s,
            r##"<line class="guide" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="6,4"/>"##,
            sx(x0),
            sy(y0),
            sx(x1),
            sy(y1)
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="#555">slope {}</text>"##,
            sx(x1) + 4.0,
            sy(y1),
            plot.reference_slope
        );
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline class="data" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        coords.join(" ")
    );
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r##"<circle class="marker" cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
            sx(x),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, plot: &LogLogPlot<'_>) -> Result<()> {
    write_file(path, loglog_svg(plot).as_bytes())
}

/// Contents of a mesh snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSnapshot {
    pub degree: usize,
    pub elements: usize,
    pub t: f64,
    pub positions: Vec<Vec2>,
}

/// `# bgnflow-mesh v1 k=<k> J=<J> t=<t>` followed by `index,x,y` lines with
/// 17 significant digits.
pub fn mesh_snapshot_string(mesh: &CurveMesh, t: f64) -> String {
    let mut s = format!(
        "# bgnflow-mesh v1 k={} J={} t={}\n",
        mesh.degree(),
        mesh.element_count(),
        t
    );
    for (i, p) in mesh.positions().iter().enumerate() {
        let _ = writeln!(s, "{i},{:.16e},{:.16e}", p.x, p.y);
    }
    s
}

pub fn write_mesh_snapshot(path: &Path, mesh: &CurveMesh, t: f64) -> Result<()> {
    write_file(path, mesh_snapshot_string(mesh, t).as_bytes())
}

pub fn parse_mesh_snapshot(text: &str) -> Result<MeshSnapshot> {
    let bad = |msg: &str| Error::Parse(format!("mesh snapshot: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let rest = header
        .strip_prefix("# bgnflow-mesh v1 ")
        .ok_or_else(|| bad("missing header"))?;
    let (mut degree, mut elements, mut t) = (None, None, None);
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("k", v)) => degree = v.parse::<usize>().ok(),
            Some(("J", v)) => elements = v.parse::<usize>().ok(),
            Some(("t", v)) => t = v.parse::<f64>().ok(),
            _ => return Err(bad(&format!("unexpected header field `{field}`"))),
        }
    }
    let (degree, elements, t) = match (degree, elements, t) {
        (Some(k), Some(j), Some(t)) => (k, j, t),
        _ => return Err(bad("header needs k, J and t")),
    };
    let mut positions = Vec::new();
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        let parsed = match parts.as_slice() {
            [i, x, y] => (
                i.trim().parse::<usize>(),
                x.trim().parse::<f64>(),
                y.trim().parse::<f64>(),
            ),
            _ => return Err(bad(&format!("malformed line `{line}`"))),
        };
        match parsed {
            (Ok(i), Ok(x), Ok(y)) if i == row => positions.push(Vec2::new(x, y)),
            _ => return Err(bad(&format!("malformed line `{line}`"))),
        }
    }
    if positions.len() != degree * elements {
        return Err(bad(&format!(
            "expected {} nodes for k={degree} J={elements}, found {}",
            degree * elements,
            positions.len()
        )));
    }
    Ok(MeshSnapshot {
        degree,
        elements,
        t,
        positions,
    })
}

pub fn read_mesh_snapshot(path: &Path) -> Result<MeshSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh_snapshot(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Ellipse;

    #[test]
    fn trajectory_leaves_missing_errors_blank() {
        let snaps = [Snapshot {
            step: 3,
            t: 0.5,
            mesh_ratio: 1.25,
            error: None,
        }];
        let text = String::from_utf8(trajectory_csv(&snaps)).unwrap();
        assert_eq!(
            text,
            "step,t,mesh_ratio,err_l2,err_h1,err_max\n3,5.000000000e-1,1.250000000e0,,,\n"
        );
    }

    #[test]
    fn empty_records_give_header_only() {
        let bytes = records_csv(&[]);
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "experiment,k,J,h,Nt,tau,t_final,err_l2,err_h1,err_max,order_l2,mesh_ratio_initial,mesh_ratio_final,wall_ms\n"
        );
    }

    #[test]
    fn float_format_has_ten_significant_digits() {
        assert_eq!(format_float(0.0625), "6.250000000e-2");
        assert_eq!(format_float(1.0 / 3.0), "3.333333333e-1");
    }

    #[test]
    fn two_point_plot_has_two_markers_and_one_guide() {
        let svg = loglog_svg(&LogLogPlot {
            title: "t",
            x_label: "h",
            y_label: "err",
            xs: &[0.1, 0.05],
            ys: &[1e-2, 2.6e-3],
            reference_slope: 2.0,
        });
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches(r#"class="guide""#).count(), 1);
        assert!(svg.contains(r#"width="800" height="600""#));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 7, 3).unwrap();
        let snap = parse_mesh_snapshot(&mesh_snapshot_string(&mesh, 0.25)).unwrap();
        assert_eq!((snap.degree, snap.elements, snap.t), (3, 7, 0.25));
        assert_eq!(snap.positions, mesh.positions());
    }

    #[test]
    fn snapshot_with_wrong_node_count_rejected() {
        let mesh = CurveMesh::interpolate(&Ellipse::three_to_one(), 5, 1).unwrap();
        let text = mesh_snapshot_string(&mesh, 0.0).replace("k=1 J=5", "k=1 J=6");
        assert!(parse_mesh_snapshot(&text).is_err());
        assert!(parse_mesh_snapshot("# other\n").is_err());
    }
}
