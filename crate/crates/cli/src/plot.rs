//! Static SVG plots of trajectory tables.

use crate::error::{CliError, CliResult};
use std::fmt::Write;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const SPHERE_R: f64 = 150.0;
const MAX_PATH_POINTS: usize = 4000;
const MAX_SPARK_POINTS: usize = 600;
/// End points closer than this close the path.
const CLOSURE_TOL: f64 = 1e-6;

struct Table {
    t: Vec<f64>,
    a: Vec<[f64; 3]>,
    energy: Vec<f64>,
    momentum: Option<Vec<f64>>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn read_table(path: &Path, bytes: &[u8]) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = rdr.headers().map_err(|e| CliError::schema(path, e))?.clone();
    let need = |name: &str| column(&headers, name).ok_or_else(|| CliError::schema(path, format!("missing column `{name}`")));
    let (it, ia) = (need("t")?, [need("a1")?, need("a2")?, need("a3")?]);
    let ie = column(&headers, "E")
        .or_else(|| column(&headers, "Ered"))
        .ok_or_else(|| CliError::schema(path, "missing column `E` or `Ered`"))?;
    let ij = column(&headers, "J");

    let mut table = Table { t: Vec::new(), a: Vec::new(), energy: Vec::new(), momentum: ij.map(|_| Vec::new()) };
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::schema(path, e))?;
        let get = |i: usize| -> CliResult<f64> {
            let field = rec.get(i).unwrap_or("");
            field.parse().map_err(|_| {
                CliError::schema(path, format!("row {}: column `{}`: not a number: {field:?}", n + 2, &headers[i]))
            })
        };
        table.t.push(get(it)?);
        table.a.push([get(ia[0])?, get(ia[1])?, get(ia[2])?]);
        table.energy.push(get(ie)?);
        if let (Some(j), Some(m)) = (ij, table.momentum.as_mut()) {
            m.push(get(j)?);
        }
    }
    if table.t.is_empty() {
        return Err(CliError::schema(path, "no data rows"));
    }
    Ok(table)
}

/// Indices of at most `max` evenly spaced rows, always keeping the last.
fn thin(n: usize, max: usize) -> Vec<usize> {
    let stride = n.div_ceil(max).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

/// Orthographic view from (1, 1, 1).
fn project(a: &[f64; 3]) -> (f64, f64) {
    let ex = [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0];
    let s6 = 6f64.sqrt();
    let ey = [-1.0 / s6, -1.0 / s6, 2.0 / s6];
    let dot = |e: [f64; 3]| e[0] * a[0] + e[1] * a[1] + e[2] * a[2];
    (180.0 + SPHERE_R * dot(ex), 180.0 - SPHERE_R * dot(ey))
}

fn sparkline(out: &mut String, label: &str, values: &[f64], top: f64) {
    let (left, w, h) = (380.0, 320.0, 110.0);
    let v0 = values[0];
    let drift: Vec<f64> = values.iter().map(|v| v - v0).collect();
    let lo = drift.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = drift.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let worst = lo.abs().max(hi.abs());
    let _ = writeln!(out, r#"<text x="{left}" y="{:.2}" font-size="12">{label} drift, max |d| = {worst:.3e}</text>"#, top - 6.0);
    let _ = writeln!(out, r##"<rect x="{left}" y="{top:.2}" width="{w}" height="{h}" fill="none" stroke="#ccc"/>"##);
    let idx = thin(drift.len(), MAX_SPARK_POINTS);
    let denom = (drift.len() - 1).max(1) as f64;
    let pts: Vec<String> = idx
        .iter()
        .map(|&i| {
            let x = left + w * i as f64 / denom;
            let y = top + h - h * (drift[i] - lo) / span;
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r##"<polyline fill="none" stroke="#b03030" stroke-width="1" points="{}"/>"##, pts.join(" "));
}

/// Renders a trajectory table to SVG. Same bytes in, same bytes out.
pub fn render(path: &Path, csv_bytes: &[u8]) -> CliResult<String> {
    let table = read_table(path, csv_bytes)?;
    let n = table.t.len();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r##"<circle cx="180" cy="180" r="{SPHERE_R}" fill="none" stroke="#888"/>"##);

    let mut d = String::new();
    for (k, &i) in thin(n, MAX_PATH_POINTS).iter().enumerate() {
        let (x, y) = project(&table.a[i]);
        let _ = write!(d, "{}{x:.2} {y:.2}", if k == 0 { "M" } else { " L" });
    }
    let (first, last) = (table.a[0], table.a[n - 1]);
    let gap = ((first[0] - last[0]).powi(2) + (first[1] - last[1]).powi(2) + (first[2] - last[2]).powi(2)).sqrt();
    if n > 2 && gap <= CLOSURE_TOL {
        d.push_str(" Z");
    }
    let _ = writeln!(out, r##"<path d="{d}" fill="none" stroke="#1f4e9c" stroke-width="1.2"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="20" y="350" font-size="12">t in [{:.4}, {:.4}], {n} samples</text>"#,
        table.t[0],
        table.t[n - 1]
    );

    sparkline(&mut out, "E", &table.energy, 40.0);
    if let Some(j) = &table.momentum {
        sparkline(&mut out, "J", j, 200.0);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_csv(n: usize, closed: bool) -> String {
        let mut s = String::from("t,a1,a2,a3,Ered,chart_id,kg\n");
        let turns = if closed { 1.0 } else { 0.5 };
        for i in 0..=n {
            let th = turns * 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let (a1, a2) = if closed && i == n { (1.0, 0.0) } else { (th.cos(), th.sin()) };
            s += &format!("{},{a1:?},{a2:?},0.0,0.5,0,\n", i as f64 * 0.01);
        }
        s
    }

    #[test]
    fn closed_circle_gives_one_closed_path() {
        let svg = render(Path::new("c.csv"), circle_csv(500, true).as_bytes()).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains(" Z\""));
        let open = render(Path::new("c.csv"), circle_csv(500, false).as_bytes()).unwrap();
        assert!(!open.contains(" Z\""));
    }

    #[test]
    fn schema_errors() {
        assert!(render(Path::new("e.csv"), b"").is_err());
        assert!(render(Path::new("e.csv"), b"t,a1,a2,a3,E,J\n").is_err());
        assert!(render(Path::new("e.csv"), b"t,a1,a2\n0,1,0\n").is_err());
        let bad = render(Path::new("e.csv"), b"t,a1,a2,a3,E\n0,1,0,0,x\n").unwrap_err();
        assert!(bad.to_string().contains("row 2"));
    }

    #[test]
    fn thinning_keeps_ends() {
        assert_eq!(thin(5, 10), vec![0, 1, 2, 3, 4]);
        let t = thin(10001, 4000);
        assert_eq!((t[0], *t.last().unwrap()), (0, 10000));
        assert!(t.len() <= 4001);
    }
}
