//! Portable CSV and JSON formats.
//!
//! * Driving paths: CSV columns `t,W[,X_1,…]`; JSON `{schema_version, kind, times, values, force_tracks}`.
//! * Traces and level-line curves: CSV columns `t,re,im`; JSON likewise.
//! * Field samples: CSV `i,j,x,y,kind,value` plus a JSON header.
//!
//! Parse errors carry the 1-based line number of the offending CSV row.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gff::{LatticeDomain, SiteKind};
use crate::loewner::{DrivingPath, Trace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("bad header: {0}")]
    Header(String),
    #[error("json: {0}")]
    Json(String),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("invalid content: {0}")]
    Invalid(String),
}

fn csv_err(e: csv::Error) -> IoError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    IoError::Parse { line, msg: e.to_string() }
}

fn write_err(e: impl std::fmt::Display) -> IoError {
    IoError::Invalid(e.to_string())
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::File { path: path.display().to_string(), msg: e.to_string() })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::File { path: dir.display().to_string(), msg: e.to_string() })?;
    }
    fs::write(path, text).map_err(|e| IoError::File { path: path.display().to_string(), msg: e.to_string() })
}

/// Shortest round-trip formatting keeps outputs byte-stable.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn parse_rows<R: Read>(reader: R, expect: &[&str], allow_extra: bool) -> Result<Vec<(u64, Vec<f64>)>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < expect.len() || names[..expect.len()] != *expect || (!allow_extra && names.len() != expect.len())
    {
        return Err(IoError::Header(format!("expected columns {expect:?}, found {names:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let vals = rec
            .iter()
            .enumerate()
            .map(|(k, f)| {
                f.parse::<f64>().map_err(|_| IoError::Parse {
                    line,
                    msg: format!("column {:?}: cannot parse {f:?} as a number", names.get(k).unwrap_or(&"?")),
                })
            })
            .collect::<Result<Vec<f64>, IoError>>()?;
        rows.push((line, vals));
    }
    Ok(rows)
}

pub fn write_driving_csv<W: Write>(path: &DrivingPath, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "W".to_string()];
    header.extend((1..=path.force_tracks().len()).map(|j| format!("X_{j}")));
    w.write_record(&header).map_err(write_err)?;
    for i in 0..path.len() {
        let mut row = vec![num(path.times()[i]), num(path.values()[i])];
        row.extend(path.force_tracks().iter().map(|tr| num(tr[i])));
        w.write_record(&row).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn driving_csv_string(path: &DrivingPath) -> String {
    let mut buf = Vec::new();
    write_driving_csv(path, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_driving_csv<R: Read>(reader: R) -> Result<DrivingPath, IoError> {
    let rows = parse_rows(reader, &["t", "W"], true)?;
    let n_tracks = rows.first().map(|(_, r)| r.len() - 2).unwrap_or(0);
    let mut times = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    let mut tracks = vec![Vec::with_capacity(rows.len()); n_tracks];
    for (line, r) in &rows {
        if let Some(&prev) = times.last() {
            if r[0] <= prev {
                return Err(IoError::Parse { line: *line, msg: format!("time {} does not increase", r[0]) });
            }
        }
        times.push(r[0]);
        values.push(r[1]);
        for (tr, v) in tracks.iter_mut().zip(&r[2..]) {
            tr.push(*v);
        }
    }
    DrivingPath::new(times, values, tracks).map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn write_curve_csv<W: Write>(times: &[f64], points: &[Complex64], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "re", "im"]).map_err(write_err)?;
    for (t, p) in times.iter().zip(points) {
        w.write_record([num(*t), num(p.re), num(p.im)]).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn trace_csv_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_curve_csv(&trace.times, &trace.points, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Level-line curves use the point index as `t`.
pub fn curve_csv_string(points: &[Complex64]) -> String {
    let times: Vec<f64> = (0..points.len()).map(|i| i as f64).collect();
    let mut buf = Vec::new();
    write_curve_csv(&times, points, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Trace, IoError> {
    let rows = parse_rows(reader, &["t", "re", "im"], false)?;
    if rows.is_empty() {
        return Err(IoError::Invalid("no points".into()));
    }
    Ok(Trace {
        times: rows.iter().map(|(_, r)| r[0]).collect(),
        points: rows.iter().map(|(_, r)| Complex64::new(r[1], r[2])).collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct DrivingDoc {
    schema_version: u32,
    kind: String,
    times: Vec<f64>,
    values: Vec<f64>,
    #[serde(default)]
    force_tracks: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TraceDoc {
    schema_version: u32,
    kind: String,
    times: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn check_doc(version: u32, kind: &str, want: &str) -> Result<(), IoError> {
    if version != SCHEMA_VERSION {
        return Err(IoError::Schema(version));
    }
    if kind != want {
        return Err(IoError::Invalid(format!("expected kind {want:?}, found {kind:?}")));
    }
    Ok(())
}

pub fn driving_to_json(path: &DrivingPath) -> String {
    let doc = DrivingDoc {
        schema_version: SCHEMA_VERSION,
        kind: "driving_path".into(),
        times: path.times().to_vec(),
        values: path.values().to_vec(),
        force_tracks: path.force_tracks().to_vec(),
    };
    serde_json::to_string(&doc).expect("driving path serializes")
}

pub fn driving_from_json(text: &str) -> Result<DrivingPath, IoError> {
    let doc: DrivingDoc = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    check_doc(doc.schema_version, &doc.kind, "driving_path")?;
    DrivingPath::new(doc.times, doc.values, doc.force_tracks).map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn trace_to_json(trace: &Trace) -> String {
    let doc = TraceDoc {
        schema_version: SCHEMA_VERSION,
        kind: "trace".into(),
        times: trace.times.clone(),
        re: trace.points.iter().map(|p| p.re).collect(),
        im: trace.points.iter().map(|p| p.im).collect(),
    };
    serde_json::to_string(&doc).expect("trace serializes")
}

pub fn trace_from_json(text: &str) -> Result<Trace, IoError> {
    let doc: TraceDoc = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    check_doc(doc.schema_version, &doc.kind, "trace")?;
    if doc.re.len() != doc.im.len() || doc.re.len() != doc.times.len() {
        return Err(IoError::Invalid("column lengths differ".into()));
    }
    Ok(Trace { times: doc.times, points: doc.re.iter().zip(&doc.im).map(|(&a, &b)| Complex64::new(a, b)).collect() })
}

/// Loads a driving path from `.json` or CSV by extension.
pub fn load_driving(path: &Path) -> Result<DrivingPath, IoError> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        driving_from_json(&text)
    } else {
        read_driving_csv(text.as_bytes())
    }
}

/// Loads a trace from `.json` or CSV by extension.
pub fn load_trace(path: &Path) -> Result<Trace, IoError> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        trace_from_json(&text)
    } else {
        read_trace_csv(text.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub schema_version: u32,
    pub radius: usize,
    pub g: f64,
    pub kappa_lat: f64,
    pub seed: u64,
    pub index: u64,
    pub jumps: Vec<(f64, f64)>,
    pub n_sites: usize,
}

pub fn field_csv_string(dom: &LatticeDomain, values: &[f64]) -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["i", "j", "x", "y", "kind", "value"]).expect("writing to memory");
        for (s, v) in values.iter().enumerate() {
            let (i, j) = dom.coords(s);
            let p = dom.position(s);
            let kind = match dom.kind(s) {
                SiteKind::Interior => "interior",
                SiteKind::RealAxis => "real_axis",
                SiteKind::OuterArc => "outer_arc",
            };
            w.write_record([i.to_string(), j.to_string(), num(p.re), num(p.im), kind.into(), num(*v)])
                .expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Reads the `value` column of a field CSV, checking the site layout against `dom`.
pub fn read_field_csv<R: Read>(reader: R, dom: &LatticeDomain) -> Result<Vec<f64>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["i", "j", "x", "y", "kind", "value"] {
        return Err(IoError::Header(format!("unexpected field columns {header:?}")));
    }
    let mut values = Vec::with_capacity(dom.len());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| IoError::Parse { line, msg };
        let i: i32 = rec[0].parse().map_err(|_| bad(format!("bad i {:?}", &rec[0])))?;
        let j: i32 = rec[1].parse().map_err(|_| bad(format!("bad j {:?}", &rec[1])))?;
        if dom.site_index(i, j) != Some(values.len()) {
            return Err(bad(format!("site ({i}, {j}) out of order for radius {}", dom.radius())));
        }
        values.push(rec[5].parse::<f64>().map_err(|_| bad(format!("bad value {:?}", &rec[5])))?);
    }
    if values.len() != dom.len() {
        return Err(IoError::Invalid(format!("{} sites, domain has {}", values.len(), dom.len())));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_path() -> DrivingPath {
        DrivingPath::new(vec![0.0, 0.1, 0.25], vec![0.0, -0.3, 0.125], vec![vec![1.0, 1.5, 2.0]]).unwrap()
    }

    #[test]
    fn driving_csv_round_trip() {
        let p = sample_path();
        let text = driving_csv_string(&p);
        assert!(text.starts_with("t,W,X_1\n"));
        assert_eq!(read_driving_csv(text.as_bytes()).unwrap(), p);
    }

    #[test]
    fn driving_json_round_trip() {
        let p = sample_path();
        let text = driving_to_json(&p);
        assert!(text.contains("\"schema_version\":1"));
        assert_eq!(driving_from_json(&text).unwrap(), p);
        let wrong = text.replace("\"schema_version\":1", "\"schema_version\":7");
        assert_eq!(driving_from_json(&wrong), Err(IoError::Schema(7)));
    }

    #[test]
    fn trace_round_trips() {
        let t = Trace { times: vec![0.0, 0.5], points: vec![Complex64::new(0.0, 0.0), Complex64::new(0.1, 1.2)] };
        assert_eq!(read_trace_csv(trace_csv_string(&t).as_bytes()).unwrap(), t);
        assert_eq!(trace_from_json(&trace_to_json(&t)).unwrap(), t);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "t,W\n0,0\n0.1,0.2\n0.2,oops\n";
        match read_driving_csv(text.as_bytes()) {
            Err(IoError::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "t,re,im\n0,0,0\n1,2\n";
        assert!(matches!(read_trace_csv(ragged.as_bytes()), Err(IoError::Parse { line: 3, .. })));
        let backwards = "t,W\n0,0\n0.2,0\n0.1,0\n";
        assert!(matches!(read_driving_csv(backwards.as_bytes()), Err(IoError::Parse { line: 4, .. })));
    }

    #[test]
    fn header_is_checked() {
        assert!(matches!(read_driving_csv("time,W\n0,0\n".as_bytes()), Err(IoError::Header(_))));
    }

    #[test]
    fn field_csv_round_trip() {
        let dom = LatticeDomain::new(6).unwrap();
        let values: Vec<f64> = (0..dom.len()).map(|s| s as f64 * 0.25 - 1.0).collect();
        let text = field_csv_string(&dom, &values);
        assert_eq!(read_field_csv(text.as_bytes(), &dom).unwrap(), values);
        let other = LatticeDomain::new(7).unwrap();
        assert!(read_field_csv(text.as_bytes(), &other).is_err());
    }
}
