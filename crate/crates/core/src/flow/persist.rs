//! Run directories.
//!
//! ```text
//! run/
//!   manifest.txt          key=value: grid, mode, family, config, snapshot count, stop reason
//!   series.csv            t,dt,sup_ric,u0,u1,int_u0,convexity_margin
//!   quadrature.csv        t,uhat0,int_uhat0
//!   omega_integral.txt    accumulated int omega, same layout as a snapshot
//!   snapshots/snap_NNNNN.{txt,bin}
//! ```
//!
//! Snapshot files open with a `key=value` header closed by `end`, followed by
//! one row per node in flat order: `phi g11 g12 g22 omega11 omega12 omega22`.
//! Binary snapshots store the same rows as little-endian `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::MetricFamily;
use crate::vertical::{GridSpec, HomogeneousField, Slot};

use super::{
    Deformation, FlowConfig, FlowMode, FlowRun, RunMeta, Snapshot, StepRecord, StopReason,
};

const SNAPSHOT_FORMAT: &str = "finsler-flow-snapshot-1";
const MANIFEST_FORMAT: &str = "finsler-flow-run-1";
pub const SERIES_HEADER: &str = "t,dt,sup_ric,u0,u1,int_u0,convexity_margin";
pub const QUADRATURE_HEADER: &str = "t,uhat0,int_uhat0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    Text,
    Binary,
}

impl SnapshotFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnapshotFormat::Text => "text",
            SnapshotFormat::Binary => "binary",
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            SnapshotFormat::Text => "txt",
            SnapshotFormat::Binary => "bin",
        }
    }
}

impl FromStr for SnapshotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(SnapshotFormat::Text),
            "binary" => Ok(SnapshotFormat::Binary),
            other => Err(Error::Config(format!("unknown snapshot format `{other}`"))),
        }
    }
}

type Header = BTreeMap<String, String>;

fn meta_header(meta: &RunMeta) -> Vec<(String, String)> {
    let mut h = vec![
        ("n_x1".to_string(), meta.grid.n_x1.to_string()),
        ("n_x2".to_string(), meta.grid.n_x2.to_string()),
        ("n_theta".to_string(), meta.grid.n_theta.to_string()),
        ("mode".to_string(), meta.mode.name().to_string()),
    ];
    if let FlowMode::Prescribed(Deformation::Homothetic { c }) = meta.mode {
        h.push(("c".into(), format!("{c:e}")));
    }
    h.push(("family".into(), meta.family.name().into()));
    for (k, v) in meta.family.params() {
        h.push((format!("param.{k}"), format!("{v:e}")));
    }
    h
}

fn render_header(pairs: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}={v}");
    }
    s.push_str("end\n");
    s
}

fn parse_header(path: &Path, text: &str) -> Result<(Header, usize)> {
    let mut map = Header::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        offset += line.len();
        let line = line.trim();
        if line == "end" {
            return Ok((map, offset));
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| run_dir(path, format!("malformed header line `{line}`")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Err(run_dir(path, "header is not terminated by `end`"))
}

fn run_dir(path: &Path, message: impl Into<String>) -> Error {
    Error::RunDir {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn get<'a>(h: &'a Header, path: &Path, key: &str) -> Result<&'a str> {
    h.get(key)
        .map(String::as_str)
        .ok_or_else(|| run_dir(path, format!("missing key `{key}`")))
}

fn get_parsed<T: FromStr>(h: &Header, path: &Path, key: &str) -> Result<T> {
    let raw = get(h, path, key)?;
    raw.parse()
        .map_err(|_| run_dir(path, format!("bad value `{raw}` for `{key}`")))
}

fn meta_from_header(h: &Header, path: &Path) -> Result<(GridSpec, FlowMode, MetricFamily)> {
    let grid = GridSpec::new(
        get_parsed(h, path, "n_x1")?,
        get_parsed(h, path, "n_x2")?,
        get_parsed(h, path, "n_theta")?,
    )?;
    let mode = match get(h, path, "mode")? {
        "ricci" => FlowMode::Ricci,
        "homothetic" => FlowMode::Prescribed(Deformation::Homothetic {
            c: get_parsed(h, path, "c")?,
        }),
        other => return Err(run_dir(path, format!("unknown mode `{other}`"))),
    };
    let params: Vec<(String, f64)> = h
        .iter()
        .filter_map(|(k, v)| {
            k.strip_prefix("param.")
                .map(|name| (name.to_string(), v.parse().unwrap_or(f64::NAN)))
        })
        .collect();
    let family = MetricFamily::from_name(get(h, path, "family")?, &params)?;
    Ok((grid, mode, family))
}

/// Rows of `fields`, each of length `len`, as text or bytes.
fn encode_rows(fields: &[&[f64]], format: SnapshotFormat) -> Vec<u8> {
    let len = fields[0].len();
    match format {
        SnapshotFormat::Text => {
            let mut s = String::with_capacity(len * fields.len() * 24);
            for p in 0..len {
                for (j, f) in fields.iter().enumerate() {
                    if j > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{:e}", f[p]);
                }
                s.push('\n');
            }
            s.into_bytes()
        }
        SnapshotFormat::Binary => {
            let mut out = Vec::with_capacity(len * fields.len() * 8);
            for p in 0..len {
                for f in fields {
                    out.extend_from_slice(&f[p].to_le_bytes());
                }
            }
            out
        }
    }
}

fn decode_rows(
    path: &Path,
    body: &[u8],
    width: usize,
    len: usize,
    format: SnapshotFormat,
) -> Result<Vec<Vec<f64>>> {
    let mut cols = vec![Vec::with_capacity(len); width];
    match format {
        SnapshotFormat::Text => {
            let text = std::str::from_utf8(body).map_err(|_| run_dir(path, "body is not UTF-8"))?;
            for (row, line) in text.lines().enumerate() {
                let mut n = 0;
                for (j, tok) in line.split_whitespace().enumerate() {
                    if j >= width {
                        return Err(run_dir(
                            path,
                            format!("row {row} has more than {width} values"),
                        ));
                    }
                    cols[j].push(
                        tok.parse().map_err(|_| {
                            run_dir(path, format!("bad number `{tok}` in row {row}"))
                        })?,
                    );
                    n += 1;
                }
                if n != width {
                    return Err(run_dir(
                        path,
                        format!("row {row} has {n} values, expected {width}"),
                    ));
                }
            }
        }
        SnapshotFormat::Binary => {
            if body.len() != len * width * 8 {
                return Err(run_dir(
                    path,
                    format!(
                        "binary body has {} bytes, expected {}",
                        body.len(),
                        len * width * 8
                    ),
                ));
            }
            for (i, chunk) in body.chunks_exact(8).enumerate() {
                cols[i % width].push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
        }
    }
    if cols[0].len() != len {
        return Err(run_dir(
            path,
            format!("{} rows, expected {len}", cols[0].len()),
        ));
    }
    Ok(cols)
}

fn sym_parts(f: &HomogeneousField) -> [&[f64]; 3] {
    [f.comp(&[0, 0]), f.comp(&[0, 1]), f.comp(&[1, 1])]
}

fn sym_field(cols: &mut std::vec::IntoIter<Vec<f64>>) -> HomogeneousField {
    let (a, b, d) = (
        cols.next().unwrap(),
        cols.next().unwrap(),
        cols.next().unwrap(),
    );
    HomogeneousField::symmetric_lower(0, a, b, d)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn snapshot_path(dir: &Path, step: usize, format: SnapshotFormat) -> PathBuf {
    dir.join("snapshots")
        .join(format!("snap_{step:05}.{}", format.extension()))
}

/// Writes a run directory, creating it if needed.
pub fn save_run(run: &FlowRun, dir: &Path, format: SnapshotFormat) -> Result<()> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    let base = meta_header(&run.meta);

    let mut steps = Vec::with_capacity(run.snapshots.len());
    for s in &run.snapshots {
        let mut h = vec![("format".to_string(), SNAPSHOT_FORMAT.to_string())];
        h.push(("encoding".into(), format.as_str().into()));
        h.extend(base.iter().cloned());
        h.push(("step".into(), s.step.to_string()));
        h.push(("t".into(), format!("{:e}", s.t)));
        h.push((
            "fields".into(),
            "phi,g11,g12,g22,omega11,omega12,omega22".into(),
        ));
        let mut bytes = render_header(&h).into_bytes();
        let [g11, g12, g22] = sym_parts(&s.g);
        let [w11, w12, w22] = sym_parts(&s.omega);
        bytes.extend(encode_rows(&[&s.phi, g11, g12, g22, w11, w12, w22], format));
        write_file(&snapshot_path(dir, s.step, format), &bytes)?;
        steps.push(s.step.to_string());
    }

    let mut h = vec![
        ("format".to_string(), SNAPSHOT_FORMAT.to_string()),
        ("encoding".into(), "text".into()),
    ];
    h.extend(base.iter().cloned());
    h.push(("t".into(), format!("{:e}", run.final_time())));
    h.push((
        "fields".into(),
        "int_omega11,int_omega12,int_omega22".into(),
    ));
    let mut bytes = render_header(&h).into_bytes();
    bytes.extend(encode_rows(
        &sym_parts(&run.omega_integral),
        SnapshotFormat::Text,
    ));
    write_file(&dir.join("omega_integral.txt"), &bytes)?;

    let mut series = format!("{SERIES_HEADER}\n");
    let mut quad = format!("{QUADRATURE_HEADER}\n");
    for r in &run.records {
        let _ = writeln!(
            series,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.dt, r.sup_ric, r.u0, r.u1, r.int_u0, r.convexity_margin
        );
        let _ = writeln!(quad, "{:e},{:e},{:e}", r.t, r.uhat0, r.int_uhat0);
    }
    write_file(&dir.join("series.csv"), series.as_bytes())?;
    write_file(&dir.join("quadrature.csv"), quad.as_bytes())?;

    let c = &run.meta.config;
    let mut m = vec![("format".to_string(), MANIFEST_FORMAT.to_string())];
    m.extend(base);
    m.extend([
        ("horizon".to_string(), format!("{:e}", c.horizon)),
        ("dt_max".into(), format!("{:e}", c.dt_max)),
        ("c_cfl".into(), format!("{:e}", c.c_cfl)),
        ("eps_conv".into(), format!("{:e}", c.eps_conv)),
        ("r_max".into(), format!("{:e}", c.r_max)),
        ("snapshot_every".into(), c.snapshot_every.to_string()),
        ("theta_filter".into(), format!("{:e}", c.theta_filter)),
        ("snapshot_encoding".into(), format.as_str().into()),
        ("snapshots".into(), run.snapshots.len().to_string()),
        ("snapshot_steps".into(), steps.join(",")),
        ("stop".into(), run.stop.as_str().into()),
        ("final_t".into(), format!("{:e}", run.final_time())),
    ]);
    if let Some(d) = &run.detail {
        m.push(("detail".into(), d.replace('\n', " ")));
    }
    write_file(&dir.join("manifest.txt"), render_header(&m).as_bytes())
}

fn read_csv(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| run_dir(path, "not UTF-8"))?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(run_dir(path, format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .map(|(i, line)| {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
            match row {
                Ok(r) if r.len() == width => Ok(r),
                _ => Err(run_dir(path, format!("malformed row {}", i + 1))),
            }
        })
        .collect()
}

fn read_snapshot(path: &Path, len: usize, width: usize) -> Result<(Header, Vec<Vec<f64>>)> {
    let bytes = read_file(path)?;
    let (h, offset) = {
        let head_end = bytes
            .windows(5)
            .position(|w| w == b"\nend\n")
            .map_or(bytes.len(), |i| i + 5);
        let head = std::str::from_utf8(&bytes[..head_end])
            .map_err(|_| run_dir(path, "header is not UTF-8"))?;
        parse_header(path, head)?
    };
    if h.get("format").map(String::as_str) != Some(SNAPSHOT_FORMAT) {
        return Err(run_dir(path, "not a snapshot file"));
    }
    let format: SnapshotFormat = get_parsed(&h, path, "encoding")?;
    let cols = decode_rows(path, &bytes[offset..], width, len, format)?;
    Ok((h, cols))
}

/// Reads a run directory written by [`save_run`]. Missing or truncated
/// snapshots are errors naming the file.
pub fn load_run(dir: &Path) -> Result<FlowRun> {
    let manifest_path = dir.join("manifest.txt");
    let text = String::from_utf8(read_file(&manifest_path)?)
        .map_err(|_| run_dir(&manifest_path, "not UTF-8"))?;
    let (h, _) = parse_header(&manifest_path, &text)?;
    if h.get("format").map(String::as_str) != Some(MANIFEST_FORMAT) {
        return Err(run_dir(&manifest_path, "not a run manifest"));
    }
    let (grid, mode, family) = meta_from_header(&h, &manifest_path)?;
    let config = FlowConfig {
        horizon: get_parsed(&h, &manifest_path, "horizon")?,
        dt_max: get_parsed(&h, &manifest_path, "dt_max")?,
        c_cfl: get_parsed(&h, &manifest_path, "c_cfl")?,
        eps_conv: get_parsed(&h, &manifest_path, "eps_conv")?,
        r_max: get_parsed(&h, &manifest_path, "r_max")?,
        snapshot_every: get_parsed(&h, &manifest_path, "snapshot_every")?,
        theta_filter: get_parsed(&h, &manifest_path, "theta_filter")?,
    };
    let format: SnapshotFormat = get_parsed(&h, &manifest_path, "snapshot_encoding")?;
    let count: usize = get_parsed(&h, &manifest_path, "snapshots")?;
    let steps: Vec<usize> = get(&h, &manifest_path, "snapshot_steps")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| run_dir(&manifest_path, format!("bad snapshot step `{s}`")))
        })
        .collect::<Result<_>>()?;
    if steps.len() != count {
        return Err(run_dir(
            &manifest_path,
            format!("manifest lists {} steps for {count} snapshots", steps.len()),
        ));
    }
    let stop: StopReason = get_parsed(&h, &manifest_path, "stop")?;
    let len = grid.len();

    let mut snapshots = Vec::with_capacity(count);
    for &step in &steps {
        let path = snapshot_path(dir, step, format);
        if !path.exists() {
            return Err(run_dir(dir, format!("missing snapshot {}", path.display())));
        }
        let (sh, cols) = read_snapshot(&path, len, 7)?;
        let t = get_parsed(&sh, &path, "t")?;
        let mut it = cols.into_iter();
        let phi = it.next().unwrap();
        let g = sym_field(&mut it);
        let omega = sym_field(&mut it);
        snapshots.push(Snapshot {
            step,
            t,
            phi,
            g,
            omega,
        });
    }
    if snapshots.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(run_dir(dir, "snapshot times are not strictly increasing"));
    }

    let omega_path = dir.join("omega_integral.txt");
    let (_, cols) = read_snapshot(&omega_path, len, 3)?;
    let omega_integral = sym_field(&mut cols.into_iter());

    let series = read_csv(&dir.join("series.csv"), SERIES_HEADER)?;
    let quad = read_csv(&dir.join("quadrature.csv"), QUADRATURE_HEADER)?;
    if series.len() != quad.len() {
        return Err(run_dir(
            dir,
            "series.csv and quadrature.csv have different lengths",
        ));
    }
    let records = series
        .iter()
        .zip(&quad)
        .map(|(s, q)| StepRecord {
            t: s[0],
            dt: s[1],
            sup_ric: s[2],
            u0: s[3],
            u1: s[4],
            int_u0: s[5],
            convexity_margin: s[6],
            uhat0: q[1],
            int_uhat0: q[2],
        })
        .collect();
    debug_assert_eq!(omega_integral.slots(), &[Slot::Lower, Slot::Lower]);
    Ok(FlowRun {
        meta: RunMeta {
            grid,
            mode,
            family,
            config,
        },
        snapshots,
        records,
        omega_integral,
        stop,
        detail: h.get("detail").cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::run;
    use crate::geometry::FinslerField;
    use crate::vertical::Grid;

    fn small_run() -> FlowRun {
        let grid = Grid::torus(GridSpec::new(8, 8, 16).unwrap()).unwrap();
        let phi =
            FinslerField::from_family(&grid, MetricFamily::MinkowskiQuartic { c: 2.0 }).unwrap();
        let mut cfg = FlowConfig::new(0.05);
        cfg.dt_max = 0.02;
        cfg.snapshot_every = 2;
        run(
            &grid,
            phi,
            FlowMode::Prescribed(Deformation::Homothetic { c: 0.1 }),
            cfg,
        )
        .unwrap()
    }

    #[test]
    fn save_and_load_preserve_samples() {
        let r = small_run();
        for format in [SnapshotFormat::Text, SnapshotFormat::Binary] {
            let dir = tempfile::tempdir().unwrap();
            save_run(&r, dir.path(), format).unwrap();
            let back = load_run(dir.path()).unwrap();
            assert_eq!(back.meta, r.meta);
            assert_eq!(back.stop, r.stop);
            assert_eq!(back.records, r.records);
            assert_eq!(back.snapshots.len(), r.snapshots.len());
            for (a, b) in back.snapshots.iter().zip(&r.snapshots) {
                assert_eq!(a.t, b.t);
                assert_eq!(a.phi, b.phi);
                assert_eq!(a.g.max_abs_diff(&b.g), 0.0);
                assert_eq!(a.omega.max_abs_diff(&b.omega), 0.0);
            }
            assert_eq!(back.omega_integral.max_abs_diff(&r.omega_integral), 0.0);
        }
    }

    #[test]
    fn series_header_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        save_run(&small_run(), dir.path(), SnapshotFormat::Text).unwrap();
        let text = fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("t,dt,sup_ric,u0,u1,int_u0,convexity_margin")
        );
    }

    #[test]
    fn missing_snapshot_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_run(&small_run(), dir.path(), SnapshotFormat::Text).unwrap();
        fs::remove_file(dir.path().join("snapshots/snap_00002.txt")).unwrap();
        let err = load_run(dir.path()).unwrap_err().to_string();
        assert!(err.contains("missing snapshot"), "{err}");
    }
}
