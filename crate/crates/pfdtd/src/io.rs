//! Persisted formats: binary field snapshots ("PFDT"), boundary records
//! ("PREC"), sweep manifests, and CSV phasor lines / convergence reports.
//! All formats are little-endian and deterministic: identical inputs produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::analysis::PhasorLine;
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::hybrid::ConvergenceReport;
use crate::source::BoundaryRecord;

const SNAPSHOT_MAGIC: &[u8; 4] = b"PFDT";
const RECORD_MAGIC: &[u8; 4] = b"PREC";
const FORMAT_VERSION: u32 = 1;

fn read_exact_or_len(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("truncated {what}")))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_len(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_len(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or_len(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

/// Write an Ez snapshot: magic "PFDT", version, nx, ny, then (re, im) f64
/// pairs in row-major order (j fastest).
pub fn write_snapshot(path: &Path, ez: &Grid2) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ez.nx as u32).to_le_bytes())?;
    w.write_all(&(ez.ny as u32).to_le_bytes())?;
    for i in 0..ez.nx {
        for v in ez.col(i) {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Grid2> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_len(&mut r, &mut magic, "snapshot header")?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("bad snapshot magic {magic:?}")));
    }
    let version = read_u32(&mut r, "snapshot version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let nx = read_u32(&mut r, "snapshot nx")? as usize;
    let ny = read_u32(&mut r, "snapshot ny")? as usize;
    let mut ez = Grid2::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..ny {
            let re = read_f64(&mut r, "snapshot data")?;
            let im = read_f64(&mut r, "snapshot data")?;
            *ez.at_mut(i, j) = Complex64::new(re, im);
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("snapshot has trailing bytes".into()));
    }
    Ok(ez)
}

/// Write a boundary record: magic "PREC", version, line length, step count,
/// t_start, dt, grid fingerprint, then interleaved (ez re, ez im, hx re,
/// hx im) per node per step.
pub fn write_record(path: &Path, rec: &BoundaryRecord) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(rec.x_positions.len() as u32).to_le_bytes())?;
    w.write_all(&(rec.e_samples.len() as u32).to_le_bytes())?;
    w.write_all(&rec.t_start.to_le_bytes())?;
    w.write_all(&rec.dt.to_le_bytes())?;
    w.write_all(&rec.grid_fingerprint.to_le_bytes())?;
    for x in &rec.x_positions {
        w.write_all(&x.to_le_bytes())?;
    }
    for (e_row, h_row) in rec.e_samples.iter().zip(&rec.h_samples) {
        for (e, h) in e_row.iter().zip(h_row) {
            w.write_all(&e.re.to_le_bytes())?;
            w.write_all(&e.im.to_le_bytes())?;
            w.write_all(&h.re.to_le_bytes())?;
            w.write_all(&h.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<BoundaryRecord> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_len(&mut r, &mut magic, "record header")?;
    if &magic != RECORD_MAGIC {
        return Err(Error::Format(format!("bad record magic {magic:?}")));
    }
    let version = read_u32(&mut r, "record version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported record version {version}")));
    }
    let line_len = read_u32(&mut r, "record line length")? as usize;
    let steps = read_u32(&mut r, "record step count")? as usize;
    let t_start = read_f64(&mut r, "record t_start")?;
    let dt = read_f64(&mut r, "record dt")?;
    let fp = read_u64(&mut r, "record fingerprint")?;
    let mut xs = Vec::with_capacity(line_len);
    for _ in 0..line_len {
        xs.push(read_f64(&mut r, "record positions")?);
    }
    let mut rec = BoundaryRecord::new(xs, dt, t_start, fp);
    for _ in 0..steps {
        let mut e_row = Vec::with_capacity(line_len);
        let mut h_row = Vec::with_capacity(line_len);
        for _ in 0..line_len {
            let er = read_f64(&mut r, "record samples")?;
            let ei = read_f64(&mut r, "record samples")?;
            let hr = read_f64(&mut r, "record samples")?;
            let hi = read_f64(&mut r, "record samples")?;
            e_row.push(Complex64::new(er, ei));
            h_row.push(Complex64::new(hr, hi));
        }
        rec.e_samples.push(e_row);
        rec.h_samples.push(h_row);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("record has trailing bytes".into()));
    }
    Ok(rec)
}

/// `{:.17e}` round-trips every finite f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Write a phasor line as CSV with columns x_m, re, im.
pub fn write_phasor_csv(path: &Path, line: &PhasorLine) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x_m,re,im")?;
    for (x, v) in line.positions.iter().zip(&line.amplitude) {
        writeln!(w, "{},{},{}", fmt_f64(*x), fmt_f64(v.re), fmt_f64(v.im))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_phasor_csv(path: &Path, frequency: f64) -> Result<PhasorLine> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty csv".into()))?;
    if header.trim() != "x_m,re,im" {
        return Err(Error::Format(format!("unexpected csv header {header:?}")));
    }
    let mut positions = Vec::new();
    let mut amplitude = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!("row {} has {} columns, want 3", ln + 2, cols.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Format(format!("bad float {s:?} in row {}", ln + 2)))
        };
        positions.push(parse(cols[0])?);
        amplitude.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    Ok(PhasorLine { positions, amplitude, frequency })
}

/// Write a convergence report as CSV: n_edge, raw_metric, normalized_metric,
/// converged, with a footer row recording the threshold and P_TF.
pub fn write_report_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n_edge,raw_metric,normalized_metric,converged")?;
    for e in &report.entries {
        writeln!(
            w,
            "{},{},{},{}",
            e.n_edge,
            fmt_f64(e.raw),
            fmt_f64(e.normalized),
            e.converged
        )?;
    }
    writeln!(w, "# threshold={} p_tf={} stop={}", fmt_f64(report.threshold), report.p_tf, report.stop_reason)?;
    w.flush()?;
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<ConvergenceReport> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty report".into()))?;
    if header.trim() != "n_edge,raw_metric,normalized_metric,converged" {
        return Err(Error::Format(format!("unexpected report header {header:?}")));
    }
    let mut entries = Vec::new();
    let mut threshold = f64::NAN;
    let mut p_tf = 0usize;
    let mut stop_reason = String::new();
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(footer) = line.strip_prefix('#') {
            // the stop reason is free text, so it comes last: everything
            // after "stop=" belongs to it
            let head = match footer.find("stop=") {
                Some(pos) => {
                    stop_reason = footer[pos + 5..].trim().to_string();
                    &footer[..pos]
                }
                None => footer,
            };
            for field in head.split_whitespace() {
                if let Some(v) = field.strip_prefix("threshold=") {
                    threshold = v
                        .parse()
                        .map_err(|_| Error::Format(format!("bad threshold {v:?}")))?;
                } else if let Some(v) = field.strip_prefix("p_tf=") {
                    p_tf = v.parse().map_err(|_| Error::Format(format!("bad p_tf {v:?}")))?;
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Format(format!("report row {} malformed", ln + 2)));
        }
        entries.push(crate::hybrid::ReportEntry {
            n_edge: cols[0].parse().map_err(|_| Error::Format("bad n_edge".into()))?,
            raw: cols[1].parse().map_err(|_| Error::Format("bad raw metric".into()))?,
            normalized: cols[2]
                .parse()
                .map_err(|_| Error::Format("bad normalized metric".into()))?,
            converged: cols[3].parse().map_err(|_| Error::Format("bad converged flag".into()))?,
        });
    }
    let normalization_reference = entries.iter().map(|e| e.raw).fold(0.0, f64::max);
    Ok(ConvergenceReport { entries, p_tf, threshold, normalization_reference, stop_reason })
}

/// One sweep manifest row: plan index, k value, record file path.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub index: usize,
    pub k: f64,
    pub record_path: String,
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,k,record_path")?;
    for e in entries {
        writeln!(w, "{},{},{}", e.index, fmt_f64(e.k), e.record_path)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingArtifact(format!("sweep manifest {}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty manifest".into()))?;
    if header.trim() != "index,k,record_path" {
        return Err(Error::Format(format!("unexpected manifest header {header:?}")));
    }
    let mut entries = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(3, ',').collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!("manifest row {} malformed", ln + 2)));
        }
        let index = cols[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad index in manifest row {}", ln + 2)))?;
        let k = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad k in manifest row {}", ln + 2)))?;
        entries.push(ManifestEntry { index, k, record_path: cols[2].trim().to_string() });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn snapshot_round_trip_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("field.pfdt");
        let mut ez = Grid2::zeros(5, 3);
        for (n, v) in ez.as_mut_slice().iter_mut().enumerate() {
            *v = Complex64::new(n as f64 * 0.1 - 0.7, (n as f64).sin());
        }
        write_snapshot(&path, &ez).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(ez, back);

        // determinism: writing again produces identical bytes
        let path2 = dir.path().join("field2.pfdt");
        write_snapshot(&path2, &ez).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn snapshot_rejects_corruption() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("field.pfdt");
        let ez = Grid2::zeros(4, 4);
        write_snapshot(&path, &ez).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_snapshot(&path).is_err());

        // truncation
        write_snapshot(&path, &ez).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        match read_snapshot(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("truncated")),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn record_round_trip_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("line.prec");
        let mut rec = BoundaryRecord::new(vec![0.0, 0.25, 0.5], 1e-12, 3e-12, 0xdead_beef);
        for s in 0..4 {
            rec.e_samples.push((0..3).map(|n| Complex64::new(s as f64, n as f64)).collect());
            rec.h_samples.push((0..3).map(|n| Complex64::new(-(s as f64), 0.5 * n as f64)).collect());
        }
        write_record(&path, &rec).unwrap();
        let back = read_record(&path).unwrap();
        assert_eq!(rec, back);

        // corrupted fingerprint field is readable (mismatch caught at replay)
        let mut bytes = std::fs::read(&path).unwrap();
        let off = 4 + 4 + 4 + 4 + 8 + 8;
        bytes[off] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        let tampered = read_record(&path).unwrap();
        assert_ne!(tampered.grid_fingerprint, rec.grid_fingerprint);

        // truncation rejected with a length error
        let good = {
            write_record(&path, &rec).unwrap();
            std::fs::read(&path).unwrap()
        };
        std::fs::write(&path, &good[..good.len() - 9]).unwrap();
        assert!(read_record(&path).is_err());
    }

    #[test]
    fn phasor_csv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("line.csv");
        let line = PhasorLine {
            positions: vec![0.0, 1.25e-3, 2.5e-3],
            amplitude: vec![
                Complex64::new(1.0 / 3.0, -2.0 / 7.0),
                Complex64::new(f64::MIN_POSITIVE, 1e300),
                Complex64::new(-0.0, 3.125),
            ],
            frequency: 12e9,
        };
        write_phasor_csv(&path, &line).unwrap();
        let back = read_phasor_csv(&path, 12e9).unwrap();
        assert_eq!(line.positions, back.positions);
        for (a, b) in line.amplitude.iter().zip(&back.amplitude) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }

        // header-only file reads back empty
        std::fs::write(&path, "x_m,re,im\n").unwrap();
        let empty = read_phasor_csv(&path, 1.0).unwrap();
        assert!(empty.positions.is_empty());

        // malformed rows rejected
        std::fs::write(&path, "x_m,re,im\n1.0,2.0\n").unwrap();
        assert!(read_phasor_csv(&path, 1.0).is_err());
    }

    #[test]
    fn report_round_trip() {
        use crate::hybrid::ConvergenceReport;
        let dir = tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let report = ConvergenceReport::from_raw(
            &[(0, 10.0), (10, 4.8), (30, 0.402)],
            10,
            0.05,
            "exhausted",
        );
        write_report_csv(&path, &report).unwrap();
        let back = read_report_csv(&path).unwrap();
        assert_eq!(back.entries, report.entries);
        assert_eq!(back.p_tf, 10);
        assert_eq!(back.threshold, 0.05);
        assert_eq!(back.stop_reason, "converged at n_edge=30");
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let entries = vec![
            ManifestEntry { index: 0, k: -1.5707, record_path: "records/member_0000_hi.prec".into() },
            ManifestEntry { index: 1, k: 1.5707, record_path: "records/member_0001_hi.prec".into() },
        ];
        write_manifest(&path, &entries).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(entries, back);

        assert!(read_manifest(&dir.path().join("absent.csv")).is_err());
    }
}
