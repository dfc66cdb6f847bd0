//! CSV on-disk form of a dataset, with an optional ground-truth block and a
//! JSON sidecar describing how the file was generated.
//!
//! Reals are written at 17 significant digits so a write/read cycle returns
//! the original values exactly. Parse failures name the 1-based row and
//! column (row 1 is the header).

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Dataset, GroundTruth, Group, Record, SynthConfig};
use crate::{Error, Result};

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

/// Write `ds` (and the ground-truth block, when given) to `path`. When
/// `meta` is given, a `<path>.meta.json` sidecar records the generating
/// configuration.
pub fn write_csv(
    path: &Path,
    ds: &Dataset,
    gt: Option<&GroundTruth>,
    meta: Option<&SynthConfig>,
) -> Result<()> {
    if let Some(gt) = gt {
        gt.validate_against(ds)?;
    }
    let mut out = BufWriter::new(File::create(path)?);

    let mut header: Vec<String> = vec!["g".into(), "u".into(), "w".into()];
    header.extend((1..=ds.d_x()).map(|j| format!("x_{j}")));
    header.extend((1..=ds.d_s()).map(|j| format!("s_{j}")));
    header.push("y".into());
    if let Some(gt) = gt {
        header.extend((1..=gt.d_z()).map(|j| format!("z_{j}")));
        header.push("tau".into());
        header.extend((1..=ds.d_s()).map(|j| format!("s0_{j}")));
        header.extend((1..=ds.d_s()).map(|j| format!("s1_{j}")));
    }
    writeln!(out, "{}", header.join(","))?;

    for (i, r) in ds.records().iter().enumerate() {
        let mut fields: Vec<String> =
            vec![r.g.code().into(), r.u.to_string(), r.w.to_string()];
        fields.extend(r.x.iter().map(|&v| fmt_real(v)));
        fields.extend(r.s.iter().map(|&v| fmt_real(v)));
        fields.push(r.y.map_or_else(String::new, fmt_real));
        if let Some(gt) = gt {
            fields.extend(gt.z[i].iter().map(|&v| fmt_real(v)));
            fields.push(fmt_real(gt.tau[i]));
            fields.extend(gt.s0[i].iter().map(|&v| fmt_real(v)));
            fields.extend(gt.s1[i].iter().map(|&v| fmt_real(v)));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;

    if let Some(cfg) = meta {
        let json = serde_json::to_string_pretty(cfg)?;
        fs::write(sidecar_path(path), json)?;
    }
    Ok(())
}

/// Read the sidecar written next to `path`, if one exists.
pub fn read_sidecar(path: &Path) -> Result<Option<SynthConfig>> {
    let sp = sidecar_path(path);
    if !sp.exists() {
        return Ok(None);
    }
    let cfg: SynthConfig = serde_json::from_str(&fs::read_to_string(sp)?)?;
    Ok(Some(cfg))
}

struct Layout {
    d_x: usize,
    d_s: usize,
    d_z: Option<usize>,
    n_cols: usize,
}

/// Read a dataset (and ground truth when the file carries the optional
/// block) previously written by [`write_csv`], or any file honoring the
/// same layout.
pub fn read_csv(path: &Path) -> Result<(Dataset, Option<GroundTruth>)> {
    let display = path.display().to_string();
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| parse_err(&display, 1, 1, "file is empty, expected a header row"))??;
    let layout = parse_header(&display, &header)?;

    let mut records = Vec::new();
    let mut gt = layout.d_z.map(|_| GroundTruth {
        z: Vec::new(),
        tau: Vec::new(),
        s0: Vec::new(),
        s1: Vec::new(),
    });

    for (li, line) in lines.enumerate() {
        let row = li + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != layout.n_cols {
            return Err(parse_err(
                &display,
                row,
                fields.len().min(layout.n_cols),
                &format!("expected {} fields, got {}", layout.n_cols, fields.len()),
            ));
        }
        let mut cur = Cursor { path: &display, row, fields: &fields, pos: 0 };

        let g = match cur.next_raw()? {
            "o" => Group::Observational,
            "e" => Group::Experimental,
            other => {
                return Err(parse_err(&display, row, 1, &format!("g must be 'o' or 'e', got '{other}'")))
            }
        };
        let u = cur.next_u32("u")?;
        let w = {
            let (col, tok) = cur.next_tok();
            match tok {
                "0" => 0u8,
                "1" => 1u8,
                other => {
                    return Err(parse_err(&display, row, col, &format!("w must be 0 or 1, got '{other}'")))
                }
            }
        };
        let x = cur.next_reals(layout.d_x)?;
        let s = cur.next_reals(layout.d_s)?;
        let y = {
            let (col, tok) = cur.next_tok();
            match (g, tok.is_empty()) {
                (Group::Observational, true) => {
                    return Err(parse_err(&display, row, col, "observational row is missing y"))
                }
                (Group::Experimental, false) => {
                    return Err(parse_err(
                        &display,
                        row,
                        col,
                        "experimental row must leave y empty: no long-term outcome exists",
                    ))
                }
                (Group::Observational, false) => Some(parse_real(&display, row, col, tok)?),
                (Group::Experimental, true) => None,
            }
        };

        if let (Some(d_z), Some(gt)) = (layout.d_z, gt.as_mut()) {
            gt.z.push(cur.next_reals(d_z)?);
            gt.tau.push(cur.next_real("tau")?);
            gt.s0.push(cur.next_reals(layout.d_s)?);
            gt.s1.push(cur.next_reals(layout.d_s)?);
        }

        records.push(Record { g, u, w, x, s, y });
    }

    let ds = Dataset::new(records)?;
    if let Some(gt) = &gt {
        gt.validate_against(&ds)?;
    }
    Ok((ds, gt))
}

fn parse_err(path: &str, row: usize, col: usize, msg: &str) -> Error {
    Error::Parse { path: path.to_string(), row, col, msg: msg.to_string() }
}

fn parse_real(path: &str, row: usize, col: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, row, col, &format!("expected a real number, got '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, row, col, &format!("value must be finite, got '{tok}'")));
    }
    Ok(v)
}

struct Cursor<'a> {
    path: &'a str,
    row: usize,
    fields: &'a [&'a str],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next_tok(&mut self) -> (usize, &'a str) {
        let col = self.pos + 1;
        let tok = self.fields[self.pos];
        self.pos += 1;
        (col, tok)
    }

    fn next_raw(&mut self) -> Result<&'a str> {
        Ok(self.next_tok().1)
    }

    fn next_u32(&mut self, name: &str) -> Result<u32> {
        let (col, tok) = self.next_tok();
        tok.parse().map_err(|_| {
            parse_err(self.path, self.row, col, &format!("{name} must be a non-negative integer, got '{tok}'"))
        })
    }

    fn next_real(&mut self, _name: &str) -> Result<f64> {
        let (col, tok) = self.next_tok();
        parse_real(self.path, self.row, col, tok)
    }

    fn next_reals(&mut self, k: usize) -> Result<Vec<f64>> {
        (0..k).map(|_| self.next_real("")).collect()
    }
}

fn parse_header(path: &str, header: &str) -> Result<Layout> {
    let toks: Vec<&str> = header.split(',').collect();
    let mut pos = 0usize;

    let mut expect = |want: &str, pos: &mut usize| -> Result<()> {
        match toks.get(*pos) {
            Some(&tok) if tok == want => {
                *pos += 1;
                Ok(())
            }
            Some(&tok) => Err(parse_err(
                path,
                1,
                *pos + 1,
                &format!("expected header column '{want}', got '{tok}'"),
            )),
            None => Err(parse_err(
                path,
                1,
                *pos + 1,
                &format!("expected header column '{want}', but the header ended"),
            )),
        }
    };

    // counts `prefix_1, prefix_2, ...` with consecutive 1-based indices
    let count_indexed = |prefix: &str, pos: &mut usize| -> Result<usize> {
        let mut k = 0usize;
        while let Some(tok) = toks.get(*pos) {
            let Some(rest) = tok.strip_prefix(prefix) else { break };
            let Ok(idx) = rest.parse::<usize>() else { break };
            if idx != k + 1 {
                return Err(parse_err(
                    path,
                    1,
                    *pos + 1,
                    &format!("expected header column '{prefix}{}', got '{tok}'", k + 1),
                ));
            }
            k += 1;
            *pos += 1;
        }
        Ok(k)
    };

    expect("g", &mut pos)?;
    expect("u", &mut pos)?;
    expect("w", &mut pos)?;
    let d_x = count_indexed("x_", &mut pos)?;
    if d_x == 0 {
        return Err(parse_err(path, 1, pos + 1, "expected at least one covariate column 'x_1'"));
    }
    let d_s = count_indexed("s_", &mut pos)?;
    if d_s == 0 {
        return Err(parse_err(
            path,
            1,
            pos + 1,
            "expected at least one short-term outcome column 's_1'",
        ));
    }
    expect("y", &mut pos)?;

    let d_z = if pos < toks.len() {
        let d_z = count_indexed("z_", &mut pos)?;
        if d_z == 0 {
            return Err(parse_err(
                path,
                1,
                pos + 1,
                "ground-truth block must start with 'z_1'",
            ));
        }
        expect("tau", &mut pos)?;
        for p in ["s0_", "s1_"] {
            let k = count_indexed(p, &mut pos)?;
            if k != d_s {
                return Err(parse_err(
                    path,
                    1,
                    pos + 1,
                    &format!("expected {d_s} '{p}*' columns to mirror the s block, got {k}"),
                ));
            }
        }
        if pos != toks.len() {
            return Err(parse_err(
                path,
                1,
                pos + 1,
                &format!("unexpected trailing header column '{}'", toks[pos]),
            ));
        }
        Some(d_z)
    } else {
        None
    };

    Ok(Layout { d_x, d_s, d_z, n_cols: toks.len() })
}

#[cfg(test)]
mod tests {
    use super::super::generate;
    use super::*;

    fn sample() -> (Dataset, GroundTruth, SynthConfig) {
        let cfg = SynthConfig { n_o: 40, n_e: 25, ..SynthConfig::new(3, 8) };
        let (ds, gt) = generate(&cfg).unwrap();
        (ds, gt, cfg)
    }

    fn assert_bits_equal(a: &Dataset, b: &Dataset) {
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.records().iter().zip(b.records()) {
            assert_eq!(ra.g, rb.g);
            assert_eq!(ra.u, rb.u);
            assert_eq!(ra.w, rb.w);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&ra.x), bits(&rb.x));
            assert_eq!(bits(&ra.s), bits(&rb.s));
            assert_eq!(ra.y.map(f64::to_bits), rb.y.map(f64::to_bits));
        }
    }

    #[test]
    fn round_trip_with_ground_truth() {
        let (ds, gt, cfg) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_csv(&path, &ds, Some(&gt), Some(&cfg)).unwrap();

        let first = std::fs::read_to_string(&path).unwrap();
        let header = first.lines().next().unwrap();
        assert_eq!(header, "g,u,w,x_1,x_2,s_1,y,z_1,z_2,tau,s0_1,s1_1");

        let (ds2, gt2) = read_csv(&path).unwrap();
        let gt2 = gt2.expect("ground-truth block present");
        assert_bits_equal(&ds, &ds2);
        for i in 0..gt.len() {
            assert_eq!(gt.tau[i].to_bits(), gt2.tau[i].to_bits());
            assert_eq!(gt.z[i][0].to_bits(), gt2.z[i][0].to_bits());
            assert_eq!(gt.z[i][1].to_bits(), gt2.z[i][1].to_bits());
            assert_eq!(gt.s0[i][0].to_bits(), gt2.s0[i][0].to_bits());
            assert_eq!(gt.s1[i][0].to_bits(), gt2.s1[i][0].to_bits());
        }

        let side = read_sidecar(&path).unwrap().expect("sidecar written");
        assert_eq!(side, cfg);
    }

    #[test]
    fn round_trip_without_ground_truth() {
        let (ds, _, _) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.csv");
        write_csv(&path, &ds, None, None).unwrap();
        let (ds2, gt2) = read_csv(&path).unwrap();
        assert!(gt2.is_none());
        assert_bits_equal(&ds, &ds2);
        assert!(read_sidecar(&path).unwrap().is_none());
    }

    fn write_lines(dir: &tempfile::TempDir, lines: &[&str]) -> PathBuf {
        let path = dir.path().join("t.csv");
        fs::write(&path, lines.join("\n")).unwrap();
        path
    }

    #[test]
    fn header_errors_name_the_column() {
        let dir = tempfile::tempdir().unwrap();

        let p = write_lines(&dir, &["g,u,w,x_1,s_1"]);
        match read_csv(&p) {
            Err(Error::Parse { row, col, msg, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(col, 6);
                assert!(msg.contains("'y'"), "{msg}");
            }
            other => panic!("expected header parse error, got {other:?}"),
        }

        let p = write_lines(&dir, &["g,u,w,x_1,x_3,s_1,y"]);
        match read_csv(&p) {
            Err(Error::Parse { row, col, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(col, 5);
            }
            other => panic!("expected header parse error, got {other:?}"),
        }
    }

    #[test]
    fn row_errors_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let header = "g,u,w,x_1,x_2,s_1,y";

        // w out of range on data row 3
        let p = write_lines(
            &dir,
            &[header, "o,0,1,1.0,2.0,3.0,4.0", "o,1,2,1.0,2.0,3.0,4.0"],
        );
        match read_csv(&p) {
            Err(Error::Parse { row, col, msg, .. }) => {
                assert_eq!((row, col), (3, 3));
                assert!(msg.contains("w must be 0 or 1"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        // experimental row carrying a y
        let p = write_lines(&dir, &[header, "e,0,1,1.0,2.0,3.0,4.0", "o,0,0,0.0,0.0,0.0,0.0"]);
        match read_csv(&p) {
            Err(Error::Parse { row, col, msg, .. }) => {
                assert_eq!((row, col), (2, 7));
                assert!(msg.contains("leave y empty"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        // observational row missing its y
        let p = write_lines(&dir, &[header, "o,0,1,1.0,2.0,3.0,", "e,0,0,0.0,0.0,0.0,"]);
        match read_csv(&p) {
            Err(Error::Parse { row, col, msg, .. }) => {
                assert_eq!((row, col), (2, 7));
                assert!(msg.contains("missing y"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        // field-count mismatch
        let p = write_lines(&dir, &[header, "o,0,1,1.0,2.0,3.0"]);
        assert!(matches!(read_csv(&p), Err(Error::Parse { row: 2, .. })));

        // non-finite real
        let p = write_lines(&dir, &[header, "o,0,1,NaN,2.0,3.0,4.0", "e,0,0,0.0,0.0,0.0,"]);
        match read_csv(&p) {
            Err(Error::Parse { row, col, msg, .. }) => {
                assert_eq!((row, col), (2, 4));
                assert!(msg.contains("finite"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("absent.csv");
        assert!(matches!(read_csv(&p), Err(Error::Io(_))));
    }
}
