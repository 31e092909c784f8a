//! Binary PGM/PPM images, CSV point and match lists, box files and label
//! files. Parse errors carry the byte offset or line number of the problem.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;
use volbias_core::energy::OUTLIER;
use volbias_core::model::{Datum, MatchPair};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: String, source: std::io::Error },
    #[error("byte {offset}: {msg}")]
    Pnm { offset: usize, msg: String },
    #[error("line {line}: {msg}")]
    Text { line: u64, msg: String },
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn pnm_err<T>(offset: usize, msg: impl Into<String>) -> IoResult<T> {
    Err(IoError::Pnm { offset, msg: msg.into() })
}

fn text_err<T>(line: u64, msg: impl Into<String>) -> IoResult<T> {
    Err(IoError::Text { line, msg: msg.into() })
}

pub fn read_file(path: &Path) -> IoResult<Vec<u8>> {
    fs::read(path).map_err(|source| IoError::Fs { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> IoResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| IoError::Fs { path: dir.display().to_string(), source })?;
        }
    }
    fs::write(path, bytes).map_err(|source| IoError::Fs { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(GrayImage),
    Color(ColorImage),
}

impl Image {
    pub fn width(&self) -> usize {
        match self {
            Image::Gray(g) => g.width,
            Image::Color(c) => c.width,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Image::Gray(g) => g.height,
            Image::Color(c) => c.height,
        }
    }

    /// Pixels as data with channels scaled to `[0, 1]`.
    pub fn data(&self) -> Vec<Datum> {
        match self {
            Image::Gray(g) => g.pixels.iter().map(|&v| Datum::Gray(v as f64 / 255.0)).collect(),
            Image::Color(c) => c.pixels.iter().map(|p| Datum::Color(p.map(|v| v as f64 / 255.0))).collect(),
        }
    }

    /// The sub-image `[x0, x1) × [y0, y1)`.
    pub fn crop(&self, [x0, y0, x1, y1]: [usize; 4]) -> Image {
        fn rows<T: Copy>(px: &[T], w: usize, [x0, y0, x1, y1]: [usize; 4]) -> Vec<T> {
            (y0..y1).flat_map(|y| px[y * w + x0..y * w + x1].iter().copied()).collect()
        }
        let (w, h) = (x1 - x0, y1 - y0);
        match self {
            Image::Gray(g) => Image::Gray(GrayImage { width: w, height: h, pixels: rows(&g.pixels, g.width, [x0, y0, x1, y1]) }),
            Image::Color(c) => Image::Color(ColorImage { width: w, height: h, pixels: rows(&c.pixels, c.width, [x0, y0, x1, y1]) }),
        }
    }
}

struct Header {
    magic: u8,
    width: usize,
    height: usize,
    data_start: usize,
}

fn skip_space_and_comments(b: &[u8], mut i: usize) -> usize {
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < b.len() && b[i] == b'#' {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else {
            return i;
        }
    }
}

fn header_number(b: &[u8], i: usize, what: &str) -> IoResult<(usize, usize)> {
    let start = skip_space_and_comments(b, i);
    let mut end = start;
    while end < b.len() && b[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return pnm_err(start, format!("expected {what}"));
    }
    let v = std::str::from_utf8(&b[start..end])
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or(IoError::Pnm { offset: start, msg: format!("{what} out of range") })?;
    Ok((v, end))
}

fn parse_header(b: &[u8]) -> IoResult<Header> {
    if b.len() < 2 || b[0] != b'P' {
        return pnm_err(0, "missing P5/P6 magic number");
    }
    let magic = b[1];
    if magic != b'5' && magic != b'6' {
        return pnm_err(1, "only binary P5 (gray) and P6 (color) are supported");
    }
    let (width, i) = header_number(b, 2, "width")?;
    let (height, i) = header_number(b, i, "height")?;
    let (maxval, i) = header_number(b, i, "maxval")?;
    if width == 0 || height == 0 {
        return pnm_err(2, "image has zero size");
    }
    if maxval != 255 {
        return pnm_err(i, format!("maxval must be 255, found {maxval}"));
    }
    if i >= b.len() || !b[i].is_ascii_whitespace() {
        return pnm_err(i, "expected a single whitespace byte after maxval");
    }
    Ok(Header { magic, width, height, data_start: i + 1 })
}

pub fn parse_pnm(b: &[u8]) -> IoResult<Image> {
    let h = parse_header(b)?;
    let channels = if h.magic == b'5' { 1 } else { 3 };
    let need = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(IoError::Pnm { offset: 2, msg: "image dimensions overflow".into() })?;
    let data = &b[h.data_start..];
    if data.len() < need {
        return pnm_err(b.len(), format!("truncated pixel data: expected {need} bytes, found {}", data.len()));
    }
    if data.len() > need {
        return pnm_err(h.data_start + need, "trailing bytes after pixel data");
    }
    Ok(if channels == 1 {
        Image::Gray(GrayImage { width: h.width, height: h.height, pixels: data.to_vec() })
    } else {
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Image::Color(ColorImage { width: h.width, height: h.height, pixels })
    })
}

pub fn read_image(path: &Path) -> IoResult<Image> {
    parse_pnm(&read_file(path)?)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().flatten());
    out
}

pub fn encode_image(img: &Image) -> Vec<u8> {
    match img {
        Image::Gray(g) => encode_pgm(g),
        Image::Color(c) => encode_ppm(c),
    }
}

/// Label mask as a PGM with the label index as gray level.
pub fn mask_image(width: usize, height: usize, labels: &[usize]) -> Result<GrayImage, String> {
    let pixels = labels
        .iter()
        .map(|&l| u8::try_from(l).map_err(|_| format!("label {l} does not fit a gray level")))
        .collect::<Result<Vec<u8>, String>>()?;
    Ok(GrayImage { width, height, pixels })
}

fn csv_reader(text: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).flexible(true).from_reader(text)
}

/// Numeric rows of `expected` columns; a first row that is not numeric is a header.
fn parse_numeric_csv(text: &[u8], expected: usize) -> IoResult<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(|e| IoError::Text { line: e.position().map_or(0, |p| p.line()), msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if v.len() != expected {
                    return text_err(line, format!("expected {expected} columns, found {}", v.len()));
                }
                if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
                    return text_err(line, format!("column {} is not finite", bad + 1));
                }
                rows.push(v);
            }
            Err(_) if i == 0 => {}
            Err(_) => return text_err(line, "expected numbers"),
        }
    }
    Ok(rows)
}

pub fn parse_points(text: &[u8]) -> IoResult<Vec<[f64; 2]>> {
    Ok(parse_numeric_csv(text, 2)?.into_iter().map(|r| [r[0], r[1]]).collect())
}

pub fn parse_matches(text: &[u8]) -> IoResult<Vec<MatchPair>> {
    Ok(parse_numeric_csv(text, 4)?.into_iter().map(|r| MatchPair { x: [r[0], r[1]], y: [r[2], r[3]] }).collect())
}

/// Shortest decimal text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn encode_points(points: &[[f64; 2]]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        let _ = writeln!(s, "{},{}", num(p[0]), num(p[1]));
    }
    s
}

pub fn encode_matches(matches: &[MatchPair]) -> String {
    let mut s = String::from("x1,y1,x2,y2\n");
    for m in matches {
        let _ = writeln!(s, "{},{},{},{}", num(m.x[0]), num(m.x[1]), num(m.y[0]), num(m.y[1]));
    }
    s
}

/// One label per line; `outlier` for the outlier label.
pub fn encode_labels(labels: &[usize]) -> String {
    let mut s = String::from("label\n");
    for &l in labels {
        if l == OUTLIER {
            s.push_str("outlier\n");
        } else {
            let _ = writeln!(s, "{l}");
        }
    }
    s
}

pub fn parse_labels(text: &[u8]) -> IoResult<Vec<usize>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(|e| IoError::Text { line: e.position().map_or(0, |p| p.line()), msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = rec.get(0).unwrap_or("");
        if field.is_empty() {
            continue;
        }
        if field == "outlier" {
            out.push(OUTLIER);
        } else if let Ok(v) = field.parse::<usize>() {
            out.push(v);
        } else if i > 0 {
            return text_err(line, format!("bad label {field:?}"));
        }
    }
    Ok(out)
}

/// Half-open boxes `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boxes {
    pub outer: Option<[usize; 4]>,
    pub inner: [usize; 4],
}

pub fn parse_boxes(text: &str) -> IoResult<Boxes> {
    let (mut outer, mut inner) = (None, None);
    for (i, raw) in text.lines().enumerate() {
        let line = (i + 1) as u64;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 5 {
            return text_err(line, "expected `outer|inner x0 y0 x1 y1`");
        }
        let mut v = [0usize; 4];
        for (j, p) in parts[1..].iter().enumerate() {
            v[j] = p.parse().map_err(|_| IoError::Text { line, msg: format!("bad coordinate {p:?}") })?;
        }
        if v[0] >= v[2] || v[1] >= v[3] {
            return text_err(line, "box is empty");
        }
        match parts[0] {
            "outer" => outer = Some(v),
            "inner" => inner = Some(v),
            other => return text_err(line, format!("unknown box kind {other:?}")),
        }
    }
    let inner = inner.ok_or(IoError::Text { line: 0, msg: "missing inner box".into() })?;
    Ok(Boxes { outer, inner })
}

pub fn encode_boxes(b: &Boxes) -> String {
    let mut s = String::new();
    if let Some(o) = b.outer {
        let _ = writeln!(s, "outer {} {} {} {}", o[0], o[1], o[2], o[3]);
    }
    let i = b.inner;
    let _ = writeln!(s, "inner {} {} {} {}", i[0], i[1], i[2], i[3]);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let g = GrayImage { width: 3, height: 2, pixels: vec![0, 1, 2, 253, 254, 255] };
        assert_eq!(parse_pnm(&encode_pgm(&g)).unwrap(), Image::Gray(g));
    }

    #[test]
    fn ppm_with_comment_parses() {
        let mut b = b"P6\n# made by hand\n1 1\n255\n".to_vec();
        b.extend_from_slice(&[10, 20, 30]);
        assert_eq!(parse_pnm(&b).unwrap(), Image::Color(ColorImage { width: 1, height: 1, pixels: vec![[10, 20, 30]] }));
    }

    #[test]
    fn errors_report_offsets() {
        let e = parse_pnm(b"P2\n1 1\n255\n0").unwrap_err();
        assert!(matches!(e, IoError::Pnm { offset: 1, .. }));
        let e = parse_pnm(b"P5\n2 2\n255\n\x01\x02").unwrap_err();
        assert!(matches!(e, IoError::Pnm { offset: 13, .. }), "{e}");
        let e = parse_pnm(b"P5\n2 x\n255\n").unwrap_err();
        assert!(matches!(e, IoError::Pnm { offset: 5, .. }), "{e}");
        let e = parse_pnm(b"P5\n1 1\n15\n\x00").unwrap_err();
        assert!(e.to_string().contains("maxval"));
    }

    #[test]
    fn csv_header_is_optional_and_errors_carry_lines() {
        assert_eq!(parse_points(b"x,y\n1,2\n3.5,-4\n").unwrap(), vec![[1.0, 2.0], [3.5, -4.0]]);
        assert_eq!(parse_points(b"1,2\n").unwrap(), vec![[1.0, 2.0]]);
        let e = parse_points(b"x,y\n1,2\n3,zz\n").unwrap_err();
        assert!(matches!(e, IoError::Text { line: 3, .. }), "{e}");
        let e = parse_matches(b"1,2,3\n").unwrap_err();
        assert!(matches!(e, IoError::Text { line: 1, .. }), "{e}");
    }

    #[test]
    fn text_round_trips() {
        let pts = vec![[0.1, 1.0 / 3.0], [-2.5e-7, 123456.789]];
        assert_eq!(parse_points(encode_points(&pts).as_bytes()).unwrap(), pts);
        let ms = vec![MatchPair { x: [0.5, 1.25], y: [std::f64::consts::PI, 7.0] }];
        assert_eq!(parse_matches(encode_matches(&ms).as_bytes()).unwrap(), ms);
        let ls = vec![0, 3, OUTLIER, 1];
        assert_eq!(parse_labels(encode_labels(&ls).as_bytes()).unwrap(), ls);
        let b = Boxes { outer: Some([0, 0, 10, 8]), inner: [2, 2, 5, 6] };
        assert_eq!(parse_boxes(&encode_boxes(&b)).unwrap(), b);
    }

    #[test]
    fn boxes_need_an_inner_box() {
        assert!(parse_boxes("outer 0 0 4 4\n").is_err());
        let e = parse_boxes("inner 3 3 1 5\n").unwrap_err();
        assert!(matches!(e, IoError::Text { line: 1, .. }));
    }
}
