//! Text feature and score files.
//!
//! A feature file holds the faces of one image for one modality:
//!
//! ```text
//! # gaffect features v1 modality=avgpool_rgb dim=512
//! 0.0132,-1.5e-3,...        <- one comma-separated row per face
//! ```
//!
//! A header-only file means no face was found. Blank lines and other `#`
//! lines are ignored. Numbers use `.` as the decimal point and may use
//! scientific notation; non-finite values are rejected.
//!
//! A score file holds the whole-image classifier output:
//!
//! ```text
//! # gaffect score v1
//! 0.1,0.2,0.7               <- Positive, Neutral, Negative
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, ParseErrorKind, Result};
use crate::features::{FeatureMatrix, Modality};
use crate::label::NUM_CLASSES;

const MARKER: &str = "# gaffect";
const VERSION: &str = "v1";

fn perr(path: &Path, line: usize, kind: ParseErrorKind) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        kind,
    }
}

fn is_header(line: &str) -> bool {
    line.starts_with(MARKER)
}

type Numbered<'a> = (usize, &'a str);

/// Splits `text` into its header (with line number) and the numbered data lines.
fn split_lines<'a>(text: &'a str, path: &Path) -> Result<(Numbered<'a>, Vec<Numbered<'a>>)> {
    let mut header = None;
    let mut data = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if is_header(line) {
            if header.is_some() {
                return Err(perr(path, n, ParseErrorKind::DuplicateHeader));
            }
            header = Some((n, line));
        } else if header.is_none() {
            return Err(perr(path, n, ParseErrorKind::MissingHeader));
        } else if !line.starts_with('#') {
            data.push((n, line));
        }
    }
    let header = header.ok_or_else(|| perr(path, 1, ParseErrorKind::MissingHeader))?;
    Ok((header, data))
}

fn parse_row(line: &str, n: usize, path: &Path) -> Result<Vec<f64>> {
    line.split(',')
        .map(|cell| {
            let cell = cell.trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| perr(path, n, ParseErrorKind::NonNumeric(cell.to_string())))?;
            if !v.is_finite() {
                return Err(perr(path, n, ParseErrorKind::NonFinite(cell.to_string())));
            }
            Ok(v)
        })
        .collect()
}

fn header_fields<'a>(header: &'a str, kind: &str, path: &Path, n: usize) -> Result<Vec<(&'a str, &'a str)>> {
    let bad = |msg: &str| perr(path, n, ParseErrorKind::BadHeader(msg.to_string()));
    let mut tokens = header[MARKER.len()..].split_whitespace();
    if tokens.next() != Some(kind) {
        return Err(bad(&format!("expected a `{kind}` file")));
    }
    match tokens.next() {
        Some(VERSION) => {}
        Some(v) => return Err(bad(&format!("unsupported version `{v}`"))),
        None => return Err(bad("missing version")),
    }
    tokens
        .map(|t| t.split_once('=').ok_or_else(|| bad(&format!("expected key=value, got `{t}`"))))
        .collect()
}

/// Parses a feature file. `expected` pins the modality and row width; without
/// it the header's own declaration is used.
pub fn parse_feature_file(
    text: &str,
    path: &Path,
    image_id: &str,
    expected: Option<(Modality, usize)>,
) -> Result<FeatureMatrix> {
    let ((hn, header), data) = split_lines(text, path)?;
    let bad = |msg: String| perr(path, hn, ParseErrorKind::BadHeader(msg));
    let mut modality = None;
    let mut dim = None;
    for (k, v) in header_fields(header, "features", path, hn)? {
        match k {
            "modality" => {
                modality = Some(
                    v.parse::<Modality>()
                        .map_err(|_| perr(path, hn, ParseErrorKind::UnknownModality(v.to_string())))?,
                )
            }
            "dim" => dim = Some(v.parse::<usize>().map_err(|_| bad(format!("bad dim `{v}`")))?),
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    let modality = modality.ok_or_else(|| bad("missing modality".into()))?;
    let dim = dim.ok_or_else(|| bad("missing dim".into()))?;
    if let Some((want_modality, want_dim)) = expected {
        if want_modality != modality {
            return Err(perr(
                path,
                hn,
                ParseErrorKind::ModalityMismatch {
                    expected: want_modality.to_string(),
                    found: modality.to_string(),
                },
            ));
        }
        if want_dim != dim {
            return Err(perr(
                path,
                hn,
                ParseErrorKind::DimensionMismatch {
                    expected: want_dim,
                    found: dim,
                },
            ));
        }
    }
    let mut matrix = FeatureMatrix::empty(image_id, modality, dim);
    for (n, line) in data {
        let row = parse_row(line, n, path)?;
        if row.len() != dim {
            return Err(perr(
                path,
                n,
                ParseErrorKind::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                },
            ));
        }
        matrix.push_row(&row)?;
    }
    Ok(matrix)
}

pub fn load_feature_file(
    path: &Path,
    image_id: &str,
    expected: Option<(Modality, usize)>,
) -> Result<FeatureMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_file(&text, path, image_id, expected)
}

pub fn format_feature_file(matrix: &FeatureMatrix) -> String {
    let mut out = format!(
        "{MARKER} features {VERSION} modality={} dim={}\n",
        matrix.modality(),
        matrix.dim()
    );
    for row in matrix.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // Display for f64 is the shortest string that round-trips
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_file(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    fs::write(path, format_feature_file(matrix)).map_err(|e| Error::io(path, e))
}

pub fn parse_score_file(text: &str, path: &Path) -> Result<[f64; NUM_CLASSES]> {
    let ((hn, header), data) = split_lines(text, path)?;
    if let Some((k, _)) = header_fields(header, "score", path, hn)?.first() {
        return Err(perr(path, hn, ParseErrorKind::BadHeader(format!("unknown key `{k}`"))));
    }
    let mut data = data.into_iter();
    let Some((n, line)) = data.next() else {
        return Err(perr(
            path,
            hn,
            ParseErrorKind::DimensionMismatch {
                expected: NUM_CLASSES,
                found: 0,
            },
        ));
    };
    if let Some((extra, _)) = data.next() {
        return Err(perr(path, extra, ParseErrorKind::BadHeader("score file holds a single row".into())));
    }
    let row = parse_row(line, n, path)?;
    let score: [f64; NUM_CLASSES] = row.as_slice().try_into().map_err(|_| {
        perr(
            path,
            n,
            ParseErrorKind::DimensionMismatch {
                expected: NUM_CLASSES,
                found: row.len(),
            },
        )
    })?;
    let sum: f64 = score.iter().sum();
    if score.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
        return Err(perr(path, n, ParseErrorKind::NotNormalized(sum)));
    }
    Ok(score)
}

pub fn load_score_file(path: &Path) -> Result<[f64; NUM_CLASSES]> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_score_file(&text, path)
}

pub fn format_score_file(score: &[f64; NUM_CLASSES]) -> String {
    format!("{MARKER} score {VERSION}\n{},{},{}\n", score[0], score[1], score[2])
}

pub fn write_score_file(path: &Path, score: &[f64; NUM_CLASSES]) -> Result<()> {
    fs::write(path, format_score_file(score)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("face.txt")
    }

    fn row(dim: usize, seed: f64) -> String {
        (0..dim).map(|j| format!("{}", seed + j as f64 * 0.25)).collect::<Vec<_>>().join(",")
    }

    fn kind(e: Error) -> (usize, ParseErrorKind) {
        match e {
            Error::Parse { line, kind, .. } => (line, kind),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn two_face_avgpool_file() {
        let text = format!(
            "# gaffect features v1 modality=avgpool_rgb dim=512\n{}\n{}\n",
            row(512, 0.0),
            row(512, 1.0)
        );
        let m = parse_feature_file(&text, p(), "img", Some((Modality::AvgpoolRgb, 512))).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.dim(), 512);
        assert_eq!(m.row(1)[2], 1.5);
    }

    #[test]
    fn header_only_means_no_faces() {
        let m = parse_feature_file("# gaffect features v1 modality=fc7_bgr dim=4096\n", p(), "img", None)
            .unwrap();
        assert_eq!(m.n_rows(), 0);
        assert_eq!(m.modality(), Modality::Fc7Bgr);
    }

    #[test]
    fn short_row_names_its_line() {
        let text = format!(
            "# gaffect features v1 modality=avgpool_rgb dim=512\n{}\n\n{}\n",
            row(512, 0.0),
            row(511, 0.0)
        );
        let (line, k) = kind(parse_feature_file(&text, p(), "img", None).unwrap_err());
        assert_eq!(line, 4);
        assert_eq!(k, ParseErrorKind::DimensionMismatch { expected: 512, found: 511 });
    }

    #[test]
    fn declared_dim_checked_against_expectation() {
        let text = "# gaffect features v1 modality=avgpool_rgb dim=511\n";
        let (line, k) =
            kind(parse_feature_file(text, p(), "img", Some((Modality::AvgpoolRgb, 512))).unwrap_err());
        assert_eq!(line, 1);
        assert_eq!(k, ParseErrorKind::DimensionMismatch { expected: 512, found: 511 });
        let (_, k) =
            kind(parse_feature_file(text, p(), "img", Some((Modality::Landmarks, 511))).unwrap_err());
        assert!(matches!(k, ParseErrorKind::ModalityMismatch { .. }));
    }

    #[test]
    fn non_numeric_cell() {
        let text = "# gaffect features v1 modality=landmarks dim=3\n1,2,3\n1,x,3\n";
        let (line, k) = kind(parse_feature_file(text, p(), "img", None).unwrap_err());
        assert_eq!((line, k), (3, ParseErrorKind::NonNumeric("x".into())));
        let text = "# gaffect features v1 modality=landmarks dim=2\n1,NaN\n";
        let (_, k) = kind(parse_feature_file(text, p(), "img", None).unwrap_err());
        assert_eq!(k, ParseErrorKind::NonFinite("NaN".into()));
    }

    #[test]
    fn locale_comma_decimal_is_rejected() {
        // "0,5" is two cells, so a dim=1 row fails on width
        let text = "# gaffect features v1 modality=landmarks dim=1\n0,5\n";
        let (_, k) = kind(parse_feature_file(text, p(), "img", None).unwrap_err());
        assert_eq!(k, ParseErrorKind::DimensionMismatch { expected: 1, found: 2 });
    }

    #[test]
    fn scientific_notation_accepted() {
        let text = "# gaffect features v1 modality=landmarks dim=3\n1e-3, 2.5E+2 ,-0\n";
        let m = parse_feature_file(text, p(), "img", None).unwrap();
        assert_eq!(m.row(0), &[0.001, 250.0, -0.0]);
    }

    #[test]
    fn duplicate_and_missing_headers() {
        let text = "# gaffect features v1 modality=landmarks dim=1\n1\n# gaffect features v1 modality=landmarks dim=1\n";
        let (line, k) = kind(parse_feature_file(text, p(), "img", None).unwrap_err());
        assert_eq!((line, k), (3, ParseErrorKind::DuplicateHeader));
        let (line, k) = kind(parse_feature_file("1,2\n", p(), "img", None).unwrap_err());
        assert_eq!((line, k), (1, ParseErrorKind::MissingHeader));
        let (_, k) = kind(parse_feature_file("", p(), "img", None).unwrap_err());
        assert_eq!(k, ParseErrorKind::MissingHeader);
    }

    #[test]
    fn bad_headers() {
        for h in [
            "# gaffect features v2 modality=landmarks dim=1",
            "# gaffect score v1",
            "# gaffect features v1 modality=landmarks",
            "# gaffect features v1 dim=3",
            "# gaffect features v1 modality=landmarks dim=3 extra=1",
        ] {
            assert!(parse_feature_file(h, p(), "img", None).is_err(), "{h}");
        }
        let (_, k) = kind(
            parse_feature_file("# gaffect features v1 modality=happy dim=1", p(), "img", None).unwrap_err(),
        );
        assert_eq!(k, ParseErrorKind::UnknownModality("happy".into()));
    }

    #[test]
    fn format_round_trips_exactly() {
        let m = FeatureMatrix::from_rows(
            "img",
            Modality::Landmarks,
            3,
            [vec![0.1, 1.0 / 3.0, 1e-300], vec![-2.5, 7.0, f64::MAX]],
        )
        .unwrap();
        let back = parse_feature_file(&format_feature_file(&m), p(), "img", None).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn score_files() {
        let s = parse_score_file("# gaffect score v1\n0.1,0.2,0.7\n", p()).unwrap();
        assert_eq!(s, [0.1, 0.2, 0.7]);
        assert_eq!(parse_score_file(&format_score_file(&[0.25, 0.5, 0.25]), p()).unwrap(), [0.25, 0.5, 0.25]);
        assert!(parse_score_file("# gaffect score v1\n0.1,0.2,0.6\n", p()).is_err());
        assert!(parse_score_file("# gaffect score v1\n0.5,0.5\n", p()).is_err());
        assert!(parse_score_file("# gaffect score v1\n", p()).is_err());
        assert!(parse_score_file("# gaffect score v1\n1,0,0\n1,0,0\n", p()).is_err());
    }
}
