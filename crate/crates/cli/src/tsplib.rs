//! Reader for the EUC_2D subset of TSPLIB.
//!
//! Recognized header keys are `NAME`, `TYPE` (must be `TSP`), `COMMENT`,
//! `DIMENSION` and `EDGE_WEIGHT_TYPE` (must be `EUC_2D`), followed by
//! `NODE_COORD_SECTION` with one `id x y` line per node and a closing `EOF`.
//! Node ids are not required to be contiguous; cities are numbered in file
//! order.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TsplibError {
    #[error("DIMENSION is {declared} but {found} coordinates were given")]
    DimensionMismatch { declared: usize, found: usize },
    #[error("EDGE_WEIGHT_TYPE {found} is not supported; supported: EUC_2D")]
    UnsupportedWeightType { found: String },
    #[error("TYPE {found} is not supported; supported: TSP")]
    UnsupportedProblemType { found: String },
    #[error("missing EOF marker")]
    MissingEof,
    #[error("missing {0}")]
    MissingKey(&'static str),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsplibInstance {
    pub name: String,
    pub dimension: usize,
    pub coords: Vec<[f64; 2]>,
}

pub fn parse_tsplib(text: &str) -> Result<TsplibInstance, TsplibError> {
    let mut name = None;
    let mut dimension = None;
    let mut weight_type = None;
    let mut in_coords = false;
    let mut saw_section = false;
    let mut coords = Vec::new();
    let mut saw_eof = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            saw_eof = true;
            break;
        }
        if line == "NODE_COORD_SECTION" {
            in_coords = true;
            saw_section = true;
            continue;
        }
        if in_coords {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let malformed = |message: String| TsplibError::Malformed { line: line_no, message };
            if parts.len() != 3 {
                return Err(malformed(format!("expected `id x y`, got {line:?}")));
            }
            parts[0]
                .parse::<u64>()
                .map_err(|_| malformed(format!("node id {:?} is not a positive integer", parts[0])))?;
            let mut xy = [0.0; 2];
            for (slot, s) in xy.iter_mut().zip(&parts[1..]) {
                *slot = s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| malformed(format!("coordinate {s:?} is not a finite number")))?;
            }
            coords.push(xy);
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| TsplibError::Malformed {
                line: line_no,
                message: format!("expected `KEY : value`, got {line:?}"),
            })?;
        match key {
            "NAME" => name = Some(value.to_string()),
            "COMMENT" => {}
            "TYPE" => {
                if value != "TSP" {
                    return Err(TsplibError::UnsupportedProblemType { found: value.to_string() });
                }
            }
            "DIMENSION" => {
                dimension = Some(value.parse::<usize>().map_err(|_| TsplibError::Malformed {
                    line: line_no,
                    message: format!("DIMENSION {value:?} is not a non-negative integer"),
                })?)
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EUC_2D" {
                    return Err(TsplibError::UnsupportedWeightType { found: value.to_string() });
                }
                weight_type = Some(());
            }
            other => {
                return Err(TsplibError::Malformed {
                    line: line_no,
                    message: format!("unsupported key {other}"),
                })
            }
        }
    }
    let dimension = dimension.ok_or(TsplibError::MissingKey("DIMENSION"))?;
    weight_type.ok_or(TsplibError::MissingKey("EDGE_WEIGHT_TYPE"))?;
    if !saw_section {
        return Err(TsplibError::MissingKey("NODE_COORD_SECTION"));
    }
    if !saw_eof {
        return Err(TsplibError::MissingEof);
    }
    if coords.len() != dimension {
        return Err(TsplibError::DimensionMismatch {
            declared: dimension,
            found: coords.len(),
        });
    }
    Ok(TsplibInstance {
        name: name.unwrap_or_default(),
        dimension,
        coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(dim: usize, weight: &str, nodes: &[(f64, f64)], eof: bool) -> String {
        let mut s = format!("NAME : tri\nTYPE : TSP\nDIMENSION : {dim}\nEDGE_WEIGHT_TYPE : {weight}\nNODE_COORD_SECTION\n");
        for (i, (x, y)) in nodes.iter().enumerate() {
            s.push_str(&format!("{} {x} {y}\n", i + 1));
        }
        if eof {
            s.push_str("EOF\n");
        }
        s
    }

    #[test]
    fn triangle() {
        let inst = parse_tsplib(&file(3, "EUC_2D", &[(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)], true)).unwrap();
        assert_eq!(inst.name, "tri");
        assert_eq!(inst.coords, vec![[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]);
    }

    #[test]
    fn distinct_errors() {
        let four = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert_eq!(
            parse_tsplib(&file(5, "EUC_2D", &four, true)),
            Err(TsplibError::DimensionMismatch { declared: 5, found: 4 })
        );
        let err = parse_tsplib(&file(4, "GEO", &four, true)).unwrap_err();
        assert_eq!(err, TsplibError::UnsupportedWeightType { found: "GEO".into() });
        assert!(err.to_string().contains("EUC_2D"));
        assert_eq!(parse_tsplib(&file(4, "EUC_2D", &four, false)), Err(TsplibError::MissingEof));
        let bad = file(4, "EUC_2D", &four, true).replace("3 1 1", "3 1 nan");
        assert!(matches!(parse_tsplib(&bad), Err(TsplibError::Malformed { line: 8, .. })));
    }
}
