//! Text format for nomination profiles.
//!
//! ```text
//! impsel 1
//! model single
//! n 3
//! 0 2
//! 1 2
//! 2 0
//! ```
//!
//! One directed edge per line after the header. Lines starting with `#` and
//! blank lines are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::profile::{Model, NominationProfile};

pub const MAGIC: &str = "impsel";
pub const FORMAT_VERSION: u32 = 1;

pub fn load_profile(path: impl AsRef<Path>) -> Result<NominationProfile> {
    let text = std::fs::read_to_string(path)?;
    parse_profile(&text)
}

pub fn save_profile(profile: &NominationProfile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_profile(profile))?;
    Ok(())
}

pub fn format_profile(profile: &NominationProfile) -> String {
    let mut s = format!("{MAGIC} {FORMAT_VERSION}\nmodel {}\nn {}\n", profile.model(), profile.n());
    for (u, v) in profile.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

pub fn parse_profile(text: &str) -> Result<NominationProfile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 0, message: format!("missing `{key}` header") })?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(value), None) if k == key => Ok((no, value.to_string())),
            _ => Err(Error::Parse { line: no, message: format!("expected `{key} <value>`, got `{line}`") }),
        }
    };

    let (no, version) = header(&mut lines, MAGIC)?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::Parse { line: no, message: format!("unsupported format version {version}") });
    }
    let (no, model) = header(&mut lines, "model")?;
    let model: Model = model
        .parse()
        .map_err(|_| Error::Parse { line: no, message: format!("unknown model `{model}`") })?;
    let (no, n) = header(&mut lines, "n")?;
    let n: usize = n
        .parse()
        .map_err(|_| Error::Parse { line: no, message: format!("bad vertex count `{n}`") })?;
    if n < 2 {
        return Err(Error::Parse { line: no, message: format!("n must be at least 2, got {n}") });
    }

    let mut out = vec![Vec::new(); n];
    for (no, line) in lines {
        let mut parts = line.split_whitespace();
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => return Err(Error::Parse { line: no, message: format!("expected `<u> <v>`, got `{line}`") }),
        };
        let parse_vertex = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse { line: no, message: format!("bad vertex id `{s}`") })
        };
        let (u, v) = (parse_vertex(u)?, parse_vertex(v)?);
        if u >= n || v >= n {
            return Err(Error::VertexOutOfRange { vertex: u.max(v), n });
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if out[u].contains(&v) {
            return Err(Error::DuplicateEdge(u, v));
        }
        out[u].push(v);
    }
    NominationProfile::new(model, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycle() {
        let p = parse_profile("impsel 1\nmodel single\nn 2\n0 1\n1 0\n").unwrap();
        assert_eq!(p, NominationProfile::single(&[1, 0]).unwrap());
        assert_eq!(format_profile(&p), "impsel 1\nmodel single\nn 2\n0 1\n1 0\n");
    }

    #[test]
    fn comments_and_edge_order() {
        let p = parse_profile("# star\nimpsel 1\nmodel multi\nn 3\n# edges\n2 1\n2 0\n").unwrap();
        assert_eq!(p.out(2), &[0, 1]);
        assert!(p.out(0).is_empty());
    }

    #[test]
    fn abstention_in_single_model_is_rejected() {
        let err = parse_profile("impsel 1\nmodel single\nn 3\n0 1\n1 0\n").unwrap_err();
        assert!(matches!(err, Error::ModelViolation(_)), "{err}");
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_profile("impsel 2\nmodel single\nn 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_profile("impsel 1\nmodel both\nn 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_profile("impsel 1\nmodel multi\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_profile("impsel 1\nmodel multi\nn 3\n0 0\n"), Err(Error::SelfLoop(0))));
        assert!(matches!(
            parse_profile("impsel 1\nmodel multi\nn 3\n0 1\n0 1\n"),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            parse_profile("impsel 1\nmodel multi\nn 3\n0 7\n"),
            Err(Error::VertexOutOfRange { vertex: 7, n: 3 })
        ));
        assert!(matches!(parse_profile("impsel 1\nmodel multi\nn 3\n0 1 2\n"), Err(Error::Parse { line: 4, .. })));
    }
}
