use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use holoflow_core::expr::FieldAst;
use holoflow_core::geometry::Rect;
use num_complex::Complex64;

pub fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("{what}: expected {n} comma-separated numbers, got `{s}`"))?;
    if v.len() != n {
        bail!("{what}: expected {n} comma-separated numbers, got {}", v.len());
    }
    Ok(v)
}

pub fn parse_window(s: &str) -> Result<Rect> {
    let v = parse_list(s, 4, "--window")?;
    if !(v[0] < v[2] && v[1] < v[3]) || v.iter().any(|x| !x.is_finite()) {
        bail!("--window: need xmin<xmax and ymin<ymax, got `{s}`");
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

pub fn parse_res(s: &str) -> Result<(usize, usize)> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--res: expected nx,ny, got `{s}`"))?;
    let (nx, ny) = match v.as_slice() {
        [n] => (*n, *n),
        [nx, ny] => (*nx, *ny),
        _ => bail!("--res: expected nx,ny, got `{s}`"),
    };
    if nx < 16 || ny < 16 {
        bail!("--res: each resolution must be at least 16, got {nx},{ny}");
    }
    Ok((nx, ny))
}

/// A complex constant written in field syntax, e.g. `-2+0.5*i` or `exp(i*pi/4)`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let ast = FieldAst::parse(s).with_context(|| format!("cannot parse complex number `{s}`"))?;
    let a = ast.value(Complex64::new(0.0, 0.0));
    let b = ast.value(Complex64::new(1.0, 0.0));
    if a != b || !a.is_finite() {
        bail!("`{s}` is not a finite constant");
    }
    Ok(a)
}

/// `NAME=v1,v2,...`
pub fn parse_param(s: &str) -> Result<(String, Vec<f64>)> {
    let (name, vals) = s
        .split_once('=')
        .with_context(|| format!("--param: expected NAME=v1,v2,..., got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        bail!("--param: invalid parameter name `{name}`");
    }
    let vals = vals
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("--param: cannot parse values `{vals}`"))?;
    if vals.is_empty() {
        bail!("--param: no values");
    }
    Ok((name.to_string(), vals))
}

/// Writes `contents` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .with_context(|| format!("invalid output path {}", path.display()))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses() {
        assert_eq!(parse_complex("-2+0.5*i").unwrap(), Complex64::new(-2.0, 0.5));
        assert!(parse_complex("x").is_err());
        assert_eq!(parse_res("20").unwrap(), (20, 20));
        assert!(parse_res("8,32").is_err());
        assert!(parse_window("1,0,0,1").is_err());
        let (n, v) = parse_param("A=0,0.5").unwrap();
        assert_eq!((n.as_str(), v), ("A", vec![0.0, 0.5]));
    }
}
