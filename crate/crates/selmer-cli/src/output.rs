//! Number formatting and file plumbing shared by the commands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// `x` with 12 significant digits, no exponent for ordinary magnitudes,
/// trailing zeros dropped.
pub fn real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A buffered writer to `path`, or to stdout when no path is given.
pub fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(real(2.1007202306109042), "2.10072023061");
        assert_eq!(real(0.05398101), "0.05398101");
        assert_eq!(real(1.0), "1");
        assert_eq!(real(-0.25), "-0.25");
        assert_eq!(real(123456789012345.6), "123456789012346");
        assert_eq!(real(1.5e-9), "1.50000000000e-9");
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(2.1007202306109042), 2.10072023061);
    }
}
