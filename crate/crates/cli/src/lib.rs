//! File formats, experiment orchestration, and reporting for the subcover
//! solvers. The binary in this crate exposes the `generate`, `solve`,
//! `evaluate`, `lowerbound` and `bench` subcommands.

pub mod experiment;
pub mod format;
pub mod graph;
pub mod report;

use anyhow::Result;
use subcover_core::ratio::Ratio64;

/// Parses `"1/2"`, `"0.5"` or `"1"` into an exact rational.
pub fn parse_ratio(s: &str) -> Result<Ratio64> {
    if let Some((num, den)) = s.split_once('/') {
        let num: u64 = num.trim().parse()?;
        let den: u64 = den.trim().parse()?;
        anyhow::ensure!(den != 0, "zero denominator in {s:?}");
        return Ok(Ratio64::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        anyhow::ensure!((1..=9).contains(&digits), "1 to 9 decimal digits in {s:?}");
        let int: u64 = if int.is_empty() { 0 } else { int.parse()? };
        let frac: u64 = frac.parse()?;
        let den = 10u64.pow(digits);
        return Ok(Ratio64::new(int * den + frac, den));
    }
    Ok(Ratio64::new(s.trim().parse()?, 1))
}

/// Parses an inclusive round range: `"3"` or `"1..6"`.
pub fn parse_rounds(s: &str) -> Result<(u32, u32)> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse()?;
        let hi: u32 = hi.trim().parse()?;
        anyhow::ensure!(lo >= 1 && lo <= hi, "bad round range {s:?}");
        return Ok((lo, hi));
    }
    let r: u32 = s.trim().parse()?;
    anyhow::ensure!(r >= 1, "rounds must be at least 1");
    Ok((r, r))
}

/// Parses a comma-separated list of integers.
pub fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',').map(|x| Ok(x.trim().parse()?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_forms() {
        assert_eq!(parse_ratio("1/2").unwrap(), Ratio64::new(1, 2));
        assert_eq!(parse_ratio("0.25").unwrap(), Ratio64::new(1, 4));
        assert_eq!(parse_ratio("1").unwrap(), Ratio64::new(1, 1));
        assert_eq!(parse_ratio("0.1").unwrap(), Ratio64::new(1, 10));
        assert!(parse_ratio("1/0").is_err());
    }

    #[test]
    fn round_ranges() {
        assert_eq!(parse_rounds("3").unwrap(), (3, 3));
        assert_eq!(parse_rounds("1..6").unwrap(), (1, 6));
        assert!(parse_rounds("0").is_err());
        assert!(parse_rounds("5..2").is_err());
    }
}
