//! Parsing of eta-quotient specs from the command line.
//!
//! Named forms: `partition` (1/eta(24z)), `delta` (eta(z)^24),
//! `tcore:T` (eta^T(24Tz)/eta(24z)), `unit:L` (the form congruent to 1 mod
//! the odd prime L). Raw quotients use `delta1:r1,delta2:r2@level`, e.g.
//! `24:-1@576`.

use anyhow::{anyhow, bail, Context, Result};
use newman_core::qseries::EtaQuotient;

pub fn parse_eta_spec(spec: &str) -> Result<EtaQuotient> {
    match spec {
        "partition" => return Ok(EtaQuotient::partition_stream()),
        "delta" => return Ok(EtaQuotient::delta()),
        _ => {}
    }
    if let Some(t) = spec.strip_prefix("tcore:") {
        let t: u32 = t.parse().context("t-core parameter")?;
        if t < 2 {
            bail!("t-core parameter must be >= 2");
        }
        return Ok(EtaQuotient::tcore_form(t));
    }
    if let Some(ell) = spec.strip_prefix("unit:") {
        let ell: u64 = ell.parse().context("unit-form prime")?;
        return EtaQuotient::unit_congruent_form(ell).map_err(|e| anyhow!("{e}"));
    }
    let (terms_part, level_part) = spec
        .split_once('@')
        .ok_or_else(|| anyhow!("raw quotients need `delta:r,...@level`"))?;
    let level: u64 = level_part.parse().context("level")?;
    let mut terms = Vec::new();
    for chunk in terms_part.split(',') {
        let (d, r) = chunk
            .split_once(':')
            .ok_or_else(|| anyhow!("term `{chunk}` is not `delta:r`"))?;
        terms.push((
            d.trim().parse::<u64>().context("delta")?,
            r.trim().parse::<i64>().context("exponent")?,
        ));
    }
    EtaQuotient::new(&terms, level).map_err(|e| anyhow!("{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_and_raw_specs() {
        assert_eq!(parse_eta_spec("partition").unwrap().terms(), &[(24, -1)]);
        assert_eq!(parse_eta_spec("delta").unwrap().level(), 1);
        assert_eq!(parse_eta_spec("tcore:4").unwrap().level(), 2304);
        assert_eq!(parse_eta_spec("unit:5").unwrap().terms(), &[(1, 25), (25, -1)]);
        let raw = parse_eta_spec("24:-1@576").unwrap();
        assert_eq!(raw, EtaQuotient::partition_stream());
        assert!(parse_eta_spec("24:-1").is_err());
        assert!(parse_eta_spec("tcore:1").is_err());
        assert!(parse_eta_spec("7:1@13").is_err()); // delta does not divide level
    }
}
