use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::inference::{ParamVector, PosteriorChain, PARAM_COUNT, PARAM_NAMES};

/// `b,phi,r,rho,beta1,...,beta6,log_posterior`.
pub fn chain_header() -> String {
    let mut h = PARAM_NAMES.join(",");
    h.push_str(",log_posterior");
    h
}

/// One post-burn-in sample per line.
pub fn write_chain(path: &Path, chain: &PosteriorChain) -> Result<()> {
    let mut out = chain_header();
    out.push('\n');
    for (s, lp) in chain.samples.iter().zip(&chain.log_posteriors) {
        for v in s.to_array() {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{lp}");
    }
    write_text(path, &out)
}

/// Reads a chain file. `observations` is the number of data cells the chain
/// was fitted to; the acceptance rate is estimated from repeated samples.
pub fn read_chain(path: &Path, observations: usize) -> Result<PosteriorChain> {
    parse_chain(&read_text(path)?, &path.display().to_string(), observations)
}

pub fn parse_chain(text: &str, origin: &str, observations: usize) -> Result<PosteriorChain> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == chain_header() => {}
        Some((i, h)) => {
            return Err(err(
                i + 1,
                format!("expected header `{}`, found `{h}`", chain_header()),
            ))
        }
        None => return Err(err(1, "empty chain file".into())),
    }
    let mut samples = Vec::new();
    let mut log_posteriors = Vec::new();
    for (i, line) in lines {
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| err(i + 1, e.to_string()))?;
        if values.len() != PARAM_COUNT + 1 {
            return Err(err(
                i + 1,
                format!("expected {} fields, found {}", PARAM_COUNT + 1, values.len()),
            ));
        }
        samples.push(ParamVector::from_slice(&values[..PARAM_COUNT])?);
        log_posteriors.push(values[PARAM_COUNT]);
    }
    let moves = samples.windows(2).filter(|w| w[0] != w[1]).count();
    let acceptance_rate = if samples.len() > 1 {
        moves as f64 / (samples.len() - 1) as f64
    } else {
        0.0
    };
    Ok(PosteriorChain {
        samples,
        log_posteriors,
        acceptance_rate,
        seed: 0,
        burn_in_length: 0,
        observations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header() {
        assert_eq!(
            chain_header(),
            "b,phi,r,rho,beta1,beta2,beta3,beta4,beta5,beta6,log_posterior"
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let a = ParamVector::new(0.41, 7.4, 2.6, 0.096, [20.0, 19.1, 0.1 + 0.2, 22.0, 1e-3, 18.5]);
        let b = ParamVector::new(1.0 / 3.0, 5.5, 1.7, 0.2, [21.0; 6]);
        let chain = PosteriorChain {
            samples: vec![a, a, b],
            log_posteriors: vec![-1234.5678, -1234.5678, -1000.0 / 7.0],
            acceptance_rate: 0.5,
            seed: 1,
            burn_in_length: 10,
            observations: 708,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_chain(&path, &chain).unwrap();
        let back = read_chain(&path, 708).unwrap();
        assert_eq!(back.samples, chain.samples);
        assert_eq!(back.log_posteriors, chain.log_posteriors);
        assert_eq!(back.acceptance_rate, 0.5);
        assert!(parse_chain("b,phi\n", "x", 1).is_err());
    }
}
