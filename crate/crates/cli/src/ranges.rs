//! Value lists for sweeps and extents.

/// Ordered, non-empty list of sweep values.
#[derive(Debug, Clone, PartialEq)]
pub struct Range(pub Vec<f64>);

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

/// Parses `a:b` (unit step), `a:b:step` (inclusive) or `a,b,c`.
pub fn parse(s: &str) -> Result<Range, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty range".into());
    }
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (lo, hi, step) = match parts[..] {
            [a, b] => (number(a)?, number(b)?, 1.0),
            [a, b, c] => (number(a)?, number(b)?, number(c)?),
            _ => return Err(format!("expected a:b or a:b:step, got {s:?}")),
        };
        if step.is_nan() || step <= 0.0 {
            return Err("step must be positive".into());
        }
        let count = ((hi - lo) / step + 1e-9).floor();
        if count < 0.0 {
            return Err(format!("empty range {s:?}"));
        }
        (0..=count as usize).map(|i| lo + step * i as f64).collect()
    } else {
        s.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(format!("empty range {s:?}"));
    }
    Ok(Range(values))
}

pub fn parse_extent(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad extent {s:?}"))
        })
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [w, h, d] => Ok((w, h, d)),
        _ => Err(format!("extent must be WIDTHxHEIGHTxDEPTH, got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse("1:6").unwrap().0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(parse("10:40:15").unwrap().0, vec![10.0, 25.0, 40.0]);
        assert_eq!(parse("0.5:1:0.25").unwrap().0, vec![0.5, 0.75, 1.0]);
        assert_eq!(parse("10,110").unwrap().0, vec![10.0, 110.0]);
        assert_eq!(parse("7").unwrap().0, vec![7.0]);
    }

    #[test]
    fn empty_and_malformed() {
        for bad in ["", "  ", "6:1", "1:2:0", "1:2:3:4", "a:b", "1,,2"] {
            assert!(parse(bad).is_err(), "{bad:?}");
        }
        assert_eq!(parse_extent("48x48x32").unwrap(), (48, 48, 32));
        assert!(parse_extent("48x48").is_err());
    }
}
