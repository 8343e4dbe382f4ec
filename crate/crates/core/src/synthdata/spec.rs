//! Dataset specification and its `key = value` text form:
//!
//! ```text
//! # comments and blank lines are ignored
//! classes = harmonic_narrow harmonic_broad on_offset formant_gabor formant_sweep
//! train_shift = 2
//! test_shift = 5
//! noise = 0.5
//! train_per_class = 400
//! valid_per_class = 40
//! test_per_class = 100
//! seed = 1
//! ```
//!
//! Every key is optional; omitted keys keep the defaults above.

use crate::error::{Error, Result};

use super::{PatternClass, PatternKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: Vec<PatternClass>,
    /// Train and validation shifts are uniform over `−s..=s`.
    pub train_shift: u32,
    /// Test shifts have magnitude in `train_shift+1 ..= test_shift`.
    pub test_shift: u32,
    pub noise_stddev: f64,
    pub train_per_class: usize,
    pub valid_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: PatternKind::ALL
                .iter()
                .enumerate()
                .map(|(i, &k)| PatternClass::canonical(i, k))
                .collect(),
            train_shift: 2,
            test_shift: 5,
            noise_stddev: 0.5,
            train_per_class: 400,
            valid_per_class: 40,
            test_per_class: 100,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("synthetic spec has no classes".into()));
        }
        if self.test_shift <= self.train_shift {
            return Err(Error::Config(format!(
                "impossible annulus: test shift {} must exceed train shift {}",
                self.test_shift, self.train_shift
            )));
        }
        if !(self.noise_stddev >= 0.0 && self.noise_stddev.is_finite()) {
            return Err(Error::Config(format!("noise stddev {}", self.noise_stddev)));
        }
        if self.train_per_class == 0 {
            return Err(Error::Config("train_per_class must be positive".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let names: Vec<_> = self.classes.iter().map(|c| c.kind.name()).collect();
        format!(
            "classes = {}\ntrain_shift = {}\ntest_shift = {}\nnoise = {}\ntrain_per_class = {}\nvalid_per_class = {}\ntest_per_class = {}\nseed = {}\n",
            names.join(" "),
            self.train_shift,
            self.test_shift,
            self.noise_stddev,
            self.train_per_class,
            self.valid_per_class,
            self.test_per_class,
            self.seed
        )
    }
}

pub fn parse_spec(text: &str) -> Result<SynthSpec> {
    let mut spec = SynthSpec::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: n + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("invalid number `{v}`"))
        }
        let result: std::result::Result<(), String> = (|| {
            match key {
                "classes" => {
                    spec.classes = value
                        .split_whitespace()
                        .enumerate()
                        .map(|(i, name)| {
                            PatternKind::from_name(name)
                                .map(|k| PatternClass::canonical(i, k))
                                .ok_or_else(|| format!("unknown pattern `{name}`"))
                        })
                        .collect::<std::result::Result<_, _>>()?
                }
                "train_shift" => spec.train_shift = num(value)?,
                "test_shift" => spec.test_shift = num(value)?,
                "noise" => spec.noise_stddev = num(value)?,
                "train_per_class" => spec.train_per_class = num(value)?,
                "valid_per_class" => spec.valid_per_class = num(value)?,
                "test_per_class" => spec.test_per_class = num(value)?,
                "seed" => spec.seed = num(value)?,
                other => return Err(format!("unknown key `{other}`")),
            }
            Ok(())
        })();
        result.map_err(parse_err)?;
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_text() {
        let spec = SynthSpec::default();
        assert_eq!(parse_spec(&spec.to_text()).unwrap(), spec);
        assert_eq!(parse_spec("").unwrap(), spec);
    }

    #[test]
    fn overrides_and_errors() {
        let s = parse_spec("classes = on_offset formant_sweep\nseed = 9 # note\n").unwrap();
        assert_eq!(s.classes.len(), 2);
        assert_eq!(s.classes[1].id, 1);
        assert_eq!(s.seed, 9);
        assert!(matches!(parse_spec("test_shift = 2"), Err(Error::Config(_))));
        assert!(matches!(parse_spec("bogus = 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_spec("\nnoise = x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_spec("classes = chirp"), Err(Error::Parse { .. })));
    }
}
