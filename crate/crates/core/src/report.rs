//! Check verdicts and residual reports.
//!
//! Every verification op in the crate reduces to: evaluate a residual over
//! seeded samples, compare against explicit thresholds, and report the
//! worst offender as a witness.  [`CheckReport`] is the single currency all
//! ops trade in; scenario runners and the CLI only aggregate it.

use serde::{Deserialize, Serialize};

/// Outcome of a single check.
///
/// `Approx` covers two honest middle grounds: residuals that land between
/// the pass and fail thresholds, and checks that are only meaningful up to
/// a stated resolution (dense-orbit tests on a finite grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "APPROX")]
    Approx,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
            Verdict::Approx => write!(f, "APPROX"),
        }
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PASS" => Ok(Verdict::Pass),
            "FAIL" => Ok(Verdict::Fail),
            "APPROX" => Ok(Verdict::Approx),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

/// Residual thresholds: below `pass` the check passes, above `fail` it
/// fails, in between it is reported as [`Verdict::Approx`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    pub pass: f64,
    pub fail: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            pass: 1e-6,
            fail: 1e-3,
        }
    }
}

impl Thresholds {
    pub fn new(pass: f64, fail: f64) -> Self {
        assert!(
            pass > 0.0 && pass < fail,
            "thresholds must satisfy 0 < pass < fail"
        );
        Thresholds { pass, fail }
    }

    /// Strict thresholds for identities that should hold to roundoff.
    pub fn strict(pass: f64) -> Self {
        Thresholds::new(pass, (pass * 1e3).min(1.0))
    }

    pub fn verdict(&self, residual: f64) -> Verdict {
        if residual < self.pass {
            Verdict::Pass
        } else if residual > self.fail {
            Verdict::Fail
        } else {
            Verdict::Approx
        }
    }
}

/// Mixed absolute/relative tolerance for comparing form values whose
/// natural magnitude varies across sample points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            atol: 1e-7,
            rtol: 1e-6,
        }
    }
}

impl Tolerances {
    /// Effective pass threshold at a given residual scale.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.atol + self.rtol * scale
    }
}

/// Worst offending sample of a check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub residual: f64,
    /// Coordinates identifying the sample (point, or domain parameters).
    pub location: Vec<f64>,
    pub detail: String,
}

/// Result of one verification op over its sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    /// Stable identifier of the check within its scenario.
    pub name: String,
    /// The op that produced it (`check_moment_condition`, `souriau_check`, ...).
    pub op: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Magnitude of the quantities compared, for reading the residuals.
    pub scale: f64,
    pub pass_below: f64,
    pub fail_above: f64,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One-line rendering used by the text report format.
    pub fn summary_line(&self) -> String {
        format!(
            "{:7} {}  max={:.3e} mean={:.3e} scale={:.3e} (pass<{:.1e}, n={})",
            self.verdict.to_string(),
            self.name,
            self.max_residual,
            self.mean_residual,
            self.scale,
            self.pass_below,
            self.samples
        )
    }
}

/// Streaming accumulator for residuals; keeps the worst sample as witness.
#[derive(Debug, Clone)]
pub struct ResidualAccumulator {
    max: f64,
    sum: f64,
    count: usize,
    scale: f64,
    witness: Option<Witness>,
}

impl Default for ResidualAccumulator {
    fn default() -> Self {
        ResidualAccumulator {
            max: 0.0,
            sum: 0.0,
            count: 0,
            scale: 0.0,
            witness: None,
        }
    }
}

impl ResidualAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one residual.  `scale` is the magnitude of the terms that
    /// were compared; `location`/`detail` identify the sample and are only
    /// retained if this is the new worst case.
    pub fn push(&mut self, residual: f64, scale: f64, location: &[f64], detail: &str) {
        self.sum += residual;
        self.count += 1;
        self.scale = self.scale.max(scale);
        if residual >= self.max {
            self.max = residual;
            self.witness = Some(Witness {
                residual,
                location: location.to_vec(),
                detail: detail.to_string(),
            });
        }
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn finish(
        self,
        name: impl Into<String>,
        op: impl Into<String>,
        thresholds: Thresholds,
        seed: u64,
    ) -> CheckReport {
        let mean = if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        };
        CheckReport {
            name: name.into(),
            op: op.into(),
            samples: self.count,
            max_residual: self.max,
            mean_residual: mean,
            scale: self.scale,
            pass_below: thresholds.pass,
            fail_above: thresholds.fail,
            verdict: thresholds.verdict(self.max),
            witness: self.witness,
            seed,
            notes: Vec::new(),
        }
    }
}
