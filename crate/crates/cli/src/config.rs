//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Dotted keys (`init.kind`) group related settings. Every key may appear at
//! most once and unknown keys are rejected.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `n` | required | modes per dimension (even, ≥ 4) |
//! | `l` | `2π` | box side length |
//! | `alpha` | required | dissipation order, `1/2 < alpha ≤ 1` |
//! | `k` | `1.0` | dissipation coefficient |
//! | `dt` | required | maximum time step |
//! | `t_end` | required | horizon |
//! | `cfl` | `0.5` | CFL coefficient in `(0, 1]` |
//! | `dealias` | `true` | 2/3-rule truncation of the advection term |
//! | `record_every` | `1` | steps between norm records |
//! | `snapshot_every` | `0` | steps between checkpoints (0 = final only) |
//! | `tolerance` | `1e-6` | absolute slack of the a-priori inequality |
//! | `thm2_threshold` | `0.05` | decay ratio required by `verify-thm2` |
//! | `output_dir` | `qg_out` | output directory |
//! | `init.kind` | required | `single_mode`, `two_mode`, `gaussian_spectrum`, `random_phase` |
//! | `init.amplitude` | `1.0` | amplitude `a` |
//! | `init.mode`, `init.mode2` | — | `m1,m2` mode indices |
//! | `init.peak`, `init.width` | `4`, `1` | gaussian spectrum parameters |
//! | `init.slope`, `init.cutoff` | `1.5`, `n/3` | random-phase parameters |
//! | `init.seed` | `0` | phase generator seed |
//! | `init.rng` | `chacha8` | phase generator (only `chacha8`) |
//! | `init.target_norm` | none | rescale to this `X^σ` norm |
//! | `init.target_sigma` | `1 − 2α` | `σ` used by `init.target_norm` |
//! | `sweep.alpha`, `sweep.k`, `sweep.target_norm` | none | comma lists for `qg sweep` |

use std::collections::BTreeMap;
use std::path::PathBuf;

use qg_core::diagnostics::DEFAULT_INEQUALITY_TOL;
use qg_core::initdata::RNG_NAME;
use qg_core::{critical_sigma, Grid, InitKind, InitSpec, SimParams};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }

    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "l",
    "alpha",
    "k",
    "dt",
    "t_end",
    "cfl",
    "dealias",
    "record_every",
    "snapshot_every",
    "tolerance",
    "thm2_threshold",
    "output_dir",
    "init.kind",
    "init.amplitude",
    "init.mode",
    "init.mode2",
    "init.peak",
    "init.width",
    "init.slope",
    "init.cutoff",
    "init.seed",
    "init.rng",
    "init.target_norm",
    "init.target_sigma",
    "sweep.alpha",
    "sweep.k",
    "sweep.target_norm",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRanges {
    pub alpha: Vec<f64>,
    pub k: Vec<f64>,
    pub target_norm: Vec<f64>,
}

impl SweepRanges {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty() && self.k.is_empty() && self.target_norm.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub params: SimParams,
    pub init: InitSpec,
    /// Whether `init.target_sigma` was given explicitly (otherwise it tracks alpha).
    pub explicit_target_sigma: bool,
    pub output_dir: PathBuf,
    pub snapshot_every: u64,
    pub tolerance: f64,
    pub thm2_threshold: f64,
    pub sweep: SweepRanges,
}

impl RunConfig {
    /// Copy of this configuration with new physical parameters, as used by sweeps.
    pub fn with_overrides(&self, alpha: f64, k: f64, target_norm: Option<f64>) -> Self {
        let mut out = self.clone();
        out.params.alpha = alpha;
        out.params.k = k;
        out.init.target_norm = target_norm;
        if !self.explicit_target_sigma {
            out.init.target_sigma = Some(critical_sigma(alpha));
        }
        out
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.0.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(e.line, format!("cannot parse `{key}` from `{}`", e.value))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        self.parse(key)?
            .ok_or_else(|| ConfigError::new(format!("missing required key `{key}`")))
    }

    fn mode(&mut self, key: &str) -> Result<Option<(i64, i64)>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => match (a.parse(), b.parse()) {
                (Ok(a), Ok(b)) => Ok(Some((a, b))),
                _ => Err(ConfigError::at(e.line, format!("`{key}` must be two integers `m1,m2`"))),
            },
            _ => Err(ConfigError::at(e.line, format!("`{key}` must be two integers `m1,m2`"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(Vec::new());
        };
        e.value
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError::at(e.line, format!("bad number `{}` in `{key}`", v.trim())))
            })
            .collect()
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some(e) = self.take(key) else {
            return Ok(None);
        };
        match e.value.as_str() {
            "true" | "on" | "1" => Ok(Some(true)),
            "false" | "off" | "0" => Ok(Some(false)),
            _ => Err(ConfigError::at(e.line, format!("`{key}` must be true or false"))),
        }
    }

    fn reject_kind_keys(&mut self, kind: &str, keys: &[&str]) -> Result<(), ConfigError> {
        for key in keys {
            if let Some(e) = self.take(key) {
                return Err(ConfigError::at(e.line, format!("`{key}` is not used by init.kind = {kind}")));
            }
        }
        Ok(())
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::at(line, "empty key or value"));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::at(line, format!("unknown key `{key}`")));
        }
        if let Some(prev) = map.get(key) {
            let Entry { line: first, .. } = prev;
            return Err(ConfigError::at(line, format!("duplicate key `{key}` (first set on line {first})")));
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(Entries(map))
}

fn check(cond: bool, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::new(message()))
    }
}

fn check_alpha(alpha: f64) -> Result<(), ConfigError> {
    check(alpha > 0.5 && alpha <= 1.0, || {
        format!("alpha = {alpha} is outside the admissible range 1/2 < alpha <= 1")
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut e = tokenize(text)?;

    let n: usize = e.required("n")?;
    let l: f64 = e.parse("l")?.unwrap_or(2.0 * std::f64::consts::PI);
    let grid = Grid::new(n, l).map_err(|err| ConfigError::new(err.to_string()))?;

    let alpha: f64 = e.required("alpha")?;
    check_alpha(alpha)?;
    let mut params = SimParams::new(alpha, e.required("dt")?, e.required("t_end")?);
    params.k = e.parse("k")?.unwrap_or(1.0);
    params.cfl_coeff = e.parse("cfl")?.unwrap_or(params.cfl_coeff);
    params.dealias_on = e.flag("dealias")?.unwrap_or(true);
    params.record_every = e.parse("record_every")?.unwrap_or(1);
    params
        .validate()
        .map_err(|err| ConfigError::new(err.to_string()))?;

    let snapshot_every: u64 = e.parse("snapshot_every")?.unwrap_or(0);
    check(snapshot_every % params.record_every == 0, || {
        format!(
            "snapshot_every = {snapshot_every} must be a multiple of record_every = {}",
            params.record_every
        )
    })?;
    let tolerance: f64 = e.parse("tolerance")?.unwrap_or(DEFAULT_INEQUALITY_TOL);
    check(tolerance >= 0.0, || format!("tolerance = {tolerance} must be >= 0"))?;
    let thm2_threshold: f64 = e.parse("thm2_threshold")?.unwrap_or(0.05);
    check(thm2_threshold > 0.0, || {
        format!("thm2_threshold = {thm2_threshold} must be > 0")
    })?;
    let output_dir = PathBuf::from(e.take("output_dir").map(|x| x.value).unwrap_or_else(|| "qg_out".into()));

    let kind_entry = e
        .take("init.kind")
        .ok_or_else(|| ConfigError::new("missing required key `init.kind`"))?;
    let kind = match kind_entry.value.as_str() {
        "single_mode" => {
            e.reject_kind_keys("single_mode", &["init.mode2", "init.peak", "init.width", "init.slope", "init.cutoff"])?;
            InitKind::SingleMode {
                mode: e
                    .mode("init.mode")?
                    .ok_or_else(|| ConfigError::new("single_mode needs `init.mode`"))?,
            }
        }
        "two_mode" => {
            e.reject_kind_keys("two_mode", &["init.peak", "init.width", "init.slope", "init.cutoff"])?;
            InitKind::TwoMode {
                first: e
                    .mode("init.mode")?
                    .ok_or_else(|| ConfigError::new("two_mode needs `init.mode`"))?,
                second: e
                    .mode("init.mode2")?
                    .ok_or_else(|| ConfigError::new("two_mode needs `init.mode2`"))?,
            }
        }
        "gaussian_spectrum" => {
            e.reject_kind_keys("gaussian_spectrum", &["init.mode", "init.mode2", "init.slope", "init.cutoff"])?;
            InitKind::GaussianSpectrum {
                peak: e.parse("init.peak")?.unwrap_or(4.0),
                width: e.parse("init.width")?.unwrap_or(1.0),
            }
        }
        "random_phase" => {
            e.reject_kind_keys("random_phase", &["init.mode", "init.mode2", "init.peak", "init.width"])?;
            InitKind::RandomPhase {
                slope: e.parse("init.slope")?.unwrap_or(1.5),
                cutoff: e.parse("init.cutoff")?,
            }
        }
        other => {
            return Err(ConfigError::at(
                kind_entry.line,
                format!("unknown init.kind `{other}` (expected single_mode, two_mode, gaussian_spectrum or random_phase)"),
            ))
        }
    };
    if let Some(rng) = e.take("init.rng") {
        check(rng.value == RNG_NAME, || {
            format!("line {}: init.rng = {} unsupported (only {RNG_NAME})", rng.line, rng.value)
        })?;
    }
    let explicit_sigma: Option<f64> = e.parse("init.target_sigma")?;
    let init = InitSpec {
        kind,
        amplitude: e.parse("init.amplitude")?.unwrap_or(1.0),
        seed: e.parse("init.seed")?.unwrap_or(0),
        target_norm: e.parse("init.target_norm")?,
        target_sigma: Some(explicit_sigma.unwrap_or(critical_sigma(alpha))),
    };
    if let Some(t) = init.target_norm {
        check(t >= 0.0 && t.is_finite(), || format!("init.target_norm = {t} must be >= 0"))?;
    }

    let sweep = SweepRanges {
        alpha: e.list("sweep.alpha")?,
        k: e.list("sweep.k")?,
        target_norm: e.list("sweep.target_norm")?,
    };
    for &a in &sweep.alpha {
        check_alpha(a)?;
    }
    for &k in &sweep.k {
        check(k > 0.0, || format!("sweep.k value {k} must be > 0"))?;
    }
    for &t in &sweep.target_norm {
        check(t >= 0.0, || format!("sweep.target_norm value {t} must be >= 0"))?;
    }

    debug_assert!(e.0.is_empty(), "unconsumed keys: {:?}", e.0.keys().collect::<Vec<_>>());
    let config = RunConfig {
        grid,
        params,
        init,
        explicit_target_sigma: explicit_sigma.is_some(),
        output_dir,
        snapshot_every,
        tolerance,
        thm2_threshold,
        sweep,
    };
    // surface mode overflows and similar before any computation starts
    qg_core::build(&config.init, config.grid).map_err(|err| ConfigError::new(err.to_string()))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
n = 64
l = 12.5
alpha = 0.75
k = 1.0
dt = 1e-3
t_end = 1.0
init.kind = single_mode
init.amplitude = 0.2
init.mode = 1,0
";

    #[test]
    fn minimal_config_echoes_values() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.n(), 64);
        assert_eq!(c.grid.l(), 12.5);
        assert_eq!(c.params.alpha, 0.75);
        assert_eq!(c.params.k, 1.0);
        assert_eq!(c.params.dt, 1e-3);
        assert_eq!(c.params.t_end, 1.0);
        assert!(c.params.dealias_on);
        assert_eq!(c.init.kind, InitKind::SingleMode { mode: (1, 0) });
        assert_eq!(c.init.amplitude, 0.2);
        assert_eq!(c.init.target_sigma, Some(-0.5));
        assert_eq!(c.tolerance, 1e-6);
        assert!(c.sweep.is_empty());
    }

    #[test]
    fn alpha_out_of_range_names_constraint() {
        let err = parse_config(&MINIMAL.replace("alpha = 0.75", "alpha = 0.4")).unwrap_err();
        assert!(err.message.contains("1/2 < alpha <= 1"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = parse_config(&format!("{MINIMAL}k = 2.0\n")).unwrap_err();
        assert_eq!(err.line, Some(10));
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config(&format!("{MINIMAL}init.amplitued = 0.3\n")).unwrap_err();
        assert!(err.message.contains("unknown key"));
    }

    #[test]
    fn missing_key_rejected() {
        let err = parse_config(&MINIMAL.replace("dt = 1e-3\n", "")).unwrap_err();
        assert!(err.message.contains("`dt`"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}", MINIMAL.replace("k = 1.0", "k = 2.0   # stronger"));
        assert_eq!(parse_config(&text).unwrap().params.k, 2.0);
    }

    #[test]
    fn kind_specific_keys() {
        let text = MINIMAL.replace("init.kind = single_mode", "init.kind = two_mode");
        assert!(parse_config(&text).is_err());
        let c = parse_config(&format!("{text}init.mode2 = 0,2\n")).unwrap();
        assert_eq!(
            c.init.kind,
            InitKind::TwoMode {
                first: (1, 0),
                second: (0, 2)
            }
        );
        let err = parse_config(&format!("{MINIMAL}init.peak = 3\n")).unwrap_err();
        assert!(err.message.contains("not used"));
    }

    #[test]
    fn mode_overflow_caught_at_parse_time() {
        let err = parse_config(&MINIMAL.replace("init.mode = 1,0", "init.mode = 40,0")).unwrap_err();
        assert!(err.message.contains("overflow"), "{err}");
    }

    #[test]
    fn sweep_lists_and_overrides() {
        let text = format!("{MINIMAL}sweep.alpha = 0.7, 0.9\nsweep.target_norm = 0.1,0.2\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.sweep.alpha, vec![0.7, 0.9]);
        assert_eq!(c.sweep.target_norm, vec![0.1, 0.2]);
        let member = c.with_overrides(0.9, 2.0, Some(0.1));
        assert!((member.init.target_sigma.unwrap() + 0.8).abs() < 1e-15);
        assert!(parse_config(&format!("{MINIMAL}sweep.alpha = 0.3\n")).is_err());
    }

    #[test]
    fn snapshot_must_align_with_records() {
        let text = format!("{MINIMAL}record_every = 4\nsnapshot_every = 6\n");
        assert!(parse_config(&text).is_err());
        let text = format!("{MINIMAL}record_every = 4\nsnapshot_every = 8\n");
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn rng_name_checked() {
        assert!(parse_config(&format!("{MINIMAL}init.rng = chacha8\n")).is_ok());
        assert!(parse_config(&format!("{MINIMAL}init.rng = mt19937\n")).is_err());
    }
}
