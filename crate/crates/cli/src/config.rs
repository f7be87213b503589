//! JSON experiment configs: structural validation that reports JSON-pointer
//! paths, then construction of the typed run descriptions.  The accepted
//! shape is published in `schema/config.schema.json`; the per-kind key
//! tables here are cross-checked against it in the tests.

use std::fmt;

use serde_json::{Map, Value};

use scenery_homog_core::covariance::CovarianceModel;
use scenery_homog_core::field::GridSpec;
use scenery_homog_core::fk::InitialData;

/// Validation failure, located by a JSON pointer into the config document.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    fn new(pointer: &str, message: impl Into<String>) -> Self {
        Self {
            pointer: if pointer.is_empty() { "/".into() } else { pointer.into() },
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.pointer, self.message)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Effective,
    Homogenize,
    Scenery,
    Corrector,
    Spde,
    FieldCheck,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Effective,
        Kind::Homogenize,
        Kind::Scenery,
        Kind::Corrector,
        Kind::Spde,
        Kind::FieldCheck,
    ];

    /// Name used in config files (and, with `-` for `_`, as the subcommand).
    pub fn config_name(self) -> &'static str {
        match self {
            Kind::Effective => "effective",
            Kind::Homogenize => "homogenize",
            Kind::Scenery => "scenery",
            Kind::Corrector => "corrector",
            Kind::Spde => "spde",
            Kind::FieldCheck => "field_check",
        }
    }

    pub fn from_config_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.config_name() == s)
    }
}

/// Top-level keys accepted per experiment kind.
pub fn allowed_keys(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Effective => &["kind", "model", "master_seed", "out"],
        Kind::Homogenize => {
            &["kind", "model", "master_seed", "out", "alpha", "t", "x", "f", "eps_schedule", "budgets"]
        }
        Kind::Scenery => {
            &["kind", "model", "master_seed", "out", "regime", "alpha", "t", "eps_schedule", "budgets", "block"]
        }
        Kind::Corrector => &["kind", "model", "master_seed", "out", "alpha", "lambda_schedule"],
        Kind::Spde => {
            &["kind", "model", "master_seed", "out", "t", "x", "f", "moments", "eps_schedule", "budgets", "cauchy"]
        }
        Kind::FieldCheck => {
            &["kind", "model", "master_seed", "out", "backends", "lags", "budgets", "grid"]
        }
    }
}

/// Keys accepted inside the `budgets` section per kind.
pub fn budget_keys(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Homogenize => &["n_paths", "n_fields", "dt", "j_modes"],
        Kind::Scenery => &["n_paths", "n_fields", "dt", "j_modes"],
        Kind::Spde => &["n_path_tuples", "n_fields", "dt", "j_modes"],
        Kind::FieldCheck => &["n_realizations", "j_modes"],
        Kind::Effective | Kind::Corrector => &[],
    }
}

#[derive(Debug, Clone)]
pub struct Common {
    pub model: CovarianceModel,
    pub master_seed: u64,
    pub out: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EffectiveConfig {
    pub common: Common,
}

#[derive(Debug, Clone)]
pub struct HomogenizeConfig {
    pub common: Common,
    pub alpha: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub f: InitialData,
    pub eps_schedule: Vec<f64>,
    pub n_paths: u64,
    pub n_fields: u64,
    pub dt: f64,
    pub j_modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneryRegimeName {
    TimeMixing,
    SpaceMixing,
    WhiteNoise,
}

#[derive(Debug, Clone)]
pub struct SceneryConfig {
    pub common: Common,
    pub regime: SceneryRegimeName,
    /// Present for the mixing regimes, absent for white noise.
    pub alpha: Option<f64>,
    pub t: f64,
    pub eps_schedule: Vec<f64>,
    pub n_paths: u64,
    pub n_fields: u64,
    /// Defaults to the regime's resolution policy when absent.
    pub dt: Option<f64>,
    pub j_modes: usize,
    pub block: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct CorrectorConfig {
    pub common: Common,
    pub alpha: f64,
    pub lambda_schedule: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct CauchyConfig {
    pub eps_moll: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct SpdeConfig {
    pub common: Common,
    pub t: f64,
    pub x: Vec<f64>,
    pub f: InitialData,
    pub moments: Vec<(u32, u32)>,
    pub eps_schedule: Vec<f64>,
    pub n_path_tuples: u64,
    pub n_fields: u64,
    pub dt: f64,
    pub j_modes: usize,
    pub cauchy: Option<CauchyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Harmonic,
    Grid,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Harmonic => "harmonic",
            Backend::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldCheckConfig {
    pub common: Common,
    pub backends: Vec<Backend>,
    pub n_realizations: u64,
    pub j_modes: usize,
    pub grid: Option<GridSpec>,
    /// Explicit lags, or the model-scaled defaults when absent.
    pub lags: Option<Vec<(f64, Vec<f64>)>>,
}

#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    Effective(EffectiveConfig),
    Homogenize(HomogenizeConfig),
    Scenery(SceneryConfig),
    Corrector(CorrectorConfig),
    Spde(SpdeConfig),
    FieldCheck(FieldCheckConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> Kind {
        match self {
            ExperimentConfig::Effective(_) => Kind::Effective,
            ExperimentConfig::Homogenize(_) => Kind::Homogenize,
            ExperimentConfig::Scenery(_) => Kind::Scenery,
            ExperimentConfig::Corrector(_) => Kind::Corrector,
            ExperimentConfig::Spde(_) => Kind::Spde,
            ExperimentConfig::FieldCheck(_) => Kind::FieldCheck,
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            ExperimentConfig::Effective(c) => &c.common,
            ExperimentConfig::Homogenize(c) => &c.common,
            ExperimentConfig::Scenery(c) => &c.common,
            ExperimentConfig::Corrector(c) => &c.common,
            ExperimentConfig::Spde(c) => &c.common,
            ExperimentConfig::FieldCheck(c) => &c.common,
        }
    }

    fn common_mut(&mut self) -> &mut Common {
        match self {
            ExperimentConfig::Effective(c) => &mut c.common,
            ExperimentConfig::Homogenize(c) => &mut c.common,
            ExperimentConfig::Scenery(c) => &mut c.common,
            ExperimentConfig::Corrector(c) => &mut c.common,
            ExperimentConfig::Spde(c) => &mut c.common,
            ExperimentConfig::FieldCheck(c) => &mut c.common,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.common_mut().master_seed = seed;
    }

    pub fn set_out(&mut self, out: String) {
        self.common_mut().out = Some(out);
    }
}

/// One node of the config document plus its pointer, the unit all checks
/// report against.
struct Node<'a> {
    v: &'a Value,
    path: String,
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

impl<'a> Node<'a> {
    fn root(v: &'a Value) -> Self {
        Node { v, path: String::new() }
    }

    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::new(&self.path, message)
    }

    fn obj(&self) -> CResult<&'a Map<String, Value>> {
        self.v.as_object().ok_or_else(|| self.err("expected an object"))
    }

    fn check_keys(&self, allowed: &[&str]) -> CResult<()> {
        for key in self.obj()?.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError::new(
                    &format!("{}/{}", self.path, escape(key)),
                    format!("unknown field (allowed: {})", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    fn field(&self, name: &str) -> CResult<Node<'a>> {
        match self.obj()?.get(name) {
            Some(v) => Ok(Node {
                v,
                path: format!("{}/{}", self.path, escape(name)),
            }),
            None => Err(self.err(format!("missing required field `{name}`"))),
        }
    }

    fn opt(&self, name: &str) -> CResult<Option<Node<'a>>> {
        Ok(match self.obj()?.get(name) {
            Some(Value::Null) | None => None,
            Some(v) => Some(Node {
                v,
                path: format!("{}/{}", self.path, escape(name)),
            }),
        })
    }

    fn f64(&self) -> CResult<f64> {
        self.v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err("expected a finite number"))
    }

    fn pos_f64(&self) -> CResult<f64> {
        let x = self.f64()?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.err("must be positive"))
        }
    }

    fn u64(&self) -> CResult<u64> {
        self.v.as_u64().ok_or_else(|| self.err("expected a nonnegative integer"))
    }

    fn str(&self) -> CResult<&'a str> {
        self.v.as_str().ok_or_else(|| self.err("expected a string"))
    }

    fn array(&self) -> CResult<Vec<Node<'a>>> {
        let items = self.v.as_array().ok_or_else(|| self.err("expected an array"))?;
        Ok(items
            .iter()
            .enumerate()
            .map(|(i, v)| Node {
                v,
                path: format!("{}/{i}", self.path),
            })
            .collect())
    }

    fn f64_array(&self) -> CResult<Vec<f64>> {
        self.array()?.iter().map(|n| n.f64()).collect()
    }
}

fn parse_model(node: &Node) -> CResult<CovarianceModel> {
    node.check_keys(&["kind", "amplitude", "ell_t", "ell_x", "d", "taper_radius"])?;
    let kind = node.field("kind")?;
    let kind_s = kind.str()?;
    let amplitude = node.field("amplitude")?.pos_f64()?;
    let ell_t = node.field("ell_t")?.pos_f64()?;
    let ell_x = node.field("ell_x")?.pos_f64()?;
    let d_node = node.field("d")?;
    let d = d_node.u64()?;
    if !(1..=4).contains(&d) {
        return Err(d_node.err("dimension must be between 1 and 4"));
    }
    let taper = node.opt("taper_radius")?;
    let built = match kind_s {
        "gaussian_separable" => {
            if let Some(t) = taper {
                return Err(t.err("only meaningful for tapered_gaussian"));
            }
            CovarianceModel::gaussian(amplitude, ell_t, ell_x, d as usize)
        }
        "tapered_gaussian" => {
            let t = taper.ok_or_else(|| node.err("missing required field `taper_radius`"))?;
            CovarianceModel::tapered(amplitude, ell_t, ell_x, d as usize, t.pos_f64()?)
        }
        other => {
            return Err(kind.err(format!(
                "unknown model kind `{other}` (expected gaussian_separable or tapered_gaussian)"
            )))
        }
    };
    built.map_err(|e| node.err(e.to_string()))
}

fn parse_initial_data(node: &Node, d: usize) -> CResult<InitialData> {
    let kind = node.field("kind")?;
    match kind.str()? {
        "cosine_wave" => {
            node.check_keys(&["kind", "kappa"])?;
            let kn = node.field("kappa")?;
            let kappa = kn.f64_array()?;
            if kappa.len() != d {
                return Err(kn.err(format!("length must match the model dimension {d}")));
            }
            Ok(InitialData::CosineWave { kappa })
        }
        "gaussian_bump" => {
            node.check_keys(&["kind", "center", "width"])?;
            let cn = node.field("center")?;
            let center = cn.f64_array()?;
            if center.len() != d {
                return Err(cn.err(format!("length must match the model dimension {d}")));
            }
            let width = node.field("width")?.pos_f64()?;
            Ok(InitialData::GaussianBump { center, width })
        }
        "constant" => {
            node.check_keys(&["kind", "c"])?;
            Ok(InitialData::Constant {
                c: node.field("c")?.f64()?,
            })
        }
        other => Err(kind.err(format!(
            "unknown initial data kind `{other}` (expected cosine_wave, gaussian_bump, or constant)"
        ))),
    }
}

fn parse_point(node: &Node, d: usize) -> CResult<Vec<f64>> {
    let x = node.f64_array()?;
    if x.len() != d {
        return Err(node.err(format!("length must match the model dimension {d}")));
    }
    Ok(x)
}

/// Strictly decreasing schedule inside (0, 1].
fn parse_eps_schedule(node: &Node) -> CResult<Vec<f64>> {
    let items = node.array()?;
    if items.is_empty() {
        return Err(node.err("schedule must not be empty"));
    }
    let mut out = Vec::with_capacity(items.len());
    for item in &items {
        let e = item.f64()?;
        if !(e > 0.0 && e <= 1.0) {
            return Err(item.err("epsilon must lie in (0, 1]"));
        }
        if let Some(&prev) = out.last() {
            if e >= prev {
                return Err(item.err("schedule must be strictly decreasing"));
            }
        }
        out.push(e);
    }
    Ok(out)
}

fn parse_common(root: &Node) -> CResult<Common> {
    let model = parse_model(&root.field("model")?)?;
    let master_seed = root.field("master_seed")?.u64()?;
    let out = match root.opt("out")? {
        Some(n) => Some(n.str()?.to_string()),
        None => None,
    };
    Ok(Common { model, master_seed, out })
}

fn parse_moments(node: &Node) -> CResult<Vec<(u32, u32)>> {
    let items = node.array()?;
    if items.is_empty() {
        return Err(node.err("need at least one (n1, n2) pair"));
    }
    let mut out = Vec::with_capacity(items.len());
    for item in &items {
        let pair = item.array()?;
        if pair.len() != 2 {
            return Err(item.err("expected a [n1, n2] pair"));
        }
        let n1 = pair[0].u64()?;
        let n2 = pair[1].u64()?;
        if n1 + n2 == 0 {
            return Err(item.err("moment needs at least one factor"));
        }
        if n1 > 8 || n2 > 8 {
            return Err(item.err("factor counts above 8 are not supported"));
        }
        out.push((n1 as u32, n2 as u32));
    }
    Ok(out)
}

fn parse_lags(node: &Node, d: usize) -> CResult<Vec<(f64, Vec<f64>)>> {
    let items = node.array()?;
    if items.is_empty() {
        return Err(node.err("need at least one lag"));
    }
    let mut out = Vec::with_capacity(items.len());
    for item in &items {
        let pair = item.array()?;
        if pair.len() != 2 {
            return Err(item.err("expected a [t_lag, x_lag] pair"));
        }
        let t = pair[0].f64()?;
        let x = parse_point(&pair[1], d)?;
        out.push((t, x));
    }
    Ok(out)
}

/// Parse and validate a config document.  Returns the typed config plus the
/// canonical `Value` used for hashing and the manifest.
pub fn parse_config(text: &str) -> CResult<(ExperimentConfig, Value)> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::new("/", format!("invalid JSON: {e}")))?;
    let config = validate(&value)?;
    Ok((config, value))
}

fn validate(value: &Value) -> CResult<ExperimentConfig> {
    let root = Node::root(value);
    let kind_node = root.field("kind")?;
    let kind_s = kind_node.str()?;
    let kind = Kind::from_config_name(kind_s).ok_or_else(|| {
        kind_node.err(format!(
            "unknown experiment kind `{kind_s}` (expected one of: {})",
            Kind::ALL.map(|k| k.config_name()).join(", ")
        ))
    })?;
    root.check_keys(allowed_keys(kind))?;
    let common = parse_common(&root)?;
    let d = common.model.d();

    match kind {
        Kind::Effective => Ok(ExperimentConfig::Effective(EffectiveConfig { common })),
        Kind::Homogenize => {
            let alpha_node = root.field("alpha")?;
            let alpha = alpha_node.f64()?;
            if alpha < 0.0 {
                return Err(alpha_node.err("alpha must be nonnegative"));
            }
            let t = root.field("t")?.pos_f64()?;
            let x = parse_point(&root.field("x")?, d)?;
            let f = parse_initial_data(&root.field("f")?, d)?;
            let eps_schedule = parse_eps_schedule(&root.field("eps_schedule")?)?;
            if eps_schedule.len() < 2 {
                return Err(root.field("eps_schedule")?.err("need at least two epsilons"));
            }
            let b = root.field("budgets")?;
            b.check_keys(budget_keys(kind))?;
            let n_paths = positive_count(&b.field("n_paths")?)?;
            let n_fields = positive_count(&b.field("n_fields")?)?;
            if n_fields < 2 {
                return Err(b.field("n_fields")?.err("need at least two field realizations"));
            }
            let dt = b.field("dt")?.pos_f64()?;
            let j_modes = positive_count(&b.field("j_modes")?)? as usize;
            Ok(ExperimentConfig::Homogenize(HomogenizeConfig {
                common,
                alpha,
                t,
                x,
                f,
                eps_schedule,
                n_paths,
                n_fields,
                dt,
                j_modes,
            }))
        }
        Kind::Scenery => {
            let regime_node = root.field("regime")?;
            let regime = match regime_node.str()? {
                "time_mixing" => SceneryRegimeName::TimeMixing,
                "space_mixing" => SceneryRegimeName::SpaceMixing,
                "white_noise" => SceneryRegimeName::WhiteNoise,
                other => {
                    return Err(regime_node.err(format!(
                        "unknown regime `{other}` (expected time_mixing, space_mixing, or white_noise)"
                    )))
                }
            };
            let alpha = match (regime, root.opt("alpha")?) {
                (SceneryRegimeName::WhiteNoise, Some(n)) => {
                    return Err(n.err("white_noise takes no alpha"))
                }
                (SceneryRegimeName::WhiteNoise, None) => None,
                (_, None) => return Err(root.err("missing required field `alpha`")),
                (SceneryRegimeName::TimeMixing, Some(n)) => {
                    let a = n.f64()?;
                    if !(a > 2.0) {
                        return Err(n.err("time_mixing needs alpha > 2"));
                    }
                    Some(a)
                }
                (SceneryRegimeName::SpaceMixing, Some(n)) => {
                    let a = n.f64()?;
                    if !(0.0..=2.0).contains(&a) {
                        return Err(n.err("space_mixing needs 0 <= alpha <= 2"));
                    }
                    Some(a)
                }
            };
            let t = root.field("t")?.pos_f64()?;
            let eps_schedule = parse_eps_schedule(&root.field("eps_schedule")?)?;
            let b = root.field("budgets")?;
            b.check_keys(budget_keys(kind))?;
            let n_paths = positive_count(&b.field("n_paths")?)?;
            let n_fields = positive_count(&b.field("n_fields")?)?;
            let dt = match b.opt("dt")? {
                Some(n) => Some(n.pos_f64()?),
                None => None,
            };
            let j_modes = positive_count(&b.field("j_modes")?)? as usize;
            let block = match root.opt("block")? {
                Some(bn) => {
                    bn.check_keys(&["gamma1", "gamma2"])?;
                    let g1 = bn.field("gamma1")?.pos_f64()?;
                    let g2 = bn.field("gamma2")?.pos_f64()?;
                    if !(g2 < g1 && g1 < 2.0) {
                        return Err(bn.err("need 0 < gamma2 < gamma1 < 2"));
                    }
                    Some((g1, g2))
                }
                None => None,
            };
            Ok(ExperimentConfig::Scenery(SceneryConfig {
                common,
                regime,
                alpha,
                t,
                eps_schedule,
                n_paths,
                n_fields,
                dt,
                j_modes,
                block,
            }))
        }
        Kind::Corrector => {
            let alpha_node = root.field("alpha")?;
            let alpha = alpha_node.f64()?;
            if !(0.0..=2.0).contains(&alpha) {
                return Err(alpha_node.err("corrector scans need 0 <= alpha <= 2"));
            }
            let sched_node = root.field("lambda_schedule")?;
            let items = sched_node.array()?;
            if items.is_empty() {
                return Err(sched_node.err("schedule must not be empty"));
            }
            let mut lambda_schedule = Vec::with_capacity(items.len());
            for item in &items {
                let l = item.pos_f64()?;
                if l > 1.0 {
                    return Err(item.err("lambda must lie in (0, 1] so that epsilon = sqrt(lambda) does"));
                }
                if let Some(&prev) = lambda_schedule.last() {
                    if l >= prev {
                        return Err(item.err("schedule must be strictly decreasing"));
                    }
                }
                lambda_schedule.push(l);
            }
            Ok(ExperimentConfig::Corrector(CorrectorConfig {
                common,
                alpha,
                lambda_schedule,
            }))
        }
        Kind::Spde => {
            let t = root.field("t")?.pos_f64()?;
            let x = parse_point(&root.field("x")?, d)?;
            let f = parse_initial_data(&root.field("f")?, d)?;
            let moments = parse_moments(&root.field("moments")?)?;
            let eps_schedule = parse_eps_schedule(&root.field("eps_schedule")?)?;
            let b = root.field("budgets")?;
            b.check_keys(budget_keys(kind))?;
            let n_path_tuples = positive_count(&b.field("n_path_tuples")?)?;
            let n_fields = positive_count(&b.field("n_fields")?)?;
            if n_fields < 2 {
                return Err(b.field("n_fields")?.err("need at least two field realizations"));
            }
            let dt = b.field("dt")?.pos_f64()?;
            let j_modes = positive_count(&b.field("j_modes")?)? as usize;
            let cauchy = match root.opt("cauchy")? {
                Some(cn) => {
                    cn.check_keys(&["eps_moll", "dt"])?;
                    Some(CauchyConfig {
                        eps_moll: cn.field("eps_moll")?.pos_f64()?,
                        dt: cn.field("dt")?.pos_f64()?,
                    })
                }
                None => None,
            };
            Ok(ExperimentConfig::Spde(SpdeConfig {
                common,
                t,
                x,
                f,
                moments,
                eps_schedule,
                n_path_tuples,
                n_fields,
                dt,
                j_modes,
                cauchy,
            }))
        }
        Kind::FieldCheck => {
            let backends_node = root.field("backends")?;
            let items = backends_node.array()?;
            if items.is_empty() {
                return Err(backends_node.err("need at least one backend"));
            }
            let mut backends = Vec::with_capacity(items.len());
            for item in &items {
                let backend = match item.str()? {
                    "harmonic" => Backend::Harmonic,
                    "grid" => Backend::Grid,
                    other => {
                        return Err(item.err(format!(
                            "unknown backend `{other}` (expected harmonic or grid)"
                        )))
                    }
                };
                if backends.contains(&backend) {
                    return Err(item.err("backend listed twice"));
                }
                backends.push(backend);
            }
            let b = root.field("budgets")?;
            b.check_keys(budget_keys(kind))?;
            let n_node = b.field("n_realizations")?;
            let n_realizations = n_node.u64()?;
            if n_realizations < 100 {
                return Err(n_node.err("must be at least 100"));
            }
            let j_modes = positive_count(&b.field("j_modes")?)? as usize;
            let grid = match root.opt("grid")? {
                Some(gn) => {
                    gn.check_keys(&["periods", "spacings"])?;
                    let pn = gn.field("periods")?;
                    let sn = gn.field("spacings")?;
                    let periods = pn.f64_array()?;
                    let spacings = sn.f64_array()?;
                    if periods.len() != d + 1 || spacings.len() != d + 1 {
                        return Err(gn.err(format!(
                            "periods and spacings need d + 1 = {} entries (time axis first)",
                            d + 1
                        )));
                    }
                    // Mirror the synthesis-time grid rules so violations are
                    // caught here with a pointer instead of mid-run.
                    for axis in 0..=d {
                        let ell = if axis == 0 { common.model.ell_t() } else { common.model.ell_x() };
                        let p = periods[axis];
                        let h = spacings[axis];
                        if !(p > 0.0) {
                            return Err(ConfigError::new(
                                &format!("{}/{axis}", pn.path),
                                "must be positive",
                            ));
                        }
                        if !(h > 0.0) {
                            return Err(ConfigError::new(
                                &format!("{}/{axis}", sn.path),
                                "must be positive",
                            ));
                        }
                        if p < 8.0 * ell {
                            return Err(ConfigError::new(
                                &format!("{}/{axis}", pn.path),
                                format!("period must cover at least 8 correlation lengths ({})", 8.0 * ell),
                            ));
                        }
                        if h > ell / 4.0 + 1e-12 {
                            return Err(ConfigError::new(
                                &format!("{}/{axis}", sn.path),
                                format!("spacing must resolve the correlation length (at most {})", ell / 4.0),
                            ));
                        }
                    }
                    Some(GridSpec { periods, spacings })
                }
                None => None,
            };
            if backends.contains(&Backend::Grid) && grid.is_none() {
                return Err(root.err("missing required field `grid` (the grid backend is requested)"));
            }
            let lags = match root.opt("lags")? {
                Some(ln) => Some(parse_lags(&ln, d)?),
                None => None,
            };
            Ok(ExperimentConfig::FieldCheck(FieldCheckConfig {
                common,
                backends,
                n_realizations,
                j_modes,
                grid,
                lags,
            }))
        }
    }
}

fn positive_count(node: &Node) -> CResult<u64> {
    let n = node.u64()?;
    if n == 0 {
        return Err(node.err("must be at least 1"));
    }
    Ok(n)
}
