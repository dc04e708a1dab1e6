//! Latent-component time-series models and isotropic spatial covariance models.
//!
//! A [`ModelSpec`] is a sum of independent components. Its wavelet variance
//! is the sum of the components' wavelet variances, which is what makes
//! composite (state-space like) models cheap to fit.
//!
//! # Text format
//!
//! ```text
//! spec      := component | "sum(" component ("," component)* ")"
//! component := name "(" [ arg ("," arg)* ] ")"
//! arg       := key "=" value | key "=" "[" value ("," value)* "]"
//! value     := number | "?"
//! ```
//!
//! | name    | parameters                         |
//! |---------|------------------------------------|
//! | `wn`    | `s2`                               |
//! | `rw`    | `g2`                               |
//! | `ar1`   | `rho`, `v2`                        |
//! | `arma`  | `ar=[..]`, `ma=[..]`, `s2`         |
//! | `ar`    | `ar=[..]`, `s2` (ARMA with no MA)  |
//! | `exp`   | `phi`, `s2`                        |
//! | `gauss` | `phi`, `s2`                        |
//!
//! `?` marks a parameter to be estimated; a number fixes it. Omitted scalar
//! parameters are free. `arma` also accepts `p=` and `q=` orders in place of
//! the coefficient lists, which makes every coefficient free.

mod acf;
mod simulate;
pub(crate) mod theory;
mod transform;

pub use acf::theoretical_acf;
pub use theory::{theoretical_wv, theoretical_wv_1d, theoretical_wv_2d, wv_jacobian, TheoreticalWv};
pub use transform::ParamTransform;

pub(crate) use acf::spectral_radius;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Kind of latent component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    WhiteNoise,
    RandomWalk,
    Ar1,
    Arma { p: usize, q: usize },
    SpatialExp,
    SpatialGauss,
}

impl ComponentKind {
    pub fn num_params(&self) -> usize {
        match *self {
            ComponentKind::WhiteNoise | ComponentKind::RandomWalk => 1,
            ComponentKind::Ar1 | ComponentKind::SpatialExp | ComponentKind::SpatialGauss => 2,
            ComponentKind::Arma { p, q } => p + q + 1,
        }
    }

    pub fn is_spatial(&self) -> bool {
        matches!(self, ComponentKind::SpatialExp | ComponentKind::SpatialGauss)
    }

    /// Index of the parameter that scales the component's wavelet variance linearly.
    pub fn variance_index(&self) -> usize {
        match *self {
            ComponentKind::WhiteNoise | ComponentKind::RandomWalk => 0,
            ComponentKind::Ar1 | ComponentKind::SpatialExp | ComponentKind::SpatialGauss => 1,
            ComponentKind::Arma { p, q } => p + q,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match *self {
            ComponentKind::WhiteNoise => vec!["s2".into()],
            ComponentKind::RandomWalk => vec!["g2".into()],
            ComponentKind::Ar1 => vec!["rho".into(), "v2".into()],
            ComponentKind::Arma { p, q } => (1..=p)
                .map(|i| format!("ar{i}"))
                .chain((1..=q).map(|i| format!("ma{i}")))
                .chain(std::iter::once("s2".into()))
                .collect(),
            ComponentKind::SpatialExp | ComponentKind::SpatialGauss => {
                vec!["phi".into(), "s2".into()]
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match *self {
            ComponentKind::WhiteNoise => "wn",
            ComponentKind::RandomWalk => "rw",
            ComponentKind::Ar1 => "ar1",
            ComponentKind::Arma { q: 0, .. } => "ar",
            ComponentKind::Arma { .. } => "arma",
            ComponentKind::SpatialExp => "exp",
            ComponentKind::SpatialGauss => "gauss",
        }
    }

    /// Open interval `(lo, hi)` for parameter `i`.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        match *self {
            ComponentKind::Ar1 if i == 0 => (-1.0, 1.0),
            ComponentKind::Arma { p, .. } if i < p => {
                let b = binomial(p, i + 1);
                (-b, b)
            }
            ComponentKind::Arma { p, q } if i < p + q => {
                let b = binomial(q, i - p + 1);
                (-b, b)
            }
            _ => (0.0, f64::INFINITY),
        }
    }
}

/// `C(n, k)`: the largest magnitude the `k`-th coefficient of a degree-`n`
/// polynomial with all roots outside the unit circle can reach.
fn binomial(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

/// One parameter: its value (if known) and whether it is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Param {
    pub value: Option<f64>,
    pub free: bool,
}

impl Param {
    pub fn fixed(v: f64) -> Self {
        Self { value: Some(v), free: false }
    }

    pub fn free() -> Self {
        Self { value: None, free: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub kind: ComponentKind,
    pub params: Vec<Param>,
}

impl Component {
    pub fn new(kind: ComponentKind, values: &[f64]) -> Self {
        assert_eq!(values.len(), kind.num_params(), "wrong parameter count for {kind:?}");
        Self { kind, params: values.iter().map(|&v| Param::fixed(v)).collect() }
    }

    pub fn free(kind: ComponentKind) -> Self {
        Self { kind, params: vec![Param::free(); kind.num_params()] }
    }

    /// Parameter values; panics if any is unknown.
    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value.expect("parameter value not set")).collect()
    }

    fn try_values(&self) -> Result<Vec<f64>> {
        self.params
            .iter()
            .zip(self.kind.param_names())
            .map(|(p, n)| {
                p.value.ok_or_else(|| Error::invalid(format!("parameter {}.{n} has no value", self.kind.name())))
            })
            .collect()
    }
}

/// A sum of independent latent components.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    components: Vec<Component>,
}

impl ModelSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("a model needs at least one component"));
        }
        let spatial = components.iter().filter(|c| c.kind.is_spatial()).count();
        if spatial != 0 && spatial != components.len() {
            return Err(Error::invalid("spatial and temporal components cannot be mixed"));
        }
        for c in &components {
            if c.params.len() != c.kind.num_params() {
                return Err(Error::invalid(format!("wrong parameter count for {}", c.kind.name())));
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Component] {
        &mut self.components
    }

    pub fn is_spatial(&self) -> bool {
        self.components[0].kind.is_spatial()
    }

    pub fn num_params(&self) -> usize {
        self.components.iter().map(|c| c.params.len()).sum()
    }

    pub fn num_free(&self) -> usize {
        self.components.iter().flat_map(|c| &c.params).filter(|p| p.free).count()
    }

    /// `(component index, parameter index)` of each free parameter, in order.
    pub fn free_slots(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (ci, c) in self.components.iter().enumerate() {
            for (pi, p) in c.params.iter().enumerate() {
                if p.free {
                    out.push((ci, pi));
                }
            }
        }
        out
    }

    /// Labels of the free parameters, e.g. `ar1.rho` or `ar1(2).v2` when a
    /// component kind repeats.
    pub fn free_labels(&self) -> Vec<String> {
        let labels = self.component_labels();
        self.free_slots()
            .into_iter()
            .map(|(ci, pi)| format!("{}.{}", labels[ci], self.components[ci].kind.param_names()[pi]))
            .collect()
    }

    fn component_labels(&self) -> Vec<String> {
        let names: Vec<&str> = self.components.iter().map(|c| c.kind.name()).collect();
        let mut seen = std::collections::HashMap::new();
        names
            .iter()
            .map(|n| {
                let total = names.iter().filter(|m| *m == n).count();
                let k = seen.entry(*n).or_insert(0);
                *k += 1;
                if total > 1 {
                    format!("{n}({k})")
                } else {
                    (*n).to_string()
                }
            })
            .collect()
    }

    /// Bounds of the free parameters.
    pub fn free_bounds(&self) -> Vec<(f64, f64)> {
        self.free_slots().into_iter().map(|(ci, pi)| self.components[ci].kind.bounds(pi)).collect()
    }

    /// Current values of the free parameters, `None` if any is unset.
    pub fn free_values(&self) -> Option<Vec<f64>> {
        self.free_slots().into_iter().map(|(ci, pi)| self.components[ci].params[pi].value).collect()
    }

    /// Copy with the free parameters set to `theta` (still marked free).
    pub fn with_free_values(&self, theta: &[f64]) -> Result<Self> {
        let slots = self.free_slots();
        if theta.len() != slots.len() {
            return Err(Error::invalid(format!("expected {} free parameters, got {}", slots.len(), theta.len())));
        }
        let mut out = self.clone();
        for (&(ci, pi), &v) in slots.iter().zip(theta) {
            out.components[ci].params[pi].value = Some(v);
        }
        Ok(out)
    }

    /// Copy with every parameter marked free, keeping known values.
    pub fn freed(&self) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().flat_map(|c| c.params.iter_mut()).for_each(|p| p.free = true);
        out
    }

    /// Same components with every parameter free and unset.
    pub fn structure(&self) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().flat_map(|c| c.params.iter_mut()).for_each(|p| *p = Param::free());
        out
    }

    /// Copy with every parameter fixed at its current value.
    pub fn fixed(&self) -> Result<Self> {
        let mut out = self.clone();
        for c in &mut out.components {
            let v = c.try_values()?;
            c.params = v.into_iter().map(Param::fixed).collect();
        }
        Ok(out)
    }

    /// Checks that every parameter is set and inside its admissible region.
    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            let v = c.try_values()?;
            for (i, (&x, name)) in v.iter().zip(c.kind.param_names()).enumerate() {
                let (lo, hi) = c.kind.bounds(i);
                if !(x > lo && x < hi) {
                    return Err(Error::invalid(format!("{}.{name} = {x} outside ({lo}, {hi})", c.kind.name())));
                }
            }
            if let ComponentKind::Arma { p, .. } = c.kind {
                if p > 0 && spectral_radius(&v[..p]) >= 1.0 - 1e-8 {
                    return Err(Error::invalid(format!("AR polynomial of {} is not stationary", c.kind.name())));
                }
            }
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate), and additionally requires MA
    /// polynomials to be invertible so the fitted parameters are identifiable.
    pub(crate) fn in_estimation_space(&self) -> bool {
        if self.validate().is_err() {
            return false;
        }
        self.components.iter().all(|c| match c.kind {
            ComponentKind::Arma { p, q } if q > 0 => {
                let v = c.values();
                spectral_radius(&v[p..p + q].iter().map(|x| -x).collect::<Vec<_>>()) < 1.0 - 1e-8
            }
            _ => true,
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn value(p: &Param) -> String {
            match p.value {
                Some(v) => format!("{v}"),
                None => "?".into(),
            }
        }
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| {
                let names = c.kind.param_names();
                match c.kind {
                    ComponentKind::Arma { p, q } => {
                        let ar: Vec<String> = c.params[..p].iter().map(value).collect();
                        let ma: Vec<String> = c.params[p..p + q].iter().map(value).collect();
                        let s2 = value(&c.params[p + q]);
                        if q == 0 {
                            format!("ar(ar=[{}],s2={s2})", ar.join(","))
                        } else {
                            format!("arma(ar=[{}],ma=[{}],s2={s2})", ar.join(","), ma.join(","))
                        }
                    }
                    _ => {
                        let args: Vec<String> =
                            names.iter().zip(&c.params).map(|(n, p)| format!("{n}={}", value(p))).collect();
                        format!("{}({})", c.kind.name(), args.join(","))
                    }
                }
            })
            .collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "sum({})", parts.join(","))
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse::parse_spec(s)
    }
}

mod parse {
    use super::*;

    fn err(msg: impl Into<String>) -> Error {
        Error::Parse { line: 1, message: msg.into() }
    }

    struct Cursor<'a> {
        s: &'a [u8],
        pos: usize,
    }

    impl<'a> Cursor<'a> {
        fn skip_ws(&mut self) {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }

        fn peek(&mut self) -> Option<u8> {
            self.skip_ws();
            self.s.get(self.pos).copied()
        }

        fn expect(&mut self, ch: u8) -> Result<()> {
            if self.peek() == Some(ch) {
                self.pos += 1;
                Ok(())
            } else {
                Err(err(format!("expected '{}' at column {}", ch as char, self.pos + 1)))
            }
        }

        fn ident(&mut self) -> Result<String> {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(err(format!("expected a name at column {}", start + 1)));
            }
            Ok(String::from_utf8_lossy(&self.s[start..self.pos]).to_ascii_lowercase())
        }

        fn value(&mut self) -> Result<Param> {
            self.skip_ws();
            if self.peek() == Some(b'?') {
                self.pos += 1;
                return Ok(Param::free());
            }
            let start = self.pos;
            while self.pos < self.s.len() && matches!(self.s[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E')
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Param::fixed)
                .ok_or_else(|| err(format!("invalid number '{text}' at column {}", start + 1)))
        }

        fn list(&mut self) -> Result<Vec<Param>> {
            self.expect(b'[')?;
            let mut out = Vec::new();
            if self.peek() == Some(b']') {
                self.pos += 1;
                return Ok(out);
            }
            loop {
                out.push(self.value()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b']') => {
                        self.pos += 1;
                        return Ok(out);
                    }
                    _ => return Err(err(format!("unterminated list at column {}", self.pos + 1))),
                }
            }
        }
    }

    enum Arg {
        Scalar(Param),
        List(Vec<Param>),
    }

    fn component(cur: &mut Cursor) -> Result<Component> {
        let name = cur.ident()?;
        cur.expect(b'(')?;
        let mut args: Vec<(String, Arg)> = Vec::new();
        if cur.peek() != Some(b')') {
            loop {
                let key = cur.ident()?;
                cur.expect(b'=')?;
                let arg = if cur.peek() == Some(b'[') { Arg::List(cur.list()?) } else { Arg::Scalar(cur.value()?) };
                if args.iter().any(|(k, _)| *k == key) {
                    return Err(err(format!("duplicate argument '{key}' in {name}")));
                }
                args.push((key, arg));
                if cur.peek() == Some(b',') {
                    cur.pos += 1;
                } else {
                    break;
                }
            }
        }
        cur.expect(b')')?;
        build(&name, args)
    }

    fn take_scalar(args: &mut Vec<(String, Arg)>, key: &str) -> Result<Param> {
        match args.iter().position(|(k, _)| k == key) {
            None => Ok(Param::free()),
            Some(i) => match args.remove(i).1 {
                Arg::Scalar(p) => Ok(p),
                Arg::List(_) => Err(err(format!("'{key}' takes a single value"))),
            },
        }
    }

    fn take_list(args: &mut Vec<(String, Arg)>, key: &str) -> Result<Option<Vec<Param>>> {
        match args.iter().position(|(k, _)| k == key) {
            None => Ok(None),
            Some(i) => match args.remove(i).1 {
                Arg::List(v) => Ok(Some(v)),
                Arg::Scalar(p) => Ok(Some(vec![p])),
            },
        }
    }

    fn take_order(args: &mut Vec<(String, Arg)>, key: &str) -> Result<Option<usize>> {
        match args.iter().position(|(k, _)| k == key) {
            None => Ok(None),
            Some(i) => match args.remove(i).1 {
                Arg::Scalar(Param { value: Some(v), .. }) if v >= 0.0 && v.fract() == 0.0 && v < 64.0 => {
                    Ok(Some(v as usize))
                }
                _ => Err(err(format!("'{key}' must be a non-negative integer order"))),
            },
        }
    }

    fn coefficients(args: &mut Vec<(String, Arg)>, list_key: &str, order_key: &str) -> Result<Vec<Param>> {
        let list = take_list(args, list_key)?;
        let order = take_order(args, order_key)?;
        match (list, order) {
            (Some(l), Some(o)) if l.len() != o => {
                Err(err(format!("'{order_key}={o}' disagrees with {} '{list_key}' coefficients", l.len())))
            }
            (Some(l), _) => Ok(l),
            (None, Some(o)) => Ok(vec![Param::free(); o]),
            (None, None) => Ok(Vec::new()),
        }
    }

    fn build(name: &str, mut args: Vec<(String, Arg)>) -> Result<Component> {
        let comp = match name {
            "wn" => Component { kind: ComponentKind::WhiteNoise, params: vec![take_scalar(&mut args, "s2")?] },
            "rw" => Component { kind: ComponentKind::RandomWalk, params: vec![take_scalar(&mut args, "g2")?] },
            "ar1" => Component {
                kind: ComponentKind::Ar1,
                params: vec![take_scalar(&mut args, "rho")?, take_scalar(&mut args, "v2")?],
            },
            "exp" | "gauss" => Component {
                kind: if name == "exp" { ComponentKind::SpatialExp } else { ComponentKind::SpatialGauss },
                params: vec![take_scalar(&mut args, "phi")?, take_scalar(&mut args, "s2")?],
            },
            "arma" | "ar" => {
                let ar = coefficients(&mut args, "ar", "p")?;
                let ma = if name == "arma" { coefficients(&mut args, "ma", "q")? } else { Vec::new() };
                if ar.is_empty() && ma.is_empty() {
                    return Err(err(format!("{name} needs at least one AR or MA coefficient")));
                }
                let s2 = take_scalar(&mut args, "s2")?;
                let kind = ComponentKind::Arma { p: ar.len(), q: ma.len() };
                Component { kind, params: ar.into_iter().chain(ma).chain(std::iter::once(s2)).collect() }
            }
            other => return Err(err(format!("unknown component '{other}'"))),
        };
        if let Some((k, _)) = args.first() {
            return Err(err(format!("unknown argument '{k}' for {name}")));
        }
        Ok(comp)
    }

    pub(super) fn parse_spec(s: &str) -> Result<ModelSpec> {
        let mut cur = Cursor { s: s.as_bytes(), pos: 0 };
        let head = cur.ident()?;
        let components = if head == "sum" {
            cur.expect(b'(')?;
            let mut comps = vec![component(&mut cur)?];
            while cur.peek() == Some(b',') {
                cur.pos += 1;
                comps.push(component(&mut cur)?);
            }
            cur.expect(b')')?;
            comps
        } else {
            cur.pos = 0;
            vec![component(&mut cur)?]
        };
        if cur.peek().is_some() {
            return Err(err(format!("trailing input at column {}", cur.pos + 1)));
        }
        ModelSpec::new(components).map_err(|e| match e {
            Error::InvalidInput(m) => err(m),
            other => other,
        })
    }
}

/// Builders for the models used throughout the simulation designs.
pub mod presets {
    use super::*;

    pub fn white_noise(s2: f64) -> ModelSpec {
        ModelSpec::new(vec![Component::new(ComponentKind::WhiteNoise, &[s2])]).unwrap()
    }

    pub fn random_walk(g2: f64) -> ModelSpec {
        ModelSpec::new(vec![Component::new(ComponentKind::RandomWalk, &[g2])]).unwrap()
    }

    pub fn ar1(rho: f64, v2: f64) -> ModelSpec {
        ModelSpec::new(vec![Component::new(ComponentKind::Ar1, &[rho, v2])]).unwrap()
    }

    pub fn arma(ar: &[f64], ma: &[f64], s2: f64) -> ModelSpec {
        let kind = ComponentKind::Arma { p: ar.len(), q: ma.len() };
        let values: Vec<f64> = ar.iter().chain(ma).copied().chain(std::iter::once(s2)).collect();
        ModelSpec::new(vec![Component::new(kind, &values)]).unwrap()
    }

    /// Two latent AR(1) processes plus white noise.
    pub fn ssm(rho1: f64, v1: f64, rho2: f64, v2: f64, s2: f64) -> ModelSpec {
        ModelSpec::new(vec![
            Component::new(ComponentKind::Ar1, &[rho1, v1]),
            Component::new(ComponentKind::Ar1, &[rho2, v2]),
            Component::new(ComponentKind::WhiteNoise, &[s2]),
        ])
        .unwrap()
    }

    pub fn exponential(phi: f64, s2: f64) -> ModelSpec {
        ModelSpec::new(vec![Component::new(ComponentKind::SpatialExp, &[phi, s2])]).unwrap()
    }

    pub fn gaussian(phi: f64, s2: f64) -> ModelSpec {
        ModelSpec::new(vec![Component::new(ComponentKind::SpatialGauss, &[phi, s2])]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let m: ModelSpec = "sum(ar1(rho=?,v2=?), wn(s2=?))".parse().unwrap();
        assert_eq!(m.components().len(), 2);
        assert_eq!(m.num_free(), 3);
        assert_eq!(m.to_string(), "sum(ar1(rho=?,v2=?),wn(s2=?))");
        assert_eq!(m.free_labels(), vec!["ar1.rho", "ar1.v2", "wn.s2"]);

        let m: ModelSpec = "arma(ar=[0.5], ma=[-0.1, 0.5], s2=1)".parse().unwrap();
        assert_eq!(m.components()[0].kind, ComponentKind::Arma { p: 1, q: 2 });
        assert_eq!(m.num_free(), 0);
        assert_eq!(m.to_string().parse::<ModelSpec>().unwrap(), m);

        let m: ModelSpec = "arma(p=3, q=1)".parse().unwrap();
        assert_eq!(m.num_free(), 5);
        let m: ModelSpec = "sum(ar1(), ar1(), wn())".parse().unwrap();
        assert_eq!(m.free_labels()[2], "ar1(2).rho");
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "",
            "foo(x=1)",
            "ar1(rho=0.5, v2=1",
            "ar1(rho=abc)",
            "sum(ar1(), exp())",
            "ar1(rho=1, bogus=2)",
            "wn(s2=1) extra",
            "arma(ar=[0.1], p=2)",
        ] {
            assert!(matches!(bad.parse::<ModelSpec>(), Err(Error::Parse { .. })), "accepted {bad:?}");
        }
    }

    #[test]
    fn validation() {
        assert!(presets::ar1(0.9, 1.0).validate().is_ok());
        assert!(presets::ar1(1.0, 1.0).validate().is_err());
        assert!(presets::white_noise(0.0).validate().is_err());
        assert!(presets::arma(&[0.7, 0.3, -0.2], &[0.5], 2.0).validate().is_ok());
        assert!(presets::arma(&[0.7, 0.4], &[], 1.0).validate().is_err());
        assert!(presets::exponential(-1.0, 1.0).validate().is_err());
        assert!("ar1(rho=?, v2=1)".parse::<ModelSpec>().unwrap().validate().is_err());
    }

    #[test]
    fn ar_bounds_are_binomial() {
        let k = ComponentKind::Arma { p: 3, q: 1 };
        assert_eq!(k.bounds(0), (-3.0, 3.0));
        assert_eq!(k.bounds(1), (-3.0, 3.0));
        assert_eq!(k.bounds(2), (-1.0, 1.0));
        assert_eq!(k.bounds(3), (-1.0, 1.0));
        assert_eq!(k.bounds(4), (0.0, f64::INFINITY));
    }
}
