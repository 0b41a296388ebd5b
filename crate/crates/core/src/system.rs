//! Field systems: a vector field X and a closed one-form ω on a flat torus,
//! loaded from `key = value` system files.
//!
//! ```text
//! # comments start with '#'
//! dim = 2
//! field.1 = 2*pi*sinp(x1)
//! field.2 = 2*pi*sinp(x2)
//! omega.harmonic = 0, 0
//! omega.potential = cosp(x1) + cosp(x2)
//! eta.harmonic = 0, 0        # optional twist
//! eta.potential = 0          # optional
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Jet1};
use crate::torus::{ClosedOneForm, TorusDomain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum |Re λ| for a hyperbolic rest point.
    pub hyperbolic: f64,
    /// Newton stops once ‖X(p)‖ is below this.
    pub newton: f64,
    /// Relative local error target for the flow integrator.
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hyperbolic: 1e-7,
            newton: 1e-12,
            ode: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldSystem {
    pub name: String,
    pub domain: TorusDomain,
    pub field: Vec<Expr>,
    pub omega: ClosedOneForm,
    pub eta: Option<ClosedOneForm>,
    pub tolerances: Tolerances,
}

const PERIODICITY_GRID: usize = 17;
const PERIODICITY_TOL: f64 = 1e-9;

impl FieldSystem {
    /// Builds and validates a system (periodicity and finiteness on a 17ⁿ grid).
    pub fn new(name: &str, field: Vec<Expr>, omega: ClosedOneForm, eta: Option<ClosedOneForm>) -> Result<FieldSystem> {
        let dim = field.len();
        let domain = TorusDomain::new(dim)?;
        if omega.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: omega.dim() });
        }
        if let Some(e) = &eta {
            if e.dim() != dim {
                return Err(Error::Dimension { expected: dim, found: e.dim() });
            }
        }
        let sys = FieldSystem {
            name: name.to_string(),
            domain,
            field,
            omega,
            eta,
            tolerances: Tolerances::default(),
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let mut checks: Vec<(String, &Expr)> = self
            .field
            .iter()
            .enumerate()
            .map(|(i, e)| (format!("field.{}", i + 1), e))
            .collect();
        checks.push(("omega.potential".into(), &self.omega.potential));
        if let Some(e) = &self.eta {
            checks.push(("eta.potential".into(), &e.potential));
        }
        for (what, e) in checks {
            if e.arity() > self.dim() {
                return Err(Error::SystemFile(format!(
                    "{what} uses x{} but dim = {}",
                    e.arity(),
                    self.dim()
                )));
            }
            check_periodic(&what, e, self.dim())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> FieldSystem {
        self.tolerances = tol;
        self
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<FieldSystem> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "system".into());
        FieldSystem::from_str_named(&name, &text)
    }

    pub fn from_str_named(name: &str, text: &str) -> Result<FieldSystem> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::SystemFile(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            kv.insert(k.trim().to_string(), (lineno + 1, v.trim().to_string()));
        }
        let get = |k: &str| kv.get(k).map(|(_, v)| v.as_str());
        let dim: usize = get("dim")
            .ok_or_else(|| Error::SystemFile("missing 'dim'".into()))?
            .parse()
            .map_err(|_| Error::SystemFile("'dim' must be an integer".into()))?;
        TorusDomain::new(dim)?;
        let expr = |key: &str| -> Result<Expr> {
            let (line, src) = kv
                .get(key)
                .ok_or_else(|| Error::SystemFile(format!("missing '{key}'")))?;
            parse(src).map_err(|e| Error::SystemFile(format!("line {line} ({key}): {e}")))
        };
        let vector = |key: &str| -> Result<Option<Vec<f64>>> {
            let Some((line, src)) = kv.get(key) else { return Ok(None) };
            let v: std::result::Result<Vec<f64>, _> = src.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let v = v.map_err(|_| Error::SystemFile(format!("line {line}: '{key}' must be comma-separated numbers")))?;
            if v.len() != dim {
                return Err(Error::SystemFile(format!("line {line}: '{key}' needs {dim} entries")));
            }
            Ok(Some(v))
        };
        let field = (1..=dim).map(|i| expr(&format!("field.{i}"))).collect::<Result<Vec<_>>>()?;
        let omega = ClosedOneForm::new(
            vector("omega.harmonic")?.unwrap_or_else(|| vec![0.0; dim]),
            if kv.contains_key("omega.potential") { expr("omega.potential")? } else { Expr::zero() },
        );
        let eta = if kv.contains_key("eta.harmonic") || kv.contains_key("eta.potential") {
            Some(ClosedOneForm::new(
                vector("eta.harmonic")?.unwrap_or_else(|| vec![0.0; dim]),
                if kv.contains_key("eta.potential") { expr("eta.potential")? } else { Expr::zero() },
            ))
        } else {
            None
        };
        for key in kv.keys() {
            let known = key == "dim"
                || key == "omega.harmonic"
                || key == "omega.potential"
                || key == "eta.harmonic"
                || key == "eta.potential"
                || key
                    .strip_prefix("field.")
                    .and_then(|i| i.parse::<usize>().ok())
                    .is_some_and(|i| (1..=dim).contains(&i));
            if !known {
                return Err(Error::SystemFile(format!("unknown key '{key}'")));
            }
        }
        FieldSystem::new(name, field, omega, eta)
    }

    /// Writes the system back in file syntax.
    pub fn to_file_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = format!("dim = {}\n", self.dim());
        for (i, e) in self.field.iter().enumerate() {
            s += &format!("field.{} = {}\n", i + 1, e);
        }
        s += &format!("omega.harmonic = {}\n", join(&self.omega.harmonic));
        s += &format!("omega.potential = {}\n", self.omega.potential);
        if let Some(eta) = &self.eta {
            s += &format!("eta.harmonic = {}\n", join(&eta.harmonic));
            s += &format!("eta.potential = {}\n", eta.potential);
        }
        s
    }

    /// X(p) written into `out`.
    pub fn field_into(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, e) in out.iter_mut().zip(&self.field) {
            *o = e.eval(p)?;
        }
        Ok(())
    }

    pub fn field_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.field_into(p, &mut out)?;
        Ok(out)
    }

    /// X(p) and D_p X (row i = gradient of component i).
    pub fn field_and_jacobian(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let vars: Vec<Jet1> = p.iter().enumerate().map(|(i, &x)| Jet1::variable(i, x)).collect();
        let mut value = vec![0.0; n];
        let mut jac = DMatrix::zeros(n, n);
        for (i, e) in self.field.iter().enumerate() {
            let j = e.eval_with(&vars)?;
            value[i] = j.v;
            for k in 0..n {
                jac[(i, k)] = j.g[k];
            }
        }
        Ok((value, jac))
    }

    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.field_and_jacobian(p)?.1)
    }

    /// ω(X)(p).
    pub fn omega_of_field(&self, p: &[f64]) -> Result<f64> {
        let x = self.field_at(p)?;
        self.omega.apply(p, &x)
    }

    /// The same system with X replaced by −X.
    pub fn reversed(&self) -> FieldSystem {
        FieldSystem {
            name: format!("{}-reversed", self.name),
            field: self.field.iter().map(|e| Expr::Neg(Box::new(e.clone()))).collect(),
            ..self.clone()
        }
    }
}

/// Points of the uniform grid k/m in [0,1)ⁿ, row-major with x1 fastest.
pub fn grid_points(dim: usize, m: usize) -> Vec<Vec<f64>> {
    let total = m.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let k = idx % m;
                    idx /= m;
                    k as f64 / m as f64
                })
                .collect()
        })
        .collect()
}

fn check_periodic(what: &str, e: &Expr, dim: usize) -> Result<()> {
    for p in grid_points(dim, PERIODICITY_GRID) {
        let base = e.eval(&p)?;
        if !base.is_finite() {
            return Err(Error::SystemFile(format!("{what} is not finite at {p:?}")));
        }
        for axis in 0..dim {
            let mut q = p.clone();
            q[axis] += 1.0;
            let shifted = e.eval(&q)?;
            let defect = (shifted - base).abs();
            if defect > PERIODICITY_TOL {
                return Err(Error::NotPeriodic {
                    what: what.to_string(),
                    axis: axis + 1,
                    defect,
                });
            }
        }
    }
    Ok(())
}
