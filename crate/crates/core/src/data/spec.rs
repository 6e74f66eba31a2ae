//! JSON description of boundary data.
//!
//! ```json
//! {"kind": "constant", "levels": [0.003, 0.003, 0.003, 0.003]}
//! {"kind": "transport", "profiles": ["0.0025 + 0.0005*cos(3*x)", "0", "0", "0"]}
//! {"kind": "restriction", "fields": ["exp(-t)*x", "0", "0", "0"]}
//! {"kind": "explicit", "functions": {"n1_0": {"expr": "x*y"}, "n1_minus": {"table": "n1m.csv"}, ...}}
//! ```
//!
//! Transport profiles are expressions in `x, y` giving each species' state at
//! `t = 0`; restriction fields are expressions in `t, x, y`. Explicit
//! functions use `x, y` (initial data), `t, y` (x-inflow faces) or `t, x`
//! (y-inflow faces). Table paths are resolved against the config directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{data, Result};
use crate::model::{ModelParams, SpaceTimeBox};

use super::expr::{ExprField, ExprProfile};
use super::table::TableProfile;
use super::{
    constant_family, restriction_family, transport_family, BoundaryData, Constant, FieldProfile,
    Profile,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant { levels: [f64; 4] },
    Transport { profiles: [String; 4] },
    Restriction { fields: [String; 4] },
    Explicit { functions: ExplicitFunctions },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitFunctions {
    pub n1_0: FunctionSpec,
    pub n2_0: FunctionSpec,
    pub n3_0: FunctionSpec,
    pub n4_0: FunctionSpec,
    pub n1_minus: FunctionSpec,
    pub n2_plus: FunctionSpec,
    pub n3_minus: FunctionSpec,
    pub n4_plus: FunctionSpec,
    pub n1_minusminus: FunctionSpec,
    pub n2_minusminus: FunctionSpec,
    pub n3_plusplus: FunctionSpec,
    pub n4_plusplus: FunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant(f64),
    Expr(String),
    Table(PathBuf),
}

impl FunctionSpec {
    fn build(&self, vars: [&str; 2], base_dir: &Path) -> Result<Arc<dyn Profile>> {
        Ok(match self {
            FunctionSpec::Constant(v) => {
                if !v.is_finite() {
                    return Err(data(format!("non-finite constant {v}")));
                }
                Arc::new(Constant(*v))
            }
            FunctionSpec::Expr(src) => Arc::new(ExprProfile::parse(src, vars)?),
            FunctionSpec::Table(path) => Arc::new(TableProfile::open(&base_dir.join(path))?),
        })
    }
}

impl DataSpec {
    pub fn build(
        &self,
        params: &ModelParams,
        domain: SpaceTimeBox,
        base_dir: &Path,
    ) -> Result<BoundaryData> {
        match self {
            DataSpec::Constant { levels } => constant_family(*levels, domain),
            DataSpec::Transport { profiles } => {
                let mut parsed = Vec::with_capacity(4);
                for src in profiles {
                    parsed.push(Arc::new(ExprProfile::parse(src, ["x", "y"])?) as Arc<dyn Profile>);
                }
                let profiles: [Arc<dyn Profile>; 4] =
                    parsed.try_into().unwrap_or_else(|_| unreachable!());
                Ok(transport_family(profiles, params, domain))
            }
            DataSpec::Restriction { fields } => {
                let mut parsed = Vec::with_capacity(4);
                for src in fields {
                    parsed.push(Arc::new(ExprField::parse(src)?) as Arc<dyn FieldProfile>);
                }
                let fields: [Arc<dyn FieldProfile>; 4] =
                    parsed.try_into().unwrap_or_else(|_| unreachable!());
                Ok(restriction_family(fields, params, domain))
            }
            DataSpec::Explicit { functions: f } => {
                let init = ["x", "y"];
                let xface = ["t", "y"];
                let yface = ["t", "x"];
                let b = |spec: &FunctionSpec, vars, name: &str| {
                    spec.build(vars, base_dir)
                        .map_err(|e| data(format!("{name}: {e}")))
                };
                let initial = [
                    b(&f.n1_0, init, "n1_0")?,
                    b(&f.n2_0, init, "n2_0")?,
                    b(&f.n3_0, init, "n3_0")?,
                    b(&f.n4_0, init, "n4_0")?,
                ];
                let x_inflow = [
                    b(&f.n1_minus, xface, "n1_minus")?,
                    b(&f.n2_plus, xface, "n2_plus")?,
                    b(&f.n3_minus, xface, "n3_minus")?,
                    b(&f.n4_plus, xface, "n4_plus")?,
                ];
                let y_inflow = [
                    b(&f.n1_minusminus, yface, "n1_minusminus")?,
                    b(&f.n2_minusminus, yface, "n2_minusminus")?,
                    b(&f.n3_plusplus, yface, "n3_plusplus")?,
                    b(&f.n4_plusplus, yface, "n4_plusplus")?,
                ];
                Ok(BoundaryData::new(domain, initial, x_inflow, y_inflow))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{check_compatibility, DEFAULT_COMPAT_TOL};
    use std::f64::consts::FRAC_PI_4;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, FRAC_PI_4).unwrap()
    }

    #[test]
    fn parses_each_kind() {
        let here = Path::new(".");
        let specs = [
            r#"{"kind":"constant","levels":[0.003,0.003,0.003,0.003]}"#,
            r#"{"kind":"transport","profiles":["0.0025+0.0005*cos(x+y)","0.003","0","x*y"]}"#,
            r#"{"kind":"restriction","fields":["exp(-t)*x","1","t","y"]}"#,
        ];
        for s in specs {
            let spec: DataSpec = serde_json::from_str(s).unwrap();
            let d = spec.build(&params(), SpaceTimeBox::unit(), here).unwrap();
            assert!(
                check_compatibility(&d, 33, DEFAULT_COMPAT_TOL)
                    .unwrap()
                    .passed,
                "{s}"
            );
        }
    }

    #[test]
    fn explicit_with_table() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("face.csv"),
            "t,y,value\n0,0,1\n0,1,1\n1,0,1\n1,1,1\n",
        )
        .unwrap();
        let one = FunctionSpec::Constant(1.0);
        let f = ExplicitFunctions {
            n1_0: FunctionSpec::Expr("1 + 0*x*y".into()),
            n2_0: one.clone(),
            n3_0: one.clone(),
            n4_0: one.clone(),
            n1_minus: FunctionSpec::Table("face.csv".into()),
            n2_plus: one.clone(),
            n3_minus: one.clone(),
            n4_plus: one.clone(),
            n1_minusminus: one.clone(),
            n2_minusminus: one.clone(),
            n3_plusplus: one.clone(),
            n4_plusplus: one,
        };
        let spec = DataSpec::Explicit { functions: f };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(
            json.contains(r#""n1_minus":{"table":"face.csv"}"#),
            "{json}"
        );
        let back: DataSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let d = back
            .build(&params(), SpaceTimeBox::unit(), dir.path())
            .unwrap();
        assert!(
            check_compatibility(&d, 17, DEFAULT_COMPAT_TOL)
                .unwrap()
                .passed
        );
        assert!(!d.x_inflow(0).has_exact_gradient());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_expressions() {
        assert!(serde_json::from_str::<DataSpec>(
            r#"{"kind":"constant","levels":[0,0,0,0],"extra":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<DataSpec>(r#"{"kind":"wave","levels":[0,0,0,0]}"#).is_err());
        let spec: DataSpec =
            serde_json::from_str(r#"{"kind":"transport","profiles":["t","0","0","0"]}"#).unwrap();
        assert!(spec
            .build(&params(), SpaceTimeBox::unit(), Path::new("."))
            .is_err());
        let spec: DataSpec =
            serde_json::from_str(r#"{"kind":"constant","levels":[-1,0,0,0]}"#).unwrap();
        assert!(spec
            .build(&params(), SpaceTimeBox::unit(), Path::new("."))
            .is_err());
    }
}
