//! JSON descriptors `{kind, d, T, seed, params}` that rebuild a code exactly.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{classical_code, concatenate, full_space_code, shell_code, tensor_power, typeclass_code};
use super::{BucketingCode, ConcatMode, Node};
use crate::error::{Error, Result};
use crate::probmodel::{NonnegMatrix, ProbabilityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub kind: String,
    pub d: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub seed: u64,
    pub params: Value,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Descriptor(msg.into())
}

fn field<'a>(params: &'a Value, name: &str) -> Result<&'a Value> {
    params.get(name).ok_or_else(|| bad(format!("missing params.{name}")))
}

fn uint(params: &Value, name: &str) -> Result<u64> {
    field(params, name)?.as_u64().ok_or_else(|| bad(format!("params.{name} must be an unsigned integer")))
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| bad(format!("{what}: {e}")))
}

impl BucketingCode {
    pub fn descriptor(&self) -> CodeDescriptor {
        let params = match self.node() {
            Node::FullSpace { b0, b1 } => json!({ "b0": b0, "b1": b1 }),
            Node::Classical { k, draws, .. } => json!({ "k": k, "draws": draws }),
            Node::Shell { d0, .. } => json!({ "d0": d0 }),
            Node::TypeClass(l) => json!({
                "p": l.p.to_grid(),
                "blocks": l.blocks.iter().map(NonnegMatrix::to_grid).collect::<Vec<_>>(),
            }),
            Node::TensorPower { base, k } => json!({ "k": k, "base": base.descriptor() }),
            Node::Concat { first, second, mode } => json!({
                "mode": mode,
                "first": first.descriptor(),
                "second": second.descriptor(),
            }),
        };
        CodeDescriptor { kind: self.kind().to_string(), d: self.d(), t: self.bucket_count(), seed: self.seed(), params }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.descriptor()).expect("descriptor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let desc: CodeDescriptor = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        Self::from_descriptor(&desc)
    }

    pub fn from_descriptor(desc: &CodeDescriptor) -> Result<Self> {
        let p = &desc.params;
        let code = match desc.kind.as_str() {
            "full_space" => full_space_code(desc.d, uint(p, "b0")? as usize, uint(p, "b1")? as usize),
            "classical" => classical_code(desc.d, uint(p, "k")? as usize, uint(p, "draws")?, desc.seed)?,
            "shell" => shell_code(desc.d, uint(p, "d0")? as usize, desc.t, desc.seed)?,
            "type_class" => {
                let matrix = ProbabilityMatrix::new(parse(field(p, "p")?, "params.p")?)?;
                let grids: Vec<Vec<Vec<f64>>> = parse(field(p, "blocks")?, "params.blocks")?;
                let blocks = grids.into_iter().map(NonnegMatrix::new).collect::<Result<Vec<_>>>()?;
                typeclass_code(&matrix, desc.d, &blocks, desc.seed, Some(desc.t))?.code
            }
            "tensor_power" => {
                let base = Self::from_descriptor(&parse(field(p, "base")?, "params.base")?)?;
                tensor_power(&base, uint(p, "k")? as usize)?
            }
            "concat" => {
                let mode: ConcatMode = parse(field(p, "mode")?, "params.mode")?;
                let first = Self::from_descriptor(&parse(field(p, "first")?, "params.first")?)?;
                let second = Self::from_descriptor(&parse(field(p, "second")?, "params.second")?)?;
                concatenate(&first, &second, mode)?
            }
            other => return Err(bad(format!("unknown kind {other:?}"))),
        };
        if code.d() != desc.d || code.bucket_count() != desc.t {
            return Err(bad(format!(
                "rebuilt code has d={}, T={}; descriptor says d={}, T={}",
                code.d(),
                code.bucket_count(),
                desc.d,
                desc.t
            )));
        }
        Ok(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let s = shell_code(12, 7, 5, 42).unwrap();
        let c = classical_code(16, 4, 2, 9).unwrap();
        let p = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let q = NonnegMatrix::new(vec![vec![0.25, 0.0], vec![0.0, 0.25]]).unwrap();
        let tc = typeclass_code(&p, 20, &[q.clone(), q], 3, None).unwrap().code;
        let codes = vec![
            s.clone(),
            c.clone(),
            tc,
            full_space_code(3, 2, 2),
            tensor_power(&s, 2).unwrap(),
            concatenate(&s, &c, ConcatMode::Disjoint).unwrap(),
            concatenate(&s, &s, ConcatMode::Union).unwrap(),
        ];
        for code in codes {
            let text = code.to_json();
            let back = BucketingCode::from_json(&text).unwrap();
            assert_eq!(back, code);
            assert_eq!(back.to_json(), text);
            let v: Value = serde_json::from_str(&text).unwrap();
            for key in ["kind", "d", "T", "seed", "params"] {
                assert!(v.get(key).is_some());
            }
        }
    }

    #[test]
    fn rejects_inconsistent_descriptors() {
        let mut d = shell_code(12, 7, 5, 42).unwrap().descriptor();
        d.kind = "nope".into();
        assert!(matches!(BucketingCode::from_descriptor(&d), Err(Error::Descriptor(_))));
        let mut d = classical_code(16, 4, 2, 9).unwrap().descriptor();
        d.t = 3;
        assert!(matches!(BucketingCode::from_descriptor(&d), Err(Error::Descriptor(_))));
    }
}
