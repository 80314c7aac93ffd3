use std::collections::BTreeMap;

use serde::Serialize;

use crate::frontend::TypeExpr;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionSig {
    pub params: Vec<TypeExpr>,
    pub ret: TypeExpr,
}

/// Compile-time description of an importable builtin module.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuiltinModuleDescriptor {
    pub name: String,
    pub functions: BTreeMap<String, FunctionSig>,
}

fn sig(params: &[TypeExpr], ret: TypeExpr) -> FunctionSig {
    FunctionSig {
        params: params.to_vec(),
        ret,
    }
}

/// Registry of every module an `import` can name.
pub fn builtin_modules() -> BTreeMap<String, BuiltinModuleDescriptor> {
    let util = BuiltinModuleDescriptor {
        name: "Util".into(),
        functions: BTreeMap::from([
            ("readAsJSON".into(), sig(&[TypeExpr::Readable], TypeExpr::Any)),
            ("readAsString".into(), sig(&[TypeExpr::Readable], TypeExpr::String)),
            ("toJSONString".into(), sig(&[TypeExpr::Any], TypeExpr::String)),
        ]),
    };
    BTreeMap::from([(util.name.clone(), util)])
}

/// Shape of the `__request` record.
pub fn request_field(name: &str) -> Option<TypeExpr> {
    Some(match name {
        "protocol" | "host" | "method" | "pathname" => TypeExpr::String,
        "port" => TypeExpr::Number,
        "query" | "headers" => TypeExpr::map_of(TypeExpr::String),
        "body" => TypeExpr::Readable,
        _ => return None,
    })
}

/// Shape of the `__response` record.
pub fn response_field(name: &str) -> Option<TypeExpr> {
    Some(match name {
        "statusCode" => TypeExpr::Number,
        "statusMessage" => TypeExpr::String,
        "headers" => TypeExpr::map_of(TypeExpr::String),
        "body" => TypeExpr::Readable,
        _ => return None,
    })
}

pub const ATTRIBUTE_KEYS: &[&str] = &["pattern", "min", "max", "maxLength", "minLength"];
