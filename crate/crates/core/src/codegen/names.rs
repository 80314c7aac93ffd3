use std::collections::{BTreeMap, BTreeSet};

use heck::{ToLowerCamelCase, ToPascalCase, ToSnakeCase};

use super::CodegenError;
use crate::frontend::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentStyle {
    CamelCase,
    SnakeCase,
    PascalCase,
}

impl IdentStyle {
    pub fn apply(self, name: &str) -> String {
        match self {
            IdentStyle::CamelCase => name.to_lower_camel_case(),
            IdentStyle::SnakeCase => name.to_snake_case(),
            IdentStyle::PascalCase => name.to_pascal_case(),
        }
    }
}

/// Maps DSL identifiers into one target namespace. Reserved words get a
/// trailing underscore; two DSL names landing on the same target name is an
/// error rather than a silent merge.
pub struct Namer<'a> {
    target: &'static str,
    style: IdentStyle,
    reserved: &'a [&'a str],
    forward: BTreeMap<String, String>,
    taken: BTreeMap<String, String>,
}

impl<'a> Namer<'a> {
    pub fn new(target: &'static str, style: IdentStyle, reserved: &'a [&'a str]) -> Self {
        Namer {
            target,
            style,
            reserved,
            forward: BTreeMap::new(),
            taken: BTreeMap::new(),
        }
    }

    /// Spelling of `name` without registering it.
    pub fn spell(&self, name: &str) -> String {
        let mut out = self.style.apply(name);
        if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
            out.insert(0, '_');
        }
        if self.reserved.contains(&out.as_str()) {
            out.push('_');
        }
        out
    }

    /// Registers `name` and returns its target spelling.
    pub fn declare(&mut self, name: &str, span: Span) -> Result<String, CodegenError> {
        if let Some(out) = self.forward.get(name) {
            return Ok(out.clone());
        }
        let out = self.spell(name);
        if let Some(other) = self.taken.get(&out) {
            return Err(CodegenError::UnsupportedConstruct {
                target: self.target.to_string(),
                span,
                what: format!("identifiers '{other}' and '{name}' (both become '{out}')"),
            });
        }
        self.taken.insert(out.clone(), name.to_string());
        self.forward.insert(name.to_string(), out.clone());
        Ok(out)
    }

    /// Blocks a target name that generated code uses internally.
    pub fn reserve(&mut self, target_name: &str) {
        self.taken.insert(target_name.to_string(), format!("<internal {target_name}>"));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.forward.get(name).map(String::as_str)
    }

    pub fn declared(&self) -> BTreeSet<&str> {
        self.taken.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn styles() {
        assert_eq!(IdentStyle::SnakeCase.apply("getUser"), "get_user");
        assert_eq!(IdentStyle::CamelCase.apply("get_user"), "getUser");
        assert_eq!(IdentStyle::PascalCase.apply("getUser"), "GetUser");
        assert_eq!(IdentStyle::SnakeCase.apply("toJSONString"), "to_json_string");
    }

    #[test]
    fn reserved_and_collisions() {
        let mut n = Namer::new("python", IdentStyle::SnakeCase, &["from", "self"]);
        assert_eq!(n.declare("from", Span::default()).unwrap(), "from_");
        assert_eq!(n.declare("userName", Span::default()).unwrap(), "user_name");
        assert_eq!(n.declare("userName", Span::default()).unwrap(), "user_name");
        assert!(n.declare("user_name", Span::default()).is_err());
        n.reserve("_req");
        assert!(n.declared().contains("_req"));
    }
}
