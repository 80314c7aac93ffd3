use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::value::Value;

pub type NativeBehavior = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

/// Native implementations for declared behavior types.
#[derive(Clone)]
pub struct BehaviorRegistry {
    bindings: BTreeMap<String, NativeBehavior>,
}

impl fmt::Debug for BehaviorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BehaviorRegistry")
            .field("bindings", &self.bindings.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for BehaviorRegistry {
    /// Registry with the built-in `toJSONString` and `parseJSON` bindings.
    fn default() -> Self {
        let mut r = BehaviorRegistry::empty();
        r.bind("toJSONString", |args| match args {
            [v] => Ok(Value::String(v.to_json_string())),
            _ => Err(format!("expected 1 argument, got {}", args.len())),
        });
        r.bind("parseJSON", |args| match args {
            [Value::String(s)] => serde_json::from_str::<serde_json::Value>(s)
                .map(Value::from)
                .map_err(|e| e.to_string()),
            [Value::Bytes(b)] => serde_json::from_slice::<serde_json::Value>(b)
                .map(Value::from)
                .map_err(|e| e.to_string()),
            _ => Err("expected a single string argument".into()),
        });
        r
    }
}

impl BehaviorRegistry {
    pub fn empty() -> Self {
        BehaviorRegistry {
            bindings: BTreeMap::new(),
        }
    }

    pub fn bind(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    ) -> &mut Self {
        self.bindings.insert(name.into(), Arc::new(f));
        self
    }

    pub fn get(&self, name: &str) -> Option<&NativeBehavior> {
        self.bindings.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }
}
