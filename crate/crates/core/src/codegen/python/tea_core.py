"""Runtime core for generated Tea clients.

Mirrors the reference interpreter: numbers are floats, `readable` values
are bytes, maps are dicts and models are dict subclasses.
"""

import json
import os
import re
import time
import urllib.error
import urllib.parse
import urllib.request
from decimal import Decimal


class TeaError(Exception):
    kind = "error"


class ValidationFailed(TeaError):
    kind = "validation"

    def __init__(self, violations):
        self.violations = violations
        super().__init__("; ".join(
            "%s: %s (%s)" % (v["path"] or "<value>", v["rule"], v["detail"]) for v in violations))


class EvalError(TeaError):
    kind = "eval"

    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


class TransportError(TeaError):
    kind = "transport"

    def __init__(self, message, attempts=0):
        self.attempts = attempts
        super().__init__(message)


# -- values ------------------------------------------------------------------

def is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def norm(v):
    """Converts caller-supplied data to core values (ints become floats)."""
    if is_number(v):
        return float(v)
    if isinstance(v, dict):
        return {k: norm(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [norm(x) for x in v]
    return v


def kind_name(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "boolean"
    if is_number(v):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, (bytes, bytearray)):
        return "readable"
    if isinstance(v, list):
        return "array"
    return "map"


def fmt_num(n):
    n = float(n)
    if n != n:
        return "NaN"
    if n in (float("inf"), float("-inf")):
        return "inf" if n > 0 else "-inf"
    if n == int(n) and abs(n) < 1e15:
        return str(int(n))
    return format(Decimal(repr(n)), "f")


def to_json(v):
    """Plain JSON data: integral floats become ints, bytes become text."""
    if v is None or isinstance(v, (bool, str)):
        return v
    if is_number(v):
        f = float(v)
        if f == f and f not in (float("inf"), float("-inf")) and f == int(f) and abs(f) < 1e15:
            return int(f)
        return f
    if isinstance(v, (bytes, bytearray)):
        return bytes(v).decode("utf-8", "replace")
    if isinstance(v, list):
        return [to_json(x) for x in v]
    return {k: to_json(x) for k, x in v.items()}


def to_json_string(v):
    return json.dumps(to_json(v), separators=(",", ":"), sort_keys=True, ensure_ascii=False)


def parse_json(data):
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data).decode("utf-8")
    return json.loads(data, parse_int=float)


def eq(a, b):
    ka, kb = kind_name(a), kind_name(b)
    if ka != kb:
        return False
    if ka == "array":
        return len(a) == len(b) and all(eq(x, y) for x, y in zip(a, b))
    if ka == "map":
        return a.keys() == b.keys() and all(eq(a[k], b[k]) for k in a)
    if ka == "number":
        return float(a) == float(b)
    return a == b


def _text(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if is_number(v):
        return fmt_num(v)
    if isinstance(v, str):
        return v
    return None


def add(a, b):
    if is_number(a) and is_number(b):
        return float(a) + float(b)
    if isinstance(a, str) or isinstance(b, str):
        ta, tb = _text(a), _text(b)
        if ta is not None and tb is not None:
            return ta + tb
    raise EvalError("type", "cannot apply '+' to %s and %s" % (kind_name(a), kind_name(b)))


def as_bool(v, op):
    if isinstance(v, bool):
        return v
    raise EvalError("type", "'%s' needs boolean operands, found %s" % (op, kind_name(v)))


def cond(v):
    if isinstance(v, bool):
        return v
    raise EvalError("type", "condition must be boolean, found %s" % kind_name(v))


def hole(v):
    """Renders one template hole; called as each part is evaluated."""
    if v is None:
        raise EvalError("null-in-template", "null value in template string")
    t = _text(v)
    if t is None:
        raise EvalError("type", "cannot interpolate a %s value" % kind_name(v))
    return t


def get_path(value, segments, consumed):
    """Reads segments[consumed:] from value; segments is the full DSL path."""
    for i in range(consumed, len(segments)):
        seg = segments[i]
        if value is None:
            raise EvalError("null-dereference", "null dereference reading '%s'" % ".".join(segments[:i + 1]))
        if isinstance(value, dict):
            value = value.get(seg)
        else:
            raise EvalError("invalid-access", "cannot read '%s' from a %s value" % (seg, kind_name(value)))
    return value


def no_response():
    raise EvalError("no-response", "'__response' is not available before the request is sent")


# -- builtins and behaviors --------------------------------------------------

def _readable(name, v):
    if isinstance(v, (bytes, bytearray)):
        return bytes(v)
    if isinstance(v, str):
        return v.encode("utf-8")
    raise EvalError("call-failed", "'%s' failed: expected readable, found %s" % (name, kind_name(v)))


def _read_as_json(v):
    data = _readable("Util.readAsJSON", v)
    try:
        return parse_json(data)
    except ValueError as e:
        raise EvalError("call-failed", "'Util.readAsJSON' failed: %s" % e)


BUILTINS = {
    ("Util", "readAsJSON"): _read_as_json,
    ("Util", "readAsString"): lambda v: _readable("Util.readAsString", v).decode("utf-8", "replace"),
    ("Util", "toJSONString"): to_json_string,
}


def builtin(module, method, args):
    fn = BUILTINS.get((module, method))
    if fn is None or len(args) != 1:
        raise EvalError("call-failed", "'%s.%s' failed: no such builtin function" % (module, method))
    return fn(*args)


def abstract(fn):
    fn.abstract = True
    return fn


class Behaviors:
    """Behavior hooks. Subclass and override, or pass callables by DSL name."""

    METHODS = {"toJSONString": "to_json_string", "parseJSON": "parse_json"}

    def __init__(self, overrides=None):
        self._overrides = dict(overrides or {})

    def to_json_string(self, value):
        return to_json_string(value)

    def parse_json(self, text):
        if not isinstance(text, (str, bytes, bytearray)):
            raise ValueError("expected a single string argument")
        return parse_json(text)

    def _target(self, name):
        if name in self._overrides:
            return self._overrides[name]
        method = self.METHODS.get(name)
        fn = getattr(self, method, None) if method else None
        if fn is None or getattr(fn, "abstract", False):
            return None
        return fn

    def require(self, names):
        for name in names:
            if self._target(name) is None:
                raise EvalError("unbound-behavior", "behavior '@%s' has no implementation" % name)

    def call(self, name, args):
        fn = self._target(name)
        if fn is None:
            raise EvalError("unbound-behavior", "behavior '@%s' has no implementation" % name)
        try:
            return norm(fn(*args))
        except TeaError:
            raise
        except Exception as e:
            raise EvalError("call-failed", "'@%s' failed: %s" % (name, e))


# -- exchange ----------------------------------------------------------------

class Config:
    def __init__(self, retry_times=0, backoff_ms=100, timeout_ms=30000, default_protocol="https", default_port=443):
        self.retry_times = retry_times
        self.backoff_ms = backoff_ms
        self.timeout_ms = timeout_ms
        self.default_protocol = default_protocol
        self.default_port = default_port


class Response:
    def __init__(self, status_code, status_message="", headers=None, body=b""):
        self.status_code = status_code
        self.status_message = status_message
        self.headers = dict(headers or {})
        self.body = body


class Exchange:
    def __init__(self, config):
        self.protocol = config.default_protocol
        self.port = config.default_port
        self.host = ""
        self.method = "GET"
        self.pathname = ""
        self.query = {}
        self.headers = {}
        self.body = b""

    def copy(self):
        c = Exchange.__new__(Exchange)
        c.__dict__.update(self.__dict__)
        c.query = dict(self.query)
        c.headers = dict(self.headers)
        return c

    def url(self):
        url = "%s://%s:%d%s" % (self.protocol, self.host, self.port, urllib.parse.quote(self.pathname, safe="/"))
        if self.query:
            url += "?" + urllib.parse.urlencode(sorted(self.query.items()))
        return url


def request_field(req, field):
    if field in ("protocol", "host", "method", "pathname"):
        return getattr(req, field)
    if field == "port":
        return float(req.port)
    if field in ("query", "headers"):
        return dict(getattr(req, field))
    if field == "body":
        return req.body
    raise EvalError("invalid-access", "cannot read '%s' from a request value" % field)


def response_field(resp, field):
    if field == "statusCode":
        return float(resp.status_code)
    if field == "statusMessage":
        return resp.status_message
    if field == "headers":
        return dict(resp.headers)
    if field == "body":
        return resp.body
    raise EvalError("invalid-access", "cannot read '%s' from a response value" % field)


def _string(field, v):
    if isinstance(v, str):
        return v
    raise EvalError("type", "request %s must be a string, found %s" % (field, kind_name(v)))


def _string_map(field, v):
    if isinstance(v, dict) and not isinstance(v, list):
        return {k: _string(field, x) for k, x in v.items()}
    raise EvalError("type", "request %s must be a map of strings, found %s" % (field, kind_name(v)))


def set_request(req, path, value):
    field, rest = path[0], path[1:]
    if field == "protocol" and not rest:
        p = _string(field, value)
        if p not in ("http", "https"):
            raise EvalError("type", "protocol must be http or https, found '%s'" % p)
        req.protocol = p
    elif field == "port" and not rest:
        if is_number(value) and 1 <= value <= 65535 and float(value) == int(value):
            req.port = int(value)
        else:
            raise EvalError("type", "port must be an integer in 1-65535")
    elif field in ("host", "method", "pathname") and not rest:
        setattr(req, field, _string(field, value))
    elif field in ("query", "headers") and not rest:
        setattr(req, field, _string_map(field, value))
    elif field in ("query", "headers") and len(rest) == 1:
        getattr(req, field)[rest[0]] = _string(field, value)
    elif field == "body" and not rest:
        if isinstance(value, (bytes, bytearray)):
            req.body = bytes(value)
        elif isinstance(value, str):
            req.body = value.encode("utf-8")
        else:
            raise EvalError("type", "body must be readable, found %s" % kind_name(value))
    else:
        raise EvalError("invalid-access", "cannot read '%s' from a request value" % ".".join(path))


def send(transport, req, config):
    attempts = 0
    while True:
        attempts += 1
        try:
            return transport.send(req.copy(), config.timeout_ms / 1000.0)
        except TransportError as e:
            if attempts >= config.retry_times + 1:
                raise TransportError(str(e), attempts)
            time.sleep(config.backoff_ms / 1000.0)


# -- transports --------------------------------------------------------------

class MockTransport:
    """Rule-driven transport; first matching rule wins, otherwise 404."""

    def __init__(self, rules):
        for i, r in enumerate(rules):
            respond = r.get("respond", {})
            code = respond.get("statusCode")
            if "error" not in respond:
                if code is None:
                    raise ValueError("rule %d: respond needs either 'statusCode' or 'error'" % i)
                if not 100 <= code <= 599:
                    raise ValueError("rule %d: status code %d outside 100-599" % (i, code))
        self.rules = rules
        self.hits = [0] * len(rules)
        self.requests = []

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(data["rules"] if isinstance(data, dict) else data)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_json(f.read())

    def send(self, req, timeout):
        self.requests.append(req)
        for i, rule in enumerate(self.rules):
            m = rule.get("match", {})
            if "method" in m and m["method"] != req.method:
                continue
            if "pathname" in m and m["pathname"] != req.pathname:
                continue
            if "times" in rule and self.hits[i] >= rule["times"]:
                continue
            self.hits[i] += 1
            r = rule["respond"]
            if "error" in r:
                raise TransportError(r["error"])
            body = r.get("body")
            if body is None:
                data = b""
            elif isinstance(body, str):
                data = body.encode("utf-8")
            else:
                data = json.dumps(body, separators=(",", ":"), sort_keys=True, ensure_ascii=False).encode("utf-8")
            return Response(r.get("statusCode", 200), r.get("statusMessage", ""), r.get("headers"), data)
        return Response(404, "Not Found")


class HttpTransport:
    def send(self, req, timeout):
        request = urllib.request.Request(req.url(), data=req.body or None, method=req.method, headers=req.headers)
        try:
            with urllib.request.urlopen(request, timeout=timeout) as r:
                return Response(r.status, r.reason, dict(r.headers.items()), r.read())
        except urllib.error.HTTPError as e:
            return Response(e.code, e.reason, dict(e.headers.items()), e.read())
        except (urllib.error.URLError, OSError) as e:
            raise TransportError(str(e))


def default_transport():
    path = os.environ.get("TEA_MOCK_FILE")
    return MockTransport.from_file(path) if path else HttpTransport()


# -- models and validation ---------------------------------------------------
#
# Types are encoded as "string" | "number" | "boolean" | "any" | "readable"
# | "void" | ("map", T) | ("array", T) | ("model", name).

class Model(dict):
    META = {"name": "", "fields": []}
    REGISTRY = {}

    def violations(self):
        return validate(self.REGISTRY, ("model", self.META["name"]), norm(self))


def meta(text):
    return json.loads(text)


def registry(classes):
    reg = {cls.META["name"]: cls for cls in classes}
    for cls in classes:
        cls.REGISTRY = reg
    return reg


def type_str(ty):
    if isinstance(ty, str):
        return ty
    if ty[0] == "map":
        return "map[string]" + type_str(ty[1])
    if ty[0] == "array":
        return "[" + type_str(ty[1]) + "]"
    return ty[1]


_PATTERNS = {}


def _search(src, text):
    if src not in _PATTERNS:
        try:
            _PATTERNS[src] = re.compile(src)
        except re.error:
            _PATTERNS[src] = None
    rx = _PATTERNS[src]
    return rx is not None and rx.search(text) is not None


def _join(path, seg):
    return seg if not path else path + "." + seg


def _num_attr(attrs, key):
    v = attrs.get(key)
    return float(v) if is_number(v) else None


def validate(models, ty, value):
    out = []
    _check(models, "", ty, value, out)
    return out


def _check(models, path, ty, value, out):
    k = kind_name(value)
    simple = {"string": ("string",), "number": ("number",), "boolean": ("boolean",),
              "readable": ("string", "readable"), "void": ("null",)}
    if ty == "any":
        return True
    if isinstance(ty, str):
        if k in simple[ty]:
            return True
    elif ty[0] == "map" and k == "map":
        for key, item in sorted(value.items()):
            _check(models, _join(path, key), ty[1], item, out)
        return True
    elif ty[0] == "array" and k == "array":
        for i, item in enumerate(value):
            _check(models, _join(path, str(i)), ty[1], item, out)
        return True
    elif ty[0] == "model" and k == "map":
        cls = models.get(ty[1])
        if cls is None:
            return True
        for f in cls.META["fields"]:
            fpath = _join(path, f["name"])
            v = value.get(f["name"])
            if v is None:
                if not f["optional"]:
                    out.append({"path": fpath, "rule": "missing-required", "detail": "required field is missing"})
            elif _check(models, fpath, f["type"], v, out):
                _constraints(fpath, f["attributes"], v, out)
        return True
    out.append({"path": path, "rule": "type-mismatch", "detail": "expected %s, found %s" % (type_str(ty), k)})
    return False


def _constraints(path, attrs, value, out):
    src = attrs.get("pattern")
    if isinstance(src, str):
        text = value if isinstance(value, str) else fmt_num(value) if is_number(value) else None
        if text is not None and not _search(src, text):
            out.append({"path": path, "rule": "pattern",
                        "detail": "'%s' does not match pattern '%s'" % (text, src)})
    if is_number(value):
        lo, hi = _num_attr(attrs, "min"), _num_attr(attrs, "max")
        if lo is not None and value < lo:
            out.append({"path": path, "rule": "min", "detail": "%s < %s" % (fmt_num(value), fmt_num(lo))})
        if hi is not None and value > hi:
            out.append({"path": path, "rule": "max", "detail": "%s > %s" % (fmt_num(value), fmt_num(hi))})
    n = len(value) if isinstance(value, (str, list)) else None
    if n is not None:
        lo, hi = _num_attr(attrs, "minLength"), _num_attr(attrs, "maxLength")
        if lo is not None and n < lo:
            out.append({"path": path, "rule": "min", "detail": "length %d < %s" % (n, fmt_num(lo))})
        if hi is not None and n > hi:
            out.append({"path": path, "rule": "max", "detail": "length %d > %s" % (n, fmt_num(hi))})


def check_args(models, params):
    """params: [(name, type, value)]; raises ValidationFailed."""
    out = []
    for name, ty, value in params:
        if value is None:
            if ty != "any":
                out.append({"path": name, "rule": "missing-required", "detail": "required argument is missing"})
            continue
        for v in validate(models, ty, value):
            v["path"] = _join(name, v["path"]) if v["path"] else name
            out.append(v)
    if out:
        raise ValidationFailed(out)


def conform(models, ty, value):
    if not isinstance(ty, str) and ty[0] == "model" and isinstance(value, dict):
        cls = models.get(ty[1])
        if cls is None:
            return value
        out = {}
        for f in cls.META["fields"]:
            v = value.get(f["name"])
            if v is not None:
                out[f["name"]] = conform(models, f["type"], v)
        return cls(out)
    if not isinstance(ty, str) and ty[0] == "map" and isinstance(value, dict):
        return {k: conform(models, ty[1], v) for k, v in value.items()}
    if not isinstance(ty, str) and ty[0] == "array" and isinstance(value, list):
        return [conform(models, ty[1], v) for v in value]
    if ty == "readable" and isinstance(value, str):
        return value.encode("utf-8")
    return value


class _NoReturn:
    pass


NO_RETURN = _NoReturn()


def finish(models, ty, value):
    if ty == "void":
        return None
    if value is NO_RETURN:
        raise EvalError("missing-return", "returns block finished without returning a value")
    if ty == "any":
        return value
    violations = validate(models, ty, value)
    if violations:
        raise ValidationFailed(violations)
    return conform(models, ty, value)
