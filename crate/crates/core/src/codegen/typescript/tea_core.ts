// Runtime core for generated Tea clients. Mirrors the reference
// interpreter: maps are plain objects, `readable` values are Uint8Array.

export type Readable = string | Uint8Array;
export type TypeDesc = string | [string, TypeDesc] | [string, string];

export interface FieldMeta {
  name: string;
  optional: boolean;
  type: TypeDesc;
  attributes: { [key: string]: string | number | boolean };
}

export interface ModelMeta {
  name: string;
  fields: FieldMeta[];
}

export type Models = { [name: string]: ModelMeta };

export interface Violation {
  path: string;
  rule: string;
  detail: string;
}

export class TeaError extends Error {
  kind = "error";
}

export class ValidationFailed extends TeaError {
  kind = "validation";
  constructor(public violations: Violation[]) {
    super(violations.map((v) => `${v.path || "<value>"}: ${v.rule} (${v.detail})`).join("; "));
  }
}

export class EvalError extends TeaError {
  kind = "eval";
  constructor(public code: string, message: string) {
    super(message);
  }
}

export class TransportError extends TeaError {
  kind = "transport";
  constructor(message: string, public attempts = 0) {
    super(message);
  }
}

type Dict = { [key: string]: unknown };

function isMap(v: unknown): v is Dict {
  return typeof v === "object" && v !== null && !Array.isArray(v) && !(v instanceof Uint8Array);
}

export function kindName(v: unknown): string {
  if (v === null || v === undefined) return "null";
  if (typeof v === "boolean") return "boolean";
  if (typeof v === "number") return "number";
  if (typeof v === "string") return "string";
  if (v instanceof Uint8Array) return "readable";
  if (Array.isArray(v)) return "array";
  return "map";
}

function expand(s: string): string {
  const m = /^(-?)(\d)(?:\.(\d+))?e([+-]\d+)$/.exec(s);
  if (!m) return s;
  const digits = m[2] + (m[3] ?? "");
  const exp = parseInt(m[4], 10);
  if (exp >= 0) {
    const pad = exp + 1 - digits.length;
    return m[1] + (pad >= 0 ? digits + "0".repeat(pad) : digits.slice(0, exp + 1) + "." + digits.slice(exp + 1));
  }
  return m[1] + "0." + "0".repeat(-exp - 1) + digits;
}

export function fmtNum(n: number): string {
  if (Number.isNaN(n)) return "NaN";
  if (!Number.isFinite(n)) return n > 0 ? "inf" : "-inf";
  if (Number.isInteger(n) && Math.abs(n) < 1e15) return (n === 0 ? 0 : n).toFixed(0);
  return expand(String(n));
}

const decoder = new TextDecoder("utf-8");
const encoder = new TextEncoder();

/** Plain JSON data: bytes become text, keys sorted. */
export function toJson(v: unknown): unknown {
  if (v === undefined) return null;
  if (v instanceof Uint8Array) return decoder.decode(v);
  if (Array.isArray(v)) return v.map(toJson);
  if (isMap(v)) {
    const out: Dict = {};
    for (const k of Object.keys(v).sort()) out[k] = toJson(v[k]);
    return out;
  }
  return v;
}

export function toJsonString(v: unknown): string {
  return JSON.stringify(toJson(v));
}

export function parseJson(data: Readable): unknown {
  return JSON.parse(typeof data === "string" ? data : decoder.decode(data));
}

export function eq(a: unknown, b: unknown): boolean {
  const ka = kindName(a);
  if (ka !== kindName(b)) return false;
  if (ka === "array") {
    const x = a as unknown[], y = b as unknown[];
    return x.length === y.length && x.every((item, i) => eq(item, y[i]));
  }
  if (ka === "map") {
    const x = a as Dict, y = b as Dict;
    const kx = Object.keys(x).sort(), ky = Object.keys(y).sort();
    return kx.length === ky.length && kx.every((k, i) => k === ky[i] && eq(x[k], y[k]));
  }
  if (ka === "readable") {
    const x = a as Uint8Array, y = b as Uint8Array;
    return x.length === y.length && x.every((byte, i) => byte === y[i]);
  }
  if (ka === "null") return true;
  return a === b;
}

function text(v: unknown): string | null {
  if (typeof v === "boolean") return v ? "true" : "false";
  if (typeof v === "number") return fmtNum(v);
  if (typeof v === "string") return v;
  return null;
}

export function add(a: unknown, b: unknown): unknown {
  if (typeof a === "number" && typeof b === "number") return a + b;
  if (typeof a === "string" || typeof b === "string") {
    const ta = text(a), tb = text(b);
    if (ta !== null && tb !== null) return ta + tb;
  }
  throw new EvalError("type", `cannot apply '+' to ${kindName(a)} and ${kindName(b)}`);
}

export function asBool(v: unknown, op: string): boolean {
  if (typeof v === "boolean") return v;
  throw new EvalError("type", `'${op}' needs boolean operands, found ${kindName(v)}`);
}

export function cond(v: unknown): boolean {
  if (typeof v === "boolean") return v;
  throw new EvalError("type", `condition must be boolean, found ${kindName(v)}`);
}

export function hole(v: unknown): string {
  if (v === null || v === undefined) throw new EvalError("null-in-template", "null value in template string");
  const t = text(v);
  if (t === null) throw new EvalError("type", `cannot interpolate a ${kindName(v)} value`);
  return t;
}

export function getPath(value: unknown, segments: string[], consumed: number): unknown {
  for (let i = consumed; i < segments.length; i++) {
    if (value === null || value === undefined) {
      throw new EvalError("null-dereference", `null dereference reading '${segments.slice(0, i + 1).join(".")}'`);
    }
    if (!isMap(value)) {
      throw new EvalError("invalid-access", `cannot read '${segments[i]}' from a ${kindName(value)} value`);
    }
    const next: unknown = Object.prototype.hasOwnProperty.call(value, segments[i]) ? value[segments[i]] : null;
    value = next;
  }
  return value;
}

export function map(entries: [string, unknown][]): Dict {
  const out: Dict = {};
  for (const [k, v] of entries) out[k] = v;
  return out;
}

// -- builtins and behaviors -------------------------------------------------

function readable(name: string, v: unknown): Uint8Array {
  if (v instanceof Uint8Array) return v;
  if (typeof v === "string") return encoder.encode(v);
  throw new EvalError("call-failed", `'${name}' failed: expected readable, found ${kindName(v)}`);
}

const BUILTINS: { [name: string]: (v: unknown) => unknown } = {
  "Util.readAsJSON": (v) => {
    const data = readable("Util.readAsJSON", v);
    try {
      return parseJson(data);
    } catch (e) {
      throw new EvalError("call-failed", `'Util.readAsJSON' failed: ${(e as Error).message}`);
    }
  },
  "Util.readAsString": (v) => decoder.decode(readable("Util.readAsString", v)),
  "Util.toJSONString": (v) => toJsonString(v),
};

export function builtin(module: string, method: string, args: unknown[]): unknown {
  const fn = BUILTINS[`${module}.${method}`];
  if (!fn || args.length !== 1) {
    throw new EvalError("call-failed", `'${module}.${method}' failed: no such builtin function`);
  }
  return fn(args[0]);
}

export type BehaviorFn = (...args: any[]) => unknown;

/** Behavior implementations keyed by DSL name (without `@`). */
export class Behaviors {
  protected bindings: { [name: string]: BehaviorFn } = {
    toJSONString: (...args: unknown[]) => {
      if (args.length !== 1) throw new Error(`expected 1 argument, got ${args.length}`);
      return toJsonString(args[0]);
    },
    parseJSON: (...args: unknown[]) => {
      const [s] = args;
      if (args.length !== 1 || !(typeof s === "string" || s instanceof Uint8Array)) {
        throw new Error("expected a single string argument");
      }
      return parseJson(s);
    },
  };

  constructor(overrides: { [name: string]: BehaviorFn } = {}) {
    Object.assign(this.bindings, overrides);
  }

  bind(name: string, fn: BehaviorFn): this {
    this.bindings[name] = fn;
    return this;
  }

  require(names: string[]): void {
    for (const name of names) {
      if (!Object.prototype.hasOwnProperty.call(this.bindings, name)) {
        throw new EvalError("unbound-behavior", `behavior '@${name}' has no implementation`);
      }
    }
  }

  call(name: string, args: unknown[]): unknown {
    this.require([name]);
    try {
      return this.bindings[name](...args);
    } catch (e) {
      if (e instanceof TeaError) throw e;
      throw new EvalError("call-failed", `'@${name}' failed: ${(e as Error).message}`);
    }
  }
}

// -- exchange ---------------------------------------------------------------

export class Config {
  retryTimes = 0;
  backoffMs = 100;
  timeoutMs = 30000;
  defaultProtocol = "https";
  defaultPort = 443;

  constructor(init: Partial<Config> = {}) {
    Object.assign(this, init);
  }
}

export interface Response {
  statusCode: number;
  statusMessage: string;
  headers: { [key: string]: string };
  body: Uint8Array;
}

export class Exchange {
  protocol: string;
  port: number;
  host = "";
  method = "GET";
  pathname = "";
  query: { [key: string]: string } = {};
  headers: { [key: string]: string } = {};
  body: Uint8Array = new Uint8Array();

  constructor(config: Config) {
    this.protocol = config.defaultProtocol;
    this.port = config.defaultPort;
  }

  copy(): Exchange {
    const c = Object.assign(Object.create(Exchange.prototype), this) as Exchange;
    c.query = { ...this.query };
    c.headers = { ...this.headers };
    return c;
  }

  url(): string {
    let url = `${this.protocol}://${this.host}:${this.port}${encodeURI(this.pathname)}`;
    const keys = Object.keys(this.query).sort();
    if (keys.length > 0) {
      url += "?" + keys.map((k) => `${encodeURIComponent(k)}=${encodeURIComponent(this.query[k])}`).join("&");
    }
    return url;
  }
}

export function requestField(req: Exchange, field: string): unknown {
  switch (field) {
    case "protocol":
    case "host":
    case "method":
    case "pathname":
      return req[field];
    case "port":
      return req.port;
    case "query":
    case "headers":
      return { ...req[field] };
    case "body":
      return req.body;
  }
  throw new EvalError("invalid-access", `cannot read '${field}' from a request value`);
}

export function responseField(resp: Response, field: string): unknown {
  switch (field) {
    case "statusCode":
      return resp.statusCode;
    case "statusMessage":
      return resp.statusMessage;
    case "headers":
      return { ...resp.headers };
    case "body":
      return resp.body;
  }
  throw new EvalError("invalid-access", `cannot read '${field}' from a response value`);
}

function str(field: string, v: unknown): string {
  if (typeof v === "string") return v;
  throw new EvalError("type", `request ${field} must be a string, found ${kindName(v)}`);
}

function strMap(field: string, v: unknown): { [key: string]: string } {
  if (!isMap(v)) throw new EvalError("type", `request ${field} must be a map of strings, found ${kindName(v)}`);
  const out: { [key: string]: string } = {};
  for (const k of Object.keys(v)) out[k] = str(field, v[k]);
  return out;
}

export function setRequest(req: Exchange, path: string[], value: unknown): void {
  const [field, ...rest] = path;
  if (field === "protocol" && rest.length === 0) {
    const p = str(field, value);
    if (p !== "http" && p !== "https") throw new EvalError("type", `protocol must be http or https, found '${p}'`);
    req.protocol = p;
  } else if (field === "port" && rest.length === 0) {
    if (typeof value !== "number" || !Number.isInteger(value) || value < 1 || value > 65535) {
      throw new EvalError("type", "port must be an integer in 1-65535");
    }
    req.port = value;
  } else if ((field === "host" || field === "method" || field === "pathname") && rest.length === 0) {
    req[field] = str(field, value);
  } else if ((field === "query" || field === "headers") && rest.length === 0) {
    req[field] = strMap(field, value);
  } else if ((field === "query" || field === "headers") && rest.length === 1) {
    req[field][rest[0]] = str(field, value);
  } else if (field === "body" && rest.length === 0) {
    if (value instanceof Uint8Array) req.body = value;
    else if (typeof value === "string") req.body = encoder.encode(value);
    else throw new EvalError("type", `body must be readable, found ${kindName(value)}`);
  } else {
    throw new EvalError("invalid-access", `cannot read '${path.join(".")}' from a request value`);
  }
}

export interface Transport {
  send(req: Exchange, timeoutMs: number): Promise<Response>;
}

export async function send(transport: Transport, req: Exchange, config: Config): Promise<Response> {
  let attempts = 0;
  for (;;) {
    attempts++;
    try {
      return await transport.send(req.copy(), config.timeoutMs);
    } catch (e) {
      if (!(e instanceof TransportError)) throw e;
      if (attempts >= config.retryTimes + 1) throw new TransportError(e.message, attempts);
      await new Promise((resolve) => setTimeout(resolve, config.backoffMs));
    }
  }
}

// -- transports -------------------------------------------------------------

export interface MockRule {
  match?: { method?: string; pathname?: string };
  respond: {
    statusCode?: number;
    statusMessage?: string;
    headers?: { [key: string]: string };
    body?: unknown;
    error?: string;
  };
  times?: number;
}

/** Rule-driven transport; first matching rule wins, otherwise 404. */
export class MockTransport implements Transport {
  private hits: number[];
  readonly requests: Exchange[] = [];

  constructor(private rules: MockRule[]) {
    rules.forEach((r, i) => {
      if (r.respond.error === undefined) {
        const code = r.respond.statusCode;
        if (code === undefined) throw new Error(`rule ${i}: respond needs either 'statusCode' or 'error'`);
        if (code < 100 || code > 599) throw new Error(`rule ${i}: status code ${code} outside 100-599`);
      }
    });
    this.hits = rules.map(() => 0);
  }

  static fromJson(text: string): MockTransport {
    const data = JSON.parse(text);
    return new MockTransport(Array.isArray(data) ? data : data.rules);
  }

  async send(req: Exchange, _timeoutMs: number): Promise<Response> {
    this.requests.push(req);
    for (let i = 0; i < this.rules.length; i++) {
      const rule = this.rules[i];
      const m = rule.match ?? {};
      if (m.method !== undefined && m.method !== req.method) continue;
      if (m.pathname !== undefined && m.pathname !== req.pathname) continue;
      if (rule.times !== undefined && this.hits[i] >= rule.times) continue;
      this.hits[i]++;
      const r = rule.respond;
      if (r.error !== undefined) throw new TransportError(r.error);
      const body =
        r.body === undefined || r.body === null
          ? new Uint8Array()
          : encoder.encode(typeof r.body === "string" ? r.body : toJsonString(r.body));
      return { statusCode: r.statusCode ?? 200, statusMessage: r.statusMessage ?? "", headers: { ...r.headers }, body };
    }
    return { statusCode: 404, statusMessage: "Not Found", headers: {}, body: new Uint8Array() };
  }
}

export class FetchTransport implements Transport {
  async send(req: Exchange, timeoutMs: number): Promise<Response> {
    let r: globalThis.Response;
    try {
      r = await fetch(req.url(), {
        method: req.method,
        headers: req.headers,
        body: req.body.length > 0 ? (req.body as unknown as BodyInit) : undefined,
        signal: AbortSignal.timeout(timeoutMs),
      });
    } catch (e) {
      throw new TransportError((e as Error).message);
    }
    const headers: { [key: string]: string } = {};
    r.headers.forEach((v, k) => (headers[k] = v));
    return { statusCode: r.status, statusMessage: r.statusText, headers, body: new Uint8Array(await r.arrayBuffer()) };
  }
}

/** Mock transport from `TEA_MOCK_FILE` when set (Node only), else fetch. */
export function defaultTransport(): Transport {
  const proc = (globalThis as any).process;
  const path = proc?.env?.TEA_MOCK_FILE;
  if (path) return MockTransport.fromJson(proc.getBuiltinModule("fs").readFileSync(path, "utf-8"));
  return new FetchTransport();
}

// -- validation -------------------------------------------------------------

export function typeStr(ty: TypeDesc): string {
  if (typeof ty === "string") return ty;
  if (ty[0] === "map") return `map[string]${typeStr(ty[1])}`;
  if (ty[0] === "array") return `[${typeStr(ty[1])}]`;
  return ty[1] as string;
}

const patterns = new Map<string, RegExp | null>();

function search(src: string, s: string): boolean {
  if (!patterns.has(src)) {
    try {
      patterns.set(src, new RegExp(src));
    } catch {
      patterns.set(src, null);
    }
  }
  const rx = patterns.get(src);
  return rx != null && rx.test(s);
}

function join(path: string, seg: string): string {
  return path ? `${path}.${seg}` : seg;
}

export function validate(models: Models, ty: TypeDesc, value: unknown): Violation[] {
  const out: Violation[] = [];
  check(models, "", ty, value, out);
  return out;
}

const SIMPLE: { [ty: string]: string[] } = {
  string: ["string"],
  number: ["number"],
  boolean: ["boolean"],
  readable: ["string", "readable"],
  void: ["null"],
};

function check(models: Models, path: string, ty: TypeDesc, value: unknown, out: Violation[]): boolean {
  const k = kindName(value);
  if (ty === "any") return true;
  if (typeof ty === "string") {
    if (SIMPLE[ty].includes(k)) return true;
  } else if (ty[0] === "map" && k === "map") {
    const m = value as Dict;
    for (const key of Object.keys(m).sort()) check(models, join(path, key), ty[1], m[key], out);
    return true;
  } else if (ty[0] === "array" && k === "array") {
    (value as unknown[]).forEach((item, i) => check(models, join(path, String(i)), ty[1], item, out));
    return true;
  } else if (ty[0] === "model" && k === "map") {
    const meta = models[ty[1] as string];
    if (!meta) return true;
    const m = value as Dict;
    for (const f of meta.fields) {
      const fpath = join(path, f.name);
      const v = Object.prototype.hasOwnProperty.call(m, f.name) ? m[f.name] : null;
      if (v === null || v === undefined) {
        if (!f.optional) out.push({ path: fpath, rule: "missing-required", detail: "required field is missing" });
      } else if (check(models, fpath, f.type, v, out)) {
        constraints(fpath, f.attributes, v, out);
      }
    }
    return true;
  }
  out.push({ path, rule: "type-mismatch", detail: `expected ${typeStr(ty)}, found ${k}` });
  return false;
}

function numAttr(attrs: FieldMeta["attributes"], key: string): number | null {
  const v = attrs[key];
  return typeof v === "number" ? v : null;
}

function constraints(path: string, attrs: FieldMeta["attributes"], value: unknown, out: Violation[]): void {
  const src = attrs["pattern"];
  if (typeof src === "string") {
    const t = typeof value === "string" ? value : typeof value === "number" ? fmtNum(value) : null;
    if (t !== null && !search(src, t)) {
      out.push({ path, rule: "pattern", detail: `'${t}' does not match pattern '${src}'` });
    }
  }
  if (typeof value === "number") {
    const lo = numAttr(attrs, "min"), hi = numAttr(attrs, "max");
    if (lo !== null && value < lo) out.push({ path, rule: "min", detail: `${fmtNum(value)} < ${fmtNum(lo)}` });
    if (hi !== null && value > hi) out.push({ path, rule: "max", detail: `${fmtNum(value)} > ${fmtNum(hi)}` });
  }
  const n = typeof value === "string" ? [...value].length : Array.isArray(value) ? value.length : null;
  if (n !== null) {
    const lo = numAttr(attrs, "minLength"), hi = numAttr(attrs, "maxLength");
    if (lo !== null && n < lo) out.push({ path, rule: "min", detail: `length ${n} < ${fmtNum(lo)}` });
    if (hi !== null && n > hi) out.push({ path, rule: "max", detail: `length ${n} > ${fmtNum(hi)}` });
  }
}

export function checkArgs(models: Models, params: [string, TypeDesc, unknown][]): void {
  const out: Violation[] = [];
  for (const [name, ty, value] of params) {
    if (value === null || value === undefined) {
      if (ty !== "any") out.push({ path: name, rule: "missing-required", detail: "required argument is missing" });
      continue;
    }
    for (const v of validate(models, ty, value)) out.push({ ...v, path: v.path ? join(name, v.path) : name });
  }
  if (out.length > 0) throw new ValidationFailed(out);
}

export function conform(models: Models, ty: TypeDesc, value: unknown): unknown {
  if (typeof ty !== "string" && ty[0] === "model" && isMap(value)) {
    const meta = models[ty[1] as string];
    if (!meta) return value;
    const out: Dict = {};
    for (const f of meta.fields) {
      const v = Object.prototype.hasOwnProperty.call(value, f.name) ? value[f.name] : null;
      if (v !== null && v !== undefined) out[f.name] = conform(models, f.type, v);
    }
    return out;
  }
  if (typeof ty !== "string" && ty[0] === "map" && isMap(value)) {
    const out: Dict = {};
    for (const k of Object.keys(value)) out[k] = conform(models, ty[1], value[k]);
    return out;
  }
  if (typeof ty !== "string" && ty[0] === "array" && Array.isArray(value)) {
    return value.map((v) => conform(models, ty[1], v));
  }
  if (ty === "readable" && typeof value === "string") return encoder.encode(value);
  return value;
}

export const NO_RETURN: unique symbol = Symbol("no-return");

export function finish(models: Models, ty: TypeDesc, value: unknown): unknown {
  if (ty === "void") return undefined;
  if (value === NO_RETURN) throw new EvalError("missing-return", "returns block finished without returning a value");
  if (ty === "any") return value;
  const violations = validate(models, ty, value);
  if (violations.length > 0) throw new ValidationFailed(violations);
  return conform(models, ty, value);
}
