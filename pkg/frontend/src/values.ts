/**
 * Wire values and their canonical text form.
 *
 * The service compares values by canonical bytes: JSON with object keys
 * sorted by code point and no insignificant whitespace. Lookup-table
 * implementations are keyed by the canonical text of their args list, and
 * the server rejects keys that are not already canonical, so the text this
 * module produces has to match the server's serializer byte for byte.
 */

export type Value = null | boolean | number | string | Value[] | { [key: string]: Value };

export class MalformedValue extends Error {}

export function ensureValue(value: unknown, path = "value"): Value {
  if (value === null || typeof value === "boolean" || typeof value === "string") return value;
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new MalformedValue(`${path}: numbers must be finite`);
    return value;
  }
  if (Array.isArray(value)) {
    value.forEach((item, i) => ensureValue(item, `${path}[${i}]`));
    return value as Value;
  }
  if (typeof value === "object") {
    for (const [key, item] of Object.entries(value)) ensureValue(item, `${path}.${key}`);
    return value as Value;
  }
  throw new MalformedValue(`${path}: unsupported type ${typeof value}`);
}

/** Parse a form field as JSON and check it fits the value union. */
export function parseValueText(text: string): { value: Value } | { error: string } {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (err) {
    return { error: `not valid JSON: ${(err as Error).message}` };
  }
  try {
    return { value: ensureValue(parsed) };
  } catch (err) {
    return { error: (err as Error).message };
  }
}

/** Code-point string order, the order the server sorts object keys in. */
export function compareText(a: string, b: string): number {
  const ia = a[Symbol.iterator]();
  const ib = b[Symbol.iterator]();
  for (;;) {
    const na = ia.next();
    const nb = ib.next();
    if (na.done && nb.done) return 0;
    if (na.done) return -1;
    if (nb.done) return 1;
    const ca = na.value.codePointAt(0) as number;
    const cb = nb.value.codePointAt(0) as number;
    if (ca !== cb) return ca - cb;
  }
}

export function canonicalText(value: Value): string {
  ensureValue(value);
  return render(value);
}

export function valuesEqual(a: Value, b: Value): boolean {
  return canonicalText(a) === canonicalText(b);
}

function render(value: Value): string {
  if (typeof value === "number") return numberText(value);
  if (value === null || typeof value !== "object") return JSON.stringify(value);
  if (Array.isArray(value)) return `[${value.map(render).join(",")}]`;
  const keys = Object.keys(value).sort(compareText);
  return `{${keys.map((k) => `${JSON.stringify(k)}:${render(value[k] as Value)}`).join(",")}}`;
}

/**
 * Render a number the way the server's serializer would.
 *
 * Whole numbers match as-is: this side prints them without a decimal point
 * and the server reads such text as an integer, reproducing it exactly. The
 * fractional cases differ only in where scientific notation kicks in (the
 * server switches below 1e-4 and pads exponents to two digits), so those are
 * reformatted from the shortest-digits form.
 */
export function numberText(n: number): string {
  const plain = String(n);
  if (Number.isInteger(n) && !plain.includes("e")) return plain;
  const match = /^(-?)(\d+)(?:\.(\d+))?(?:e([+-]\d+))?$/.exec(plain);
  if (match === null) return plain;
  const sign = match[1] ?? "";
  const whole = match[2] ?? "0";
  const frac = match[3] ?? "";
  const exp = match[4];
  let digits = whole + frac;
  // decimal exponent of the leading significant digit: value = d.ddd * 10^decExp
  let decExp = exp !== undefined ? parseInt(exp, 10) : whole.length - 1;
  if (exp === undefined && whole === "0") {
    const lead = digits.search(/[1-9]/);
    decExp = -lead;
    digits = digits.slice(lead);
  }
  digits = digits.replace(/0+$/, "") || "0";
  if (decExp >= -4 && decExp < 16) return plain;
  const head = digits[0];
  const tail = digits.slice(1);
  const expText = `${decExp < 0 ? "-" : "+"}${String(Math.abs(decExp)).padStart(2, "0")}`;
  return `${sign}${head}${tail ? "." + tail : ""}e${expText}`;
}
