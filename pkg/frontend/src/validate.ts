/**
 * Client-side mirrors of the service's request checks.
 *
 * Two families are mirrored, in the same order the server applies them:
 * structural shape checks, which the server answers with 400, and content
 * checks (empty projects, duplicate endpoints, bad schemas, kind mismatches),
 * which it answers with 409. A request built from a draft with no issues is
 * one the server will not refuse for schema reasons. Deeper content rules
 * that only the server can see in full (duplicate statements across unseen
 * behaviors, say) come back as submission rejections, not 4xx, and are
 * checked here only as far as the fetched view allows.
 */

import { canonicalText, ensureValue, MalformedValue, type Value } from "./values.js";
import {
  HTTP_METHODS,
  MICROTASK_KINDS,
  SCALAR_TYPES,
  type AssertionDoc,
  type ImplementationDoc,
  type MicrotaskView,
  type ProjectSpecDoc,
  type PseudoCallDoc,
  type SubmissionBody,
} from "./wire.js";

export interface Issue {
  path: string;
  code: string;
  message: string;
}

const issue = (path: string, code: string, message: string): Issue => ({ path, code, message });

function checkValue(out: Issue[], value: unknown, path: string): void {
  try {
    ensureValue(value, path);
  } catch (err) {
    if (!(err instanceof MalformedValue)) throw err;
    out.push(issue(path, "MalformedBody", err.message));
  }
}

// --- project specs --------------------------------------------------------------

function checkSchema(out: Issue[], schema: unknown, path: string): void {
  if (!Array.isArray(schema)) {
    out.push(issue(path, "MalformedBody", "schema must be a list"));
    return;
  }
  const seen = new Set<string>();
  schema.forEach((pair, i) => {
    if (!Array.isArray(pair) || pair.length !== 2 || pair.some((p) => typeof p !== "string")) {
      out.push(issue(`${path}[${i}]`, "MalformedBody", "each schema entry is a [fieldName, scalarType] pair"));
      return;
    }
    const [name, scalar] = pair as [string, string];
    if (!name) out.push(issue(`${path}[${i}]`, "BadSchema", "empty field name"));
    if (!(SCALAR_TYPES as readonly string[]).includes(scalar)) {
      out.push(issue(`${path}[${i}]`, "BadSchema", `unknown scalar type "${scalar}"`));
    }
    if (seen.has(name)) out.push(issue(`${path}[${i}]`, "BadSchema", `duplicate field "${name}"`));
    seen.add(name);
  });
}

export function validateProjectSpec(spec: ProjectSpecDoc): Issue[] {
  const out: Issue[] = [];
  if (typeof spec.name !== "string") {
    out.push(issue("name", "MalformedBody", "project name must be a string"));
  }
  if (!Array.isArray(spec.endpoints)) {
    out.push(issue("endpoints", "MalformedBody", "endpoints must be a list"));
    return out;
  }
  if (spec.endpoints.length === 0) {
    out.push(issue("endpoints", "EmptyProject", "a project needs at least one endpoint"));
  }
  const seenRoutes = new Set<string>();
  const seenNames = new Set<string>();
  spec.endpoints.forEach((ep, i) => {
    const path = `endpoints[${i}]`;
    for (const key of ["method", "path", "name", "description"] as const) {
      if (typeof ep[key] !== "string") {
        out.push(issue(`${path}.${key}`, "MalformedBody", `${key} must be a string`));
        return;
      }
    }
    if (!(HTTP_METHODS as readonly string[]).includes(ep.method)) {
      out.push(issue(`${path}.method`, "BadSchema", `unsupported method "${ep.method}"`));
    }
    if (!ep.path.startsWith("/")) {
      out.push(issue(`${path}.path`, "BadSchema", "path must start with '/'"));
    }
    if (!ep.name) out.push(issue(`${path}.name`, "BadSchema", "endpoint name must be non-empty"));
    checkSchema(out, ep.requestSchema, `${path}.requestSchema`);
    checkSchema(out, ep.responseSchema, `${path}.responseSchema`);
    const route = `${ep.method} ${ep.path}`;
    if (seenRoutes.has(route)) {
      out.push(issue(`${path}.path`, "DuplicateEndpoint", `duplicate route ${route}`));
    }
    if (ep.name && seenNames.has(ep.name)) {
      out.push(issue(`${path}.name`, "DuplicateEndpoint", `duplicate endpoint name "${ep.name}"`));
    }
    seenRoutes.add(route);
    seenNames.add(ep.name);
  });
  return out;
}

// --- submission bodies -----------------------------------------------------------

function checkAssertions(out: Issue[], assertions: AssertionDoc[], arity: number, path: string): void {
  if (!Array.isArray(assertions)) {
    out.push(issue(path, "MalformedBody", "assertions must be a list"));
    return;
  }
  if (assertions.length === 0) {
    out.push(issue(path, "EmptyAssertions", "a test needs at least one assertion"));
  }
  assertions.forEach((a, i) => {
    if (typeof a !== "object" || a === null || !Array.isArray(a.args)) {
      out.push(issue(`${path}[${i}]`, "MalformedBody", "each assertion is {args: [...], expected: ...}"));
      return;
    }
    checkValue(out, a.args, `${path}[${i}].args`);
    if (!("expected" in a)) {
      out.push(issue(`${path}[${i}].expected`, "MalformedBody", "expected is missing"));
    } else {
      checkValue(out, a.expected, `${path}[${i}].expected`);
    }
    if (a.args.length !== arity) {
      out.push(
        issue(
          `${path}[${i}].args`,
          "ArityMismatch",
          `assertion has ${a.args.length} args, the function takes ${arity}`,
        ),
      );
    }
  });
}

function pseudoSignature(decl: { params: unknown; returnType: unknown }): string {
  return canonicalText({ params: decl.params as Value, returnType: decl.returnType as Value });
}

function checkPseudoCalls(
  out: Issue[],
  decls: PseudoCallDoc[],
  known: { name: string; params: unknown; returnType: unknown }[],
  path: string,
): void {
  const fresh = new Map<string, string>();
  decls.forEach((decl, i) => {
    const where = `${path}[${i}]`;
    if (typeof decl.name !== "string" || typeof decl.returnType !== "string") {
      out.push(issue(where, "MalformedBody", "name and returnType must be strings"));
      return;
    }
    if (!decl.name) out.push(issue(`${where}.name`, "InvalidImplementation", "pseudo-call name must be non-empty"));
    if (!(SCALAR_TYPES as readonly string[]).includes(decl.returnType)) {
      out.push(issue(`${where}.returnType`, "UnknownPseudoCallType", `unknown return type "${decl.returnType}"`));
    }
    if (!Array.isArray(decl.params)) {
      out.push(issue(`${where}.params`, "MalformedBody", "schema must be a list"));
      return;
    }
    decl.params.forEach((pair, j) => {
      if (!Array.isArray(pair) || pair.length !== 2 || pair.some((p) => typeof p !== "string")) {
        out.push(issue(`${where}.params[${j}]`, "MalformedBody", "each schema entry is a [fieldName, scalarType] pair"));
        return;
      }
      const [paramName, scalar] = pair;
      if (!(SCALAR_TYPES as readonly string[]).includes(scalar)) {
        out.push(issue(`${where}.params[${j}]`, "UnknownPseudoCallType", `unknown param type "${scalar}"`));
      }
      if (!paramName) {
        out.push(issue(`${where}.params[${j}]`, "InvalidImplementation", "pseudo-call param name must be non-empty"));
      }
    });
    const signature = pseudoSignature(decl);
    const existing = known.find((fn) => fn.name === decl.name);
    if (existing && pseudoSignature(existing) !== signature) {
      out.push(
        issue(`${where}.name`, "DuplicateFunctionName", `"${decl.name}" already exists with a different signature`),
      );
    }
    const prior = fresh.get(decl.name);
    if (prior !== undefined && prior !== signature) {
      out.push(
        issue(`${where}.name`, "DuplicateFunctionName", `"${decl.name}" declared twice with different signatures`),
      );
    }
    fresh.set(decl.name, signature);
  });
}

export function validateImplementation(
  impl: ImplementationDoc,
  arity: number,
  known: { name: string; params: unknown; returnType: unknown }[],
  path = "implementation",
): Issue[] {
  const out: Issue[] = [];
  if (typeof impl !== "object" || impl === null) {
    return [issue(path, "MalformedBody", "implementation must be an object")];
  }
  if (impl.kind !== "Table" && impl.kind !== "Source") {
    return [issue(`${path}.kind`, "MalformedBody", "kind must be Table or Source")];
  }
  checkPseudoCalls(out, impl.declaredPseudoCalls ?? [], known, `${path}.declaredPseudoCalls`);
  if (impl.kind === "Table") {
    if (typeof impl.entries !== "object" || impl.entries === null || Array.isArray(impl.entries)) {
      out.push(issue(`${path}.entries`, "MalformedBody", "entries must be an object"));
      return out;
    }
    if (!("default" in impl)) {
      out.push(issue(`${path}.default`, "MalformedBody", "default is missing"));
    } else {
      checkValue(out, impl.default, `${path}.default`);
    }
    for (const [key, value] of Object.entries(impl.entries)) {
      let args: Value;
      try {
        args = ensureValue(JSON.parse(key));
      } catch {
        out.push(issue(`${path}.entries`, "MalformedBody", `key ${JSON.stringify(key)} is not canonical JSON`));
        continue;
      }
      if (!Array.isArray(args)) {
        out.push(issue(`${path}.entries`, "MalformedBody", `key ${JSON.stringify(key)} must encode an args list`));
        continue;
      }
      if (canonicalText(args) !== key) {
        out.push(issue(`${path}.entries`, "MalformedBody", `key ${JSON.stringify(key)} is not in canonical form`));
        continue;
      }
      checkValue(out, value, `${path}.entries[${key}]`);
      if (args.length !== arity) {
        out.push(
          issue(`${path}.entries`, "InvalidImplementation", `table key ${key} does not match arity ${arity}`),
        );
      }
    }
    return out;
  }
  if (typeof impl.source !== "string" || impl.source === "") {
    out.push(issue(`${path}.source`, "MalformedBody", "source is required"));
  }
  if (typeof impl.languageTag !== "string" || impl.languageTag === "") {
    out.push(issue(`${path}.languageTag`, "MalformedBody", "languageTag is required"));
  }
  return out;
}

export function validateSubmission(body: SubmissionBody, view: MicrotaskView): Issue[] {
  const out: Issue[] = [];
  if (!(MICROTASK_KINDS as readonly string[]).includes(body.kind)) {
    return [issue("kind", "MalformedBody", `kind must be one of ${MICROTASK_KINDS.join(", ")}`)];
  }
  if (body.kind !== view.kind) {
    return [issue("kind", "KindMismatch", `submission kind ${body.kind} does not match microtask kind ${view.kind}`)];
  }
  const arity = view.function.params.length;

  if (body.kind === "IdentifyBehavior") {
    const statement = "newStatement" in body ? body.newStatement : undefined;
    const noMore = "noMoreBehaviors" in body ? body.noMoreBehaviors : false;
    if (statement !== undefined && typeof statement !== "string") {
      return [issue("newStatement", "MalformedBody", "newStatement must be a string")];
    }
    if (typeof noMore !== "boolean") {
      return [issue("noMoreBehaviors", "MalformedBody", "noMoreBehaviors must be a boolean")];
    }
    if (noMore === (statement !== undefined)) {
      return [issue("", "MalformedBody", "exactly one of newStatement / noMoreBehaviors")];
    }
    if (noMore) {
      if ((view.behaviors ?? []).length === 0) {
        out.push(issue("noMoreBehaviors", "NoBehaviors", "identify at least one behavior before closing"));
      }
      if (view.alreadyDeclared) {
        out.push(issue("noMoreBehaviors", "AlreadyDeclared", "you already declared no more behaviors"));
      }
      return out;
    }
    if (!(statement as string).trim()) {
      out.push(issue("newStatement", "EmptyStatement", "behavior statement must be non-empty"));
    }
    if ((view.behaviors ?? []).some((b) => b.statement === statement)) {
      out.push(issue("newStatement", "DuplicateBehavior", "statement already recorded for this function"));
    }
    return out;
  }

  if (body.kind === "WriteTest") {
    checkAssertions(out, body.assertions, arity, "assertions");
    return out;
  }

  if (body.kind === "ImplementBehavior") {
    out.push(...validateImplementation(body.implementation, arity, view.knownFunctions ?? []));
    return out;
  }

  if (body.kind === "DebugFailure") {
    if (typeof body.reason !== "string") {
      out.push(issue("reason", "MalformedBody", "reason must be a string"));
    }
    if (body.outcome === "FixedImplementation") {
      out.push(...validateImplementation(body.implementation, arity, view.knownFunctions ?? []));
      return out;
    }
    if (body.outcome !== "DisputeTest" && body.outcome !== "DisputeBehavior") {
      return [issue("outcome", "MalformedBody", "outcome must be FixedImplementation, DisputeTest or DisputeBehavior")];
    }
    if (typeof body.behaviorId !== "string") {
      out.push(issue("behaviorId", "MalformedBody", "behaviorId must be a string"));
      return out;
    }
    const known = new Set((view.activeTests ?? []).map((t) => t.behaviorId));
    if (body.outcome === "DisputeBehavior") {
      for (const entry of view.failureReport?.entries ?? []) known.add(entry.behaviorId);
    }
    if (!known.has(body.behaviorId)) {
      out.push(issue("behaviorId", "UnknownBehavior", `${body.behaviorId} is not a behavior this view shows`));
    }
    return out;
  }

  // ResolveConflict
  const sides = view.sides ?? [];
  const participants = new Set(sides.map((s) => s.behaviorId));
  for (const [bid, text] of Object.entries(body.editedStatements)) {
    if (!participants.has(bid)) {
      out.push(issue(`editedStatements.${bid}`, "UnknownBehavior", `${bid} is not a participant in this conflict`));
    }
    if (typeof text !== "string") {
      out.push(issue(`editedStatements.${bid}`, "MalformedBody", "edited statement must be a string"));
    } else if (!text.trim()) {
      out.push(issue(`editedStatements.${bid}`, "EmptyStatement", "edited statement must be non-empty"));
    } else if (sides.some((s) => s.behaviorId !== bid && s.statement === text)) {
      out.push(issue(`editedStatements.${bid}`, "DuplicateBehavior", "edited statement duplicates the other side"));
    }
  }
  for (const [bid, assertions] of Object.entries(body.editedTests)) {
    if (!participants.has(bid)) {
      out.push(issue(`editedTests.${bid}`, "UnknownBehavior", `${bid} is not a participant in this conflict`));
    }
    checkAssertions(out, assertions, arity, `editedTests.${bid}`);
  }
  const still = stillContradicts(body, view);
  if (still !== null) out.push(still);
  return out;
}

/**
 * Preview of the server's resolution check: after the edits, do the two
 * witnessed assertions still claim different results for the same args?
 */
function stillContradicts(
  body: { editedTests: Record<string, AssertionDoc[]> },
  view: MicrotaskView,
): Issue | null {
  const sides = view.sides ?? [];
  if (sides.length !== 2) return null;
  const after = sides.map((side) => {
    const edited = body.editedTests[side.behaviorId];
    const assertions = edited ?? (side.state === "Retired" ? [] : side.assertions);
    const assertion = assertions[side.assertionIndex];
    return assertion === undefined || !Array.isArray(assertion.args) ? null : assertion;
  });
  const [a, b] = after;
  if (!a || !b) return null;
  try {
    if (canonicalText(a.args) === canonicalText(b.args) && canonicalText(a.expected) !== canonicalText(b.expected)) {
      return issue("editedTests", "UnresolvedContradiction", "the witnessed assertions still disagree");
    }
  } catch {
    return null; // malformed values are reported by the shape checks
  }
  return null;
}
