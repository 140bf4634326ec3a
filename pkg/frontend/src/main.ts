/**
 * Page wiring. All domain logic lives in the imported modules; this file only
 * binds drafts to inputs, renders views, and drives the 2 s status poll.
 */

import { ApiError, ServiceClient } from "./client.js";
import { describeChanges, queueRows } from "./dashboard.js";
import {
  buildDebug,
  buildIdentify,
  buildImplement,
  buildResolve,
  buildTest,
  debugDraftFrom,
  emptyAssertionRow,
  implementDraftFrom,
  resolveDraftFrom,
  testDraftFrom,
  type AssertionRowDraft,
  type BuildResult,
  type DebugDraft,
  type IdentifyDraft,
  type ImplementDraft,
  type ResolveDraft,
  type TestDraft,
} from "./forms.js";
import { WorkerSession } from "./session.js";
import { validateProjectSpec, type Issue } from "./validate.js";
import { canonicalText, type Value } from "./values.js";
import {
  SCALAR_TYPES,
  type AssertionDoc,
  type EndpointDoc,
  type MicrotaskView,
  type ProjectSpecDoc,
  type StatusDoc,
} from "./wire.js";

// --- DOM helpers -------------------------------------------------------------

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

type Child = Node | string;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function textInput(value: string, onInput: (v: string) => void, size = 10): HTMLInputElement {
  const input = el("input", { value, size: String(size) });
  input.addEventListener("input", () => onInput(input.value));
  return input;
}

function select(options: readonly string[], value: string, onChange: (v: string) => void): HTMLSelectElement {
  const node = el("select");
  for (const option of options) node.append(el("option", { value: option }, option));
  node.value = value;
  node.addEventListener("change", () => onChange(node.value));
  return node;
}

function renderIssues(target: HTMLElement, issues: Issue[]): void {
  target.replaceChildren(
    ...issues.map((i) => el("div", { class: "issue" }, `${i.path || "request"}: [${i.code}] ${i.message}`)),
  );
}

function signatureText(params: [string, string][], returnType: string): string {
  return `(${params.map(([n, t]) => `${n}: ${t}`).join(", ")}) → ${returnType}`;
}

// --- session state ------------------------------------------------------------

interface ParamRow {
  name: string;
  scalar: string;
}

interface EndpointDraft {
  method: string;
  path: string;
  name: string;
  description: string;
  requestSchema: ParamRow[];
  responseSchema: ParamRow[];
}

const page = {
  clientApi: null as ServiceClient | null,
  worker: null as WorkerSession | null,
  projectName: "",
  endpoints: [] as EndpointDraft[],
  taskDraft: null as IdentifyDraft | TestDraft | ImplementDraft | DebugDraft | ResolveDraft | null,
  lastStatus: null as StatusDoc | null,
  pollTimer: 0,
};

function api(): ServiceClient {
  const base = byId<HTMLInputElement>("base-url").value.trim();
  const clientToken = byId<HTMLInputElement>("client-token").value.trim();
  const enrollToken = byId<HTMLInputElement>("enroll-token").value.trim();
  const workerToken = localStorage.getItem("workerToken") ?? undefined;
  return new ServiceClient(base, {
    client: clientToken || undefined,
    enroll: enrollToken || undefined,
    worker: workerToken,
  });
}

// --- project editor -------------------------------------------------------------

const TODO_SAMPLE: EndpointDoc[] = [
  {
    method: "POST",
    path: "/todos",
    name: "addTodo",
    description: "Append a new todo with the given title.",
    requestSchema: [["todos", "list"], ["title", "string"]],
    responseSchema: [["todos", "list"]],
  },
  {
    method: "DELETE",
    path: "/todos",
    name: "removeTodo",
    description: "Remove the todo at the given index.",
    requestSchema: [["todos", "list"], ["index", "number"]],
    responseSchema: [["todos", "list"]],
  },
  {
    method: "PUT",
    path: "/todos/complete",
    name: "completeTodo",
    description: "Mark the todo at the given index as done.",
    requestSchema: [["todos", "list"], ["index", "number"]],
    responseSchema: [["todos", "list"]],
  },
  {
    method: "GET",
    path: "/todos/stats",
    name: "todoStats",
    description: "Summarize how many todos are done and still open.",
    requestSchema: [["todos", "list"]],
    responseSchema: [["total", "number"], ["completed", "number"], ["active", "number"]],
  },
];

function projectSpecFromDrafts(): ProjectSpecDoc {
  return {
    name: page.projectName,
    endpoints: page.endpoints.map((ep) => ({
      method: ep.method,
      path: ep.path,
      name: ep.name,
      description: ep.description,
      requestSchema: ep.requestSchema.map((p) => [p.name, p.scalar] as [string, string]),
      responseSchema: ep.responseSchema.map((p) => [p.name, p.scalar] as [string, string]),
    })),
  };
}

function revalidateProject(): void {
  const issues = validateProjectSpec(projectSpecFromDrafts());
  renderIssues(byId("project-issues"), issues);
  byId<HTMLButtonElement>("create-project").disabled = issues.length > 0;
}

function schemaEditor(rows: ParamRow[], label: string): HTMLElement {
  const box = el("div", { class: "schema-editor" }, el("span", { class: "muted" }, label));
  const rerender = () => {
    box.replaceChildren(el("span", { class: "muted" }, label));
    rows.forEach((row, i) => {
      const line = el("div", { class: "schema-row" });
      line.append(
        textInput(row.name, (v) => {
          row.name = v;
          revalidateProject();
        }, 10),
        select(SCALAR_TYPES, row.scalar, (v) => {
          row.scalar = v;
          revalidateProject();
        }),
      );
      const drop = el("button", { type: "button" }, "×");
      drop.addEventListener("click", () => {
        rows.splice(i, 1);
        rerender();
        revalidateProject();
      });
      line.append(drop);
      box.append(line);
    });
    const add = el("button", { type: "button" }, "+ field");
    add.addEventListener("click", () => {
      rows.push({ name: "", scalar: "string" });
      rerender();
      revalidateProject();
    });
    box.append(add);
  };
  rerender();
  return box;
}

function renderEndpointEditor(): void {
  const host = byId("endpoint-editor");
  host.replaceChildren();
  page.endpoints.forEach((ep, i) => {
    const card = el("div", { class: "endpoint-card" });
    const head = el("div", { class: "field-row" });
    head.append(
      select(["GET", "POST", "PUT", "DELETE"], ep.method, (v) => {
        ep.method = v;
        revalidateProject();
      }),
      textInput(ep.path, (v) => {
        ep.path = v;
        revalidateProject();
      }, 14),
      textInput(ep.name, (v) => {
        ep.name = v;
        revalidateProject();
      }, 12),
    );
    const drop = el("button", { type: "button" }, "remove");
    drop.addEventListener("click", () => {
      page.endpoints.splice(i, 1);
      renderEndpointEditor();
      revalidateProject();
    });
    head.append(drop);
    card.append(head);
    card.append(
      el("label", { class: "block" }, "description ", textInput(ep.description, (v) => {
        ep.description = v;
        revalidateProject();
      }, 48)),
    );
    card.append(schemaEditor(ep.requestSchema, "request fields"));
    card.append(schemaEditor(ep.responseSchema, "response fields"));
    host.append(card);
  });
}

function loadEndpoints(endpoints: EndpointDoc[], name: string): void {
  page.projectName = name;
  byId<HTMLInputElement>("project-name").value = name;
  page.endpoints = endpoints.map((ep) => ({
    method: ep.method,
    path: ep.path,
    name: ep.name,
    description: ep.description,
    requestSchema: ep.requestSchema.map(([n, s]) => ({ name: n, scalar: s })),
    responseSchema: ep.responseSchema.map(([n, s]) => ({ name: n, scalar: s })),
  }));
  renderEndpointEditor();
  revalidateProject();
}

// --- worker forms ----------------------------------------------------------------

function assertionGrid(
  rows: AssertionRowDraft[],
  params: [string, string][],
  onChange: () => void,
  witnessIndex: number | null = null,
): HTMLElement {
  const grid = el("div", { class: "assertion-grid" });
  const rerender = () => {
    grid.replaceChildren();
    const header = el("div", { class: "assertion-row header" });
    params.forEach(([n, t]) => header.append(el("span", {}, `${n}: ${t}`)));
    header.append(el("span", {}, "expected"));
    grid.append(header);
    rows.forEach((row, i) => {
      const rowEl = el("div", { class: i === witnessIndex ? "assertion-row witness" : "assertion-row" });
      row.args.forEach((text, j) => {
        rowEl.append(
          textInput(text, (v) => {
            row.args[j] = v;
            onChange();
          }, 9),
        );
      });
      rowEl.append(
        textInput(row.expected, (v) => {
          row.expected = v;
          onChange();
        }, 14),
      );
      const drop = el("button", { type: "button" }, "×");
      drop.addEventListener("click", () => {
        rows.splice(i, 1);
        rerender();
        onChange();
      });
      rowEl.append(drop);
      grid.append(rowEl);
    });
    const add = el("button", { type: "button" }, "+ assertion");
    add.addEventListener("click", () => {
      rows.push(emptyAssertionRow(params.length));
      rerender();
      onChange();
    });
    grid.append(add);
  };
  rerender();
  return grid;
}

function assertionTable(assertions: AssertionDoc[], witnessIndex: number | null = null): HTMLElement {
  const table = el("div", { class: "readonly-grid" });
  assertions.forEach((a, i) => {
    table.append(
      el(
        "div",
        { class: i === witnessIndex ? "witness" : "" },
        `${canonicalText(a.args)} → ${canonicalText(a.expected)}`,
      ),
    );
  });
  return table;
}

function functionHeader(view: MicrotaskView): HTMLElement {
  const fn = view.function;
  return el(
    "div",
    { class: "fn-head" },
    el("strong", {}, `${fn.name}${signatureText(fn.params, fn.returnType)}`),
    el("p", {}, fn.description),
    el("p", { class: "muted" }, `${view.kind} · ${view.microtaskId} · attempt ${view.attempt}`),
  );
}

function tableEditor(draft: ImplementDraft, params: [string, string][], onChange: () => void): HTMLElement {
  const box = el("div", { class: "table-editor" });
  const rerender = () => {
    box.replaceChildren();
    const header = el("div", { class: "assertion-row header" });
    params.forEach(([n, t]) => header.append(el("span", {}, `${n}: ${t}`)));
    header.append(el("span", {}, "output"));
    box.append(header);
    draft.rows.forEach((row, i) => {
      const rowEl = el("div", { class: "assertion-row" });
      row.args.forEach((text, j) => {
        rowEl.append(
          textInput(text, (v) => {
            row.args[j] = v;
            onChange();
          }, 9),
        );
      });
      rowEl.append(
        textInput(row.output, (v) => {
          row.output = v;
          onChange();
        }, 14),
      );
      const drop = el("button", { type: "button" }, "×");
      drop.addEventListener("click", () => {
        draft.rows.splice(i, 1);
        rerender();
        onChange();
      });
      rowEl.append(drop);
      box.append(rowEl);
    });
    const add = el("button", { type: "button" }, "+ row");
    add.addEventListener("click", () => {
      draft.rows.push({ args: params.map(() => ""), output: "" });
      rerender();
      onChange();
    });
    box.append(add);
    box.append(
      el("label", { class: "block" }, "default output ", textInput(draft.defaultText, (v) => {
        draft.defaultText = v;
        onChange();
      }, 16)),
    );
  };
  rerender();
  return box;
}

function pseudoCallEditor(draft: ImplementDraft, onChange: () => void): HTMLElement {
  const box = el("div", { class: "pseudo-editor" }, el("h4", {}, "pseudo-calls this implementation relies on"));
  const rerender = () => {
    box.replaceChildren(el("h4", {}, "pseudo-calls this implementation relies on"));
    draft.pseudoCalls.forEach((decl, i) => {
      const card = el("div", { class: "pseudo-card" });
      const head = el("div", { class: "field-row" });
      head.append(
        textInput(decl.name, (v) => {
          decl.name = v;
          onChange();
        }, 14),
        select(SCALAR_TYPES, decl.returnType, (v) => {
          decl.returnType = v;
          onChange();
        }),
      );
      const drop = el("button", { type: "button" }, "remove");
      drop.addEventListener("click", () => {
        draft.pseudoCalls.splice(i, 1);
        rerender();
        onChange();
      });
      head.append(drop);
      card.append(head);
      card.append(
        el("label", { class: "block" }, "description ", textInput(decl.description, (v) => {
          decl.description = v;
          onChange();
        }, 40)),
      );
      const paramBox = el("div", { class: "schema-row" });
      const renderParams = () => {
        paramBox.replaceChildren();
        decl.params.forEach((p, j) => {
          paramBox.append(
            textInput(p.name, (v) => {
              p.name = v;
              onChange();
            }, 8),
            select(SCALAR_TYPES, p.scalar, (v) => {
              p.scalar = v;
              onChange();
            }),
          );
          const dropParam = el("button", { type: "button" }, "×");
          dropParam.addEventListener("click", () => {
            decl.params.splice(j, 1);
            renderParams();
            onChange();
          });
          paramBox.append(dropParam);
        });
        const addParam = el("button", { type: "button" }, "+ param");
        addParam.addEventListener("click", () => {
          decl.params.push({ name: "", scalar: "string" });
          renderParams();
          onChange();
        });
        paramBox.append(addParam);
      };
      renderParams();
      card.append(paramBox);
      box.append(card);
    });
    const add = el("button", { type: "button" }, "+ pseudo-call");
    add.addEventListener("click", () => {
      draft.pseudoCalls.push({ name: "", returnType: "object", description: "", params: [] });
      rerender();
      onChange();
    });
    box.append(add);
  };
  rerender();
  return box;
}

function implementEditor(draft: ImplementDraft, view: MicrotaskView, onChange: () => void): HTMLElement {
  const box = el("div", { class: "impl-editor" });
  const rerender = () => {
    box.replaceChildren();
    const modeRow = el("div", { class: "field-row" });
    (["Table", "Source"] as const).forEach((mode) => {
      const button = el("button", { type: "button", class: draft.mode === mode ? "mode active" : "mode" }, mode);
      button.addEventListener("click", () => {
        draft.mode = mode;
        rerender();
        onChange();
      });
      modeRow.append(button);
    });
    box.append(modeRow);
    if (draft.mode === "Table") {
      box.append(tableEditor(draft, view.function.params, onChange));
    } else {
      const source = el("textarea", { rows: "8", cols: "60" });
      source.value = draft.source;
      source.addEventListener("input", () => {
        draft.source = source.value;
        onChange();
      });
      box.append(
        el("label", { class: "block" }, "language tag ", textInput(draft.languageTag, (v) => {
          draft.languageTag = v;
          onChange();
        }, 10)),
        source,
      );
    }
    box.append(pseudoCallEditor(draft, onChange));
  };
  rerender();
  return box;
}

function activeTestsBlock(view: MicrotaskView): HTMLElement {
  const box = el("div", {}, el("h4", {}, "active tests"));
  for (const test of view.activeTests ?? []) {
    box.append(el("p", {}, `${test.behaviorId}: ${test.statement}`), assertionTable(test.assertions));
  }
  return box;
}

function renderTaskCard(view: MicrotaskView): void {
  const card = byId("task-card");
  card.replaceChildren(functionHeader(view));
  const revalidate = () => refreshSubmitState(view);

  if (view.kind === "IdentifyBehavior") {
    const draft = page.taskDraft as IdentifyDraft;
    const list = el("ul", {});
    for (const b of view.behaviors ?? []) list.append(el("li", {}, `${b.statement} (${b.state})`));
    card.append(el("h4", {}, "behaviors so far"), (view.behaviors ?? []).length > 0 ? list : el("p", { class: "muted" }, "none yet"));
    card.append(
      el("label", { class: "block" }, "new behavior ", textInput(draft.statement, (v) => {
        draft.statement = v;
        revalidate();
      }, 60)),
    );
    const noMore = el("input", { type: "checkbox" });
    noMore.checked = draft.noMore;
    noMore.addEventListener("change", () => {
      draft.noMore = noMore.checked;
      revalidate();
    });
    card.append(
      el(
        "label",
        { class: "block" },
        noMore,
        ` no more behaviors (${view.noMoreCount ?? 0}/${view.identifyQuorum ?? 1} declared${view.alreadyDeclared ? ", including you" : ""})`,
      ),
    );
  } else if (view.kind === "WriteTest") {
    const draft = page.taskDraft as TestDraft;
    const behavior = view.behavior;
    card.append(el("h4", {}, "behavior under test"), el("p", {}, behavior?.statement ?? ""));
    if (view.currentTest) {
      card.append(el("p", { class: "muted" }, `revising test v${view.currentTest.version}`));
    }
    card.append(assertionGrid(draft.rows, view.function.params, revalidate));
  } else if (view.kind === "ImplementBehavior") {
    const draft = page.taskDraft as ImplementDraft;
    card.append(activeTestsBlock(view), implementEditor(draft, view, revalidate));
  } else if (view.kind === "DebugFailure") {
    const draft = page.taskDraft as DebugDraft;
    const report = view.failureReport;
    const table = el("div", { class: "readonly-grid" });
    for (const entry of report?.entries ?? []) {
      const actual = "actual" in entry ? canonicalText(entry.actual ?? null) : (entry.errorText ?? entry.status);
      table.append(
        el(
          "div",
          { class: "witness" },
          `${entry.behaviorId}[${entry.assertionIndex}] args ${canonicalText(entry.args)}: expected ${canonicalText(entry.expected)}, got ${actual}`,
        ),
      );
    }
    card.append(el("h4", {}, "failing assertions"), table, activeTestsBlock(view));
    const outcomes: DebugDraft["outcome"][] = ["FixedImplementation", "DisputeTest", "DisputeBehavior"];
    const outcomeRow = el("div", { class: "field-row" });
    const editorHost = el("div", {});
    const renderOutcome = () => {
      editorHost.replaceChildren();
      if (draft.outcome === "FixedImplementation") {
        editorHost.append(implementEditor(draft.impl, view, revalidate));
      } else {
        const ids = new Set((view.activeTests ?? []).map((t) => t.behaviorId));
        if (draft.outcome === "DisputeBehavior") {
          for (const entry of report?.entries ?? []) ids.add(entry.behaviorId);
        }
        const choices = [...ids];
        if (!choices.includes(draft.behaviorId)) draft.behaviorId = choices[0] ?? "";
        editorHost.append(
          el("label", { class: "block" }, "behavior ", select(choices, draft.behaviorId, (v) => {
            draft.behaviorId = v;
            revalidate();
          })),
        );
      }
      editorHost.append(
        el("label", { class: "block" }, "reason ", textInput(draft.reason, (v) => {
          draft.reason = v;
          revalidate();
        }, 50)),
      );
    };
    outcomes.forEach((outcome) => {
      const button = el("button", { type: "button", class: draft.outcome === outcome ? "mode active" : "mode" }, outcome);
      button.addEventListener("click", () => {
        draft.outcome = outcome;
        renderTaskCard(view); // outcome buttons live in the card; redraw to restyle them
      });
      outcomeRow.append(button);
    });
    card.append(outcomeRow, editorHost);
    renderOutcome();
  } else {
    const draft = page.taskDraft as ResolveDraft;
    const conflict = view.conflict;
    if (conflict) {
      card.append(
        el("h4", {}, "contradiction"),
        el(
          "p",
          { class: "witness" },
          `args ${canonicalText(conflict.args)}: one side expects ${canonicalText(conflict.expectedA)}, the other ${canonicalText(conflict.expectedB)}`,
        ),
      );
    }
    (view.sides ?? []).forEach((side, i) => {
      const sideDraft = draft.sides[i];
      if (sideDraft === undefined) return;
      const box = el("div", { class: "endpoint-card" });
      box.append(el("h4", {}, `${side.behaviorId} (test v${side.testVersion ?? 0})`));
      const editStatement = el("input", { type: "checkbox" });
      editStatement.checked = sideDraft.editStatement;
      editStatement.addEventListener("change", () => {
        sideDraft.editStatement = editStatement.checked;
        renderTaskCard(view);
      });
      box.append(el("label", { class: "block" }, editStatement, " rewrite statement"));
      if (sideDraft.editStatement) {
        box.append(
          textInput(sideDraft.statement, (v) => {
            sideDraft.statement = v;
            revalidate();
          }, 60),
        );
      } else {
        box.append(el("p", {}, side.statement));
      }
      const editTest = el("input", { type: "checkbox" });
      editTest.checked = sideDraft.editTest;
      editTest.addEventListener("change", () => {
        sideDraft.editTest = editTest.checked;
        renderTaskCard(view);
      });
      box.append(el("label", { class: "block" }, editTest, " rewrite test"));
      if (sideDraft.editTest) {
        box.append(assertionGrid(sideDraft.rows, view.function.params, revalidate, side.assertionIndex));
      } else {
        box.append(assertionTable(side.assertions, side.assertionIndex));
      }
      card.append(box);
    });
  }
  refreshSubmitState(view);
}

function buildCurrent(view: MicrotaskView): BuildResult {
  const draft = page.taskDraft;
  if (draft === null) return { issues: [{ path: "", code: "NoDraft", message: "no draft" }] };
  switch (view.kind) {
    case "IdentifyBehavior":
      return buildIdentify(draft as IdentifyDraft, view);
    case "WriteTest":
      return buildTest(draft as TestDraft, view);
    case "ImplementBehavior":
      return buildImplement(draft as ImplementDraft, view);
    case "DebugFailure":
      return buildDebug(draft as DebugDraft, view);
    case "ResolveConflict":
      return buildResolve(draft as ResolveDraft, view);
  }
}

function refreshSubmitState(view: MicrotaskView): void {
  const result = buildCurrent(view);
  renderIssues(byId("task-issues"), "issues" in result ? result.issues : []);
  byId<HTMLButtonElement>("submit-task").disabled = "issues" in result;
}

function clearTaskCard(note: string): void {
  byId("task-card").replaceChildren();
  byId("task-issues").replaceChildren();
  byId<HTMLButtonElement>("submit-task").disabled = true;
  byId<HTMLButtonElement>("skip-task").disabled = true;
  byId("worker-note").textContent = note;
  page.taskDraft = null;
}

function draftFor(view: MicrotaskView): typeof page.taskDraft {
  switch (view.kind) {
    case "IdentifyBehavior":
      return { statement: "", noMore: false };
    case "WriteTest":
      return testDraftFrom(view);
    case "ImplementBehavior":
      return implementDraftFrom(view);
    case "DebugFailure":
      return debugDraftFrom(view);
    case "ResolveConflict":
      return resolveDraftFrom(view);
  }
}

async function onFetchTask(): Promise<void> {
  const worker = page.worker;
  if (worker === null) return;
  try {
    const event = await worker.fetchNext();
    if (event.kind === "assigned") {
      page.taskDraft = draftFor(event.view);
      renderTaskCard(event.view);
      byId<HTMLButtonElement>("skip-task").disabled = false;
      byId("worker-note").textContent = "";
    } else if (event.kind === "noWork") {
      clearTaskCard("no work queued right now; try again shortly");
    } else if (event.kind === "held") {
      const heldId = page.lastStatus ? worker.heldMicrotaskId(page.lastStatus) : null;
      if (heldId !== null) {
        await worker.releaseHeld(heldId);
        clearTaskCard(`released ${heldId} held from a previous session; fetch again`);
      } else {
        clearTaskCard("the server holds an assignment for this worker; open the dashboard to find it");
      }
    }
  } catch (err) {
    byId("worker-note").textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

async function onSubmitTask(): Promise<void> {
  const worker = page.worker;
  const view = worker?.assignment;
  if (worker === null || !view) return;
  const built = buildCurrent(view);
  if ("issues" in built) {
    renderIssues(byId("task-issues"), built.issues);
    return;
  }
  try {
    const event = await worker.submit(built.body);
    if (event.kind === "accepted") {
      clearTaskCard("");
      byId("submit-note").textContent = `accepted; spawned ${event.result.spawned.length} follow-up task(s)`;
    } else if (event.kind === "rejected") {
      clearTaskCard("");
      byId("submit-note").textContent = `rejected [${event.result.code}] ${event.result.message}; requeued as attempt ${event.result.attempt}`;
    } else if (event.kind === "dropped") {
      clearTaskCard(`assignment dropped (${event.reason}); fetch again`);
      byId("submit-note").textContent = "";
    }
  } catch (err) {
    byId("submit-note").textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

async function onSkipTask(): Promise<void> {
  const worker = page.worker;
  if (worker === null || worker.assignment === null) return;
  try {
    const event = await worker.skip();
    clearTaskCard(event.kind === "skipped" ? "skipped" : `assignment dropped; fetch again`);
  } catch (err) {
    byId("worker-note").textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

// --- dashboard --------------------------------------------------------------------

function renderDashboard(status: StatusDoc): void {
  byId("dash-state").textContent = status.completed ? "completed" : "in progress";

  const queues = el("table", { class: "queue-table" });
  const headRow = el("tr", {});
  const depthRow = el("tr", {});
  for (const row of queueRows(status)) {
    headRow.append(el("th", {}, row.kind));
    depthRow.append(el("td", {}, String(row.depth)));
  }
  queues.append(headRow, depthRow);
  byId("dash-queues").replaceChildren(el("h3", {}, "queues"), queues);

  const fns = el("div", {});
  for (const fn of status.functions) {
    const box = el("div", { class: "fn-card" });
    box.append(
      el(
        "p",
        {},
        el("strong", {}, fn.name),
        ` ${signatureText(fn.params, fn.returnType)} · ${fn.state}` +
          (fn.implementationVersion !== null ? ` · impl v${fn.implementationVersion}` : ""),
      ),
    );
    const list = el("ul", {});
    for (const b of fn.behaviors) {
      list.append(el("li", {}, `${b.behaviorId} [${b.state}${b.revisionPending ? ", revising" : ""}] ${b.statement}`));
    }
    box.append(list);
    fns.append(box);
  }
  byId("dash-functions").replaceChildren(el("h3", {}, "functions"), fns);

  const conflicts = el("ul", {});
  for (const c of status.openConflicts) {
    conflicts.append(
      el("li", {}, `${c.id} on ${c.functionId}: args ${canonicalText(c.args)} → ${canonicalText(c.expectedA)} vs ${canonicalText(c.expectedB)}`),
    );
  }
  byId("dash-conflicts").replaceChildren(
    el("h3", {}, "open conflicts"),
    status.openConflicts.length > 0 ? conflicts : el("p", { class: "muted" }, "none"),
  );

  const flags: Child[] = [];
  if (status.flags.stuck.length > 0) flags.push(el("p", {}, `stuck: ${status.flags.stuck.join(", ")}`));
  if (status.flags.attention.length > 0) flags.push(el("p", {}, `attention: ${status.flags.attention.join(", ")}`));
  byId("dash-flags").replaceChildren(...flags);

  const feed = byId("dash-feed");
  for (const line of describeChanges(page.lastStatus, status)) {
    feed.prepend(el("li", {}, `${new Date().toLocaleTimeString()} ${line}`));
  }
  page.lastStatus = status;
}

async function pollStatus(): Promise<void> {
  const projectId = byId<HTMLInputElement>("dash-project").value.trim();
  if (!projectId) return;
  try {
    const status = await api().status(projectId);
    renderDashboard(status);
  } catch (err) {
    byId("dash-state").textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

// --- wiring -------------------------------------------------------------------------

function restoreWorker(): void {
  const workerId = localStorage.getItem("workerId");
  const token = localStorage.getItem("workerToken");
  if (workerId && token) {
    page.worker = new WorkerSession(api().withWorkerToken(token), workerId);
    byId("worker-identity").textContent = `${workerId} (restored)`;
    byId<HTMLButtonElement>("fetch-task").disabled = false;
  }
}

function wire(): void {
  byId("load-todo").addEventListener("click", () => loadEndpoints(TODO_SAMPLE, "todo-service"));
  byId("add-endpoint").addEventListener("click", () => {
    page.endpoints.push({
      method: "POST",
      path: "/",
      name: "",
      description: "",
      requestSchema: [],
      responseSchema: [],
    });
    renderEndpointEditor();
    revalidateProject();
  });
  byId<HTMLInputElement>("project-name").addEventListener("input", (e) => {
    page.projectName = (e.target as HTMLInputElement).value;
    revalidateProject();
  });
  byId("create-project").addEventListener("click", async () => {
    const spec = projectSpecFromDrafts();
    const issues = validateProjectSpec(spec);
    if (issues.length > 0) {
      renderIssues(byId("project-issues"), issues);
      return;
    }
    try {
      const status = await api().createProject(spec);
      byId("create-result").textContent = `created ${status.projectId}`;
      byId<HTMLInputElement>("dash-project").value = status.projectId;
    } catch (err) {
      byId("create-result").textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
  });
  byId("register-worker").addEventListener("click", async () => {
    const handle = byId<HTMLInputElement>("worker-handle").value.trim();
    try {
      const result = await api().register(handle);
      localStorage.setItem("workerId", result.workerId);
      localStorage.setItem("workerToken", result.token);
      page.worker = new WorkerSession(api().withWorkerToken(result.token), result.workerId);
      byId("worker-identity").textContent = `${result.workerId} "${handle || result.workerId}"`;
      byId<HTMLButtonElement>("fetch-task").disabled = false;
    } catch (err) {
      byId("worker-identity").textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
  });
  byId("fetch-task").addEventListener("click", () => void onFetchTask());
  byId("submit-task").addEventListener("click", () => void onSubmitTask());
  byId("skip-task").addEventListener("click", () => void onSkipTask());
  byId<HTMLInputElement>("dash-project").addEventListener("input", () => {
    page.lastStatus = null;
    byId("dash-feed").replaceChildren();
  });
  page.pollTimer = window.setInterval(() => void pollStatus(), 2000);
  restoreWorker();
  revalidateProject();
}

wire();
