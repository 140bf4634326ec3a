/** Sample documents shaped like live service responses, for exercising the
 * validators and builders without a server. */

import type { EndpointDoc, MicrotaskView, ProjectSpecDoc, StatusDoc } from "../src/wire.js";

export const TODO_ENDPOINTS: EndpointDoc[] = [
  {
    method: "POST",
    path: "/todos",
    name: "addTodo",
    description: "Append a new todo with the given title.",
    requestSchema: [
      ["todos", "list"],
      ["title", "string"],
    ],
    responseSchema: [["todos", "list"]],
  },
  {
    method: "GET",
    path: "/todos/stats",
    name: "todoStats",
    description: "Summarize how many todos are done and still open.",
    requestSchema: [["todos", "list"]],
    responseSchema: [
      ["total", "number"],
      ["completed", "number"],
      ["active", "number"],
    ],
  },
];

export function todoSpec(): ProjectSpecDoc {
  return { name: "todo-service", endpoints: structuredClone(TODO_ENDPOINTS) };
}

const BASE = {
  microtaskId: "p1-m7",
  projectId: "p1",
  attempt: 1,
  skipCount: 0,
  leaseExpiry: 600_000,
  function: {
    functionId: "p1-f1",
    name: "addTodo",
    description: "Append a new todo with the given title.",
    params: [
      ["todos", "list"],
      ["title", "string"],
    ] as [string, string][],
    returnType: "object",
    state: "Implemented",
  },
};

export function identifyView(overrides: Partial<MicrotaskView> = {}): MicrotaskView {
  return {
    ...structuredClone(BASE),
    kind: "IdentifyBehavior",
    behaviors: [{ behaviorId: "p1-b1", statement: "appends the new todo", state: "Tested" }],
    noMoreCount: 0,
    identifyQuorum: 1,
    alreadyDeclared: false,
    ...overrides,
  };
}

export function testView(overrides: Partial<MicrotaskView> = {}): MicrotaskView {
  return {
    ...structuredClone(BASE),
    kind: "WriteTest",
    behavior: { behaviorId: "p1-b1", statement: "appends the new todo", state: "Identified", revisionPending: false },
    currentTest: null,
    ...overrides,
  };
}

export function implementView(overrides: Partial<MicrotaskView> = {}): MicrotaskView {
  return {
    ...structuredClone(BASE),
    kind: "ImplementBehavior",
    currentImplementation: null,
    activeTests: [
      {
        behaviorId: "p1-b1",
        statement: "appends the new todo",
        assertions: [{ args: [[], "milk"], expected: { todos: [{ title: "milk", done: false }] } }],
      },
    ],
    knownFunctions: [
      { name: "addTodo", params: BASE.function.params, returnType: "object" },
      { name: "normalizeTitle", params: [["title", "string"]], returnType: "string" },
    ],
    ...overrides,
  };
}

export function debugView(overrides: Partial<MicrotaskView> = {}): MicrotaskView {
  return {
    ...implementView(),
    kind: "DebugFailure",
    currentImplementation: {
      kind: "Table",
      entries: { '[[],"milk"]': { todos: [] } },
      default: { todos: [] },
      declaredPseudoCalls: [],
    },
    failureReport: {
      functionId: "p1-f1",
      implementationVersion: 1,
      entries: [
        {
          behaviorId: "p1-b1",
          assertionIndex: 0,
          args: [[], "milk"],
          expected: { todos: [{ title: "milk", done: false }] },
          status: "Fail",
          actual: { todos: [] },
        },
      ],
    },
    ...overrides,
  };
}

export function resolveView(overrides: Partial<MicrotaskView> = {}): MicrotaskView {
  return {
    ...structuredClone(BASE),
    kind: "ResolveConflict",
    conflict: {
      id: "p1-c1",
      functionId: "p1-f1",
      sideA: ["p1-b1", 0],
      sideB: ["p1-b2", 0],
      args: [[], "milk"],
      expectedA: { todos: [{ title: "milk", done: false }] },
      expectedB: { todos: [{ title: "MILK", done: false }] },
      state: "Open",
      ticketId: "p1-m7",
      note: "",
    },
    sides: [
      {
        behaviorId: "p1-b1",
        assertionIndex: 0,
        statement: "appends the new todo",
        state: "Tested",
        assertions: [{ args: [[], "milk"], expected: { todos: [{ title: "milk", done: false }] } }],
        testVersion: 1,
      },
      {
        behaviorId: "p1-b2",
        assertionIndex: 0,
        statement: "uppercases the title",
        state: "Tested",
        assertions: [{ args: [[], "milk"], expected: { todos: [{ title: "MILK", done: false }] } }],
        testVersion: 1,
      },
    ],
    ...overrides,
  };
}

export function statusDoc(overrides: Partial<StatusDoc> = {}): StatusDoc {
  return {
    projectId: "p1",
    name: "todo-service",
    completed: false,
    createdAt: 0,
    functions: [
      {
        functionId: "p1-f1",
        name: "addTodo",
        description: "Append a new todo with the given title.",
        params: [
          ["todos", "list"],
          ["title", "string"],
        ],
        returnType: "object",
        origin: { kind: "EndpointRoot", ref: "POST /todos" },
        state: "Implemented",
        behaviors: [
          {
            behaviorId: "p1-b1",
            statement: "appends the new todo",
            state: "Passing",
            testId: "p1-t1",
            testVersion: 1,
            revisionPending: false,
          },
        ],
        implementationVersion: 1,
        noMoreCount: 0,
      },
    ],
    queueDepths: {
      IdentifyBehavior: 2,
      WriteTest: 1,
      ImplementBehavior: 0,
      DebugFailure: 0,
      ResolveConflict: 0,
    },
    openMicrotasks: [
      {
        microtaskId: "p1-m3",
        kind: "WriteTest",
        state: "Assigned",
        functionId: "p1-f1",
        attempt: 1,
        skipCount: 0,
        assignedWorker: "w1",
        leaseExpiry: 600_000,
      },
    ],
    openConflicts: [],
    flags: { stuck: [], attention: [] },
    ...overrides,
  };
}
