/**
 * Worker-side view model: at most one assignment is held at a time, drafts
 * stay local, and stale-assignment races (lease expiry, reassignment) drop
 * the assignment so the loop can fetch fresh work.
 */

import { ApiError, type ServiceClient } from "./client.js";
import type { MicrotaskView, StatusDoc, SubmissionBody, SubmitResult } from "./wire.js";

export type WorkerEvent =
  | { kind: "assigned"; view: MicrotaskView }
  | { kind: "noWork" }
  | { kind: "accepted"; result: Extract<SubmitResult, { status: "accepted" }> }
  | { kind: "rejected"; result: Extract<SubmitResult, { status: "rejected" }> }
  | { kind: "skipped" }
  | { kind: "dropped"; reason: string }
  | { kind: "held"; reason: string };

/** Codes that mean "you no longer hold this microtask": drop and re-fetch. */
const DROP_CODES = new Set(["StaleMicrotask", "NotAssignee", "UnknownMicrotask"]);

export class WorkerSession {
  assignment: MicrotaskView | null = null;

  constructor(
    private readonly client: ServiceClient,
    readonly workerId: string,
  ) {}

  async fetchNext(): Promise<WorkerEvent> {
    if (this.assignment !== null) {
      return { kind: "assigned", view: this.assignment };
    }
    try {
      const result = await this.client.fetchTask(this.workerId);
      if (result.noWork) return { kind: "noWork" };
      this.assignment = result.microtask;
      return { kind: "assigned", view: result.microtask };
    } catch (err) {
      if (err instanceof ApiError && err.code === "AlreadyAssigned") {
        // the server still holds an assignment from before a reload
        return { kind: "held", reason: err.message };
      }
      throw err;
    }
  }

  async submit(body: SubmissionBody): Promise<WorkerEvent> {
    if (this.assignment === null) throw new Error("no assignment to submit");
    const microtaskId = this.assignment.microtaskId;
    try {
      const result = await this.client.submit(microtaskId, body);
      this.assignment = null;
      return result.status === "accepted"
        ? { kind: "accepted", result }
        : { kind: "rejected", result };
    } catch (err) {
      return this.dropOnStale(err);
    }
  }

  async skip(): Promise<WorkerEvent> {
    if (this.assignment === null) throw new Error("no assignment to skip");
    const microtaskId = this.assignment.microtaskId;
    try {
      await this.client.skip(microtaskId);
      this.assignment = null;
      return { kind: "skipped" };
    } catch (err) {
      return this.dropOnStale(err);
    }
  }

  private dropOnStale(err: unknown): WorkerEvent {
    if (err instanceof ApiError && DROP_CODES.has(err.code)) {
      this.assignment = null;
      return { kind: "dropped", reason: `${err.code}: ${err.message}` };
    }
    throw err;
  }

  /**
   * After a reload the server may still hold an assignment this session does
   * not know about. The status document names it; skipping it requeues the
   * work so the loop can fetch it back with a fresh view.
   */
  heldMicrotaskId(status: StatusDoc): string | null {
    for (const task of status.openMicrotasks) {
      if (task.state === "Assigned" && task.assignedWorker === this.workerId) {
        return task.microtaskId;
      }
    }
    return null;
  }

  async releaseHeld(microtaskId: string): Promise<void> {
    try {
      await this.client.skip(microtaskId);
    } catch (err) {
      this.dropOnStale(err); // already gone is fine; anything else propagates
    }
  }
}
