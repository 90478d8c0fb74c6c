// DOM wiring. One in-flight mutating request at a time, matching the
// service's 409 contract: controls are disabled from click to response.

import { DebugClient, ServiceError } from "./client.js";
import type { CodeResponse, SessionState } from "./types.js";
import { buildSessionView, UiSessionView } from "./view.js";

const TRACE_TAIL = 25;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

class App {
  private client: DebugClient;
  private sessionId: string | null = null;
  private code: CodeResponse | null = null;
  private selectedScope = "global";
  private busy = false;
  private lastBundle = "";
  private lastArgs = "[]";

  constructor() {
    this.client = new DebugClient(this.serviceUrl());
    el<HTMLButtonElement>("btn-create").addEventListener("click", () => this.create());
    el<HTMLButtonElement>("btn-step").addEventListener("click", () => this.mutate("step"));
    el<HTMLButtonElement>("btn-continue").addEventListener("click", () => this.mutate("continue"));
    el<HTMLButtonElement>("btn-reset").addEventListener("click", () => this.reset());
  }

  private serviceUrl(): string {
    return el<HTMLInputElement>("service-url").value.replace(/\/+$/, "");
  }

  private banner(message: string | null): void {
    const node = el<HTMLDivElement>("banner");
    node.textContent = message ?? "";
    node.style.display = message ? "block" : "none";
  }

  private async create(): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    this.banner(null);
    try {
      this.client = new DebugClient(this.serviceUrl());
      this.lastBundle = el<HTMLInputElement>("bundle-path").value;
      this.lastArgs = el<HTMLInputElement>("entry-args").value || "[]";
      const state = await this.client.createSession(
        this.lastBundle,
        JSON.parse(this.lastArgs) as unknown[],
      );
      this.sessionId = state.id;
      this.code = await this.client.getCode(state.id);
      this.selectedScope = "global";
      await this.refresh(state);
    } catch (error) {
      this.banner(describe(error));
    } finally {
      this.busy = false;
    }
  }

  private async reset(): Promise<void> {
    if (this.busy || this.sessionId === null) {
      return;
    }
    this.busy = true;
    try {
      await this.client.deleteSession(this.sessionId).catch(() => undefined);
      const state = await this.client.createSession(
        this.lastBundle,
        JSON.parse(this.lastArgs) as unknown[],
      );
      this.sessionId = state.id;
      this.code = await this.client.getCode(state.id);
      this.selectedScope = "global";
      this.banner(null);
      await this.refresh(state);
    } catch (error) {
      this.banner(describe(error));
    } finally {
      this.busy = false;
    }
  }

  private async mutate(kind: "step" | "continue"): Promise<void> {
    if (this.busy || this.sessionId === null) {
      return;
    }
    this.busy = true;
    this.setControls({ step: false, continue: false, reset: false });
    try {
      const state =
        kind === "step"
          ? await this.client.step(this.sessionId)
          : await this.client.continueRun(this.sessionId);
      await this.refresh(state);
      this.banner(null);
    } catch (error) {
      this.banner(describe(error));
    } finally {
      this.busy = false;
    }
  }

  async inspect(scope: string): Promise<void> {
    if (this.sessionId === null) {
      return;
    }
    this.selectedScope = scope;
    try {
      const state = await this.client.getState(this.sessionId);
      await this.refresh(state);
    } catch (error) {
      this.banner(describe(error));
    }
  }

  private async refresh(state: SessionState): Promise<void> {
    if (this.sessionId === null) {
      return;
    }
    const id = this.sessionId;
    const stack = await this.client.getStack(id);
    let heapScope = this.selectedScope;
    let heapVariables: Record<string, unknown> = {};
    try {
      heapVariables = (await this.client.getHeap(id, heapScope)).variables;
    } catch (error) {
      if (error instanceof ServiceError && error.status === 404) {
        heapScope = "global";
        this.selectedScope = "global";
        heapVariables = (await this.client.getHeap(id)).variables;
      } else {
        throw error;
      }
    }
    const trace = await this.client.getTrace(id, TRACE_TAIL);
    const view = buildSessionView({
      state,
      stack: stack.stack,
      heapScope,
      heapVariables,
      code: this.code,
      trace,
    });
    this.render(view);
  }

  private setControls(controls: { step: boolean; continue: boolean; reset: boolean }): void {
    el<HTMLButtonElement>("btn-step").disabled = !controls.step;
    el<HTMLButtonElement>("btn-continue").disabled = !controls.continue;
    el<HTMLButtonElement>("btn-reset").disabled = !controls.reset;
  }

  private render(view: UiSessionView): void {
    el<HTMLSpanElement>("session-meta").textContent =
      `session ${view.sessionId} · step ${view.stepCounter} · ${view.mode}` +
      (view.output !== null ? ` · output ${view.output}` : "") +
      (view.error !== null ? ` · ${view.error}` : "");
    this.setControls(view.controls);

    const stackNode = el<HTMLUListElement>("stack-panel");
    stackNode.innerHTML = view.stack
      .map(
        (row) =>
          `<li class="${row.live ? "live" : "frozen"}" data-scope="${row.scopeKey}">` +
          `${escapeHtml(row.label)}</li>`,
      )
      .join("");
    stackNode.querySelectorAll("li").forEach((item) => {
      item.addEventListener("click", () => {
        void this.inspect(item.dataset.scope ?? "global");
      });
    });
    el<HTMLButtonElement>("btn-global-scope").onclick = () => {
      void this.inspect("global");
    };

    el<HTMLSpanElement>("heap-scope").textContent = view.heapScope;
    el<HTMLTableSectionElement>("heap-panel").innerHTML = view.heapRows.length
      ? view.heapRows
          .map(
            (row) =>
              `<tr><td>${escapeHtml(row.name)}</td><td>${escapeHtml(row.value)}</td></tr>`,
          )
          .join("")
      : '<tr><td colspan="2" class="empty">(no variables)</td></tr>';

    el<HTMLDivElement>("code-panel").innerHTML = view.code
      .map(
        (fn) =>
          `<div class="fn"><div class="fn-header">${escapeHtml(fn.header)}</div>` +
          fn.lines
            .map(
              (line) =>
                `<div class="code-line${line.highlighted ? " current" : ""}` +
                `${line.breakpoint ? " bp" : ""}">` +
                `<span class="label">${line.label}</span>` +
                `<code>${escapeHtml(line.text) || "&nbsp;"}</code></div>`,
            )
            .join("") +
          `</div>`,
      )
      .join("");

    el<HTMLPreElement>("trace-panel").textContent = view.traceTail.join("\n");
  }
}

function describe(error: unknown): string {
  if (error instanceof ServiceError) {
    return `service error ${error.status}: ${error.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}

new App();
