import { describe, expect, it } from "vitest";

import type { CodeResponse, SessionState, StackFrame } from "../src/types.js";
import { buildSessionView, controlsFor, highlightFor, stackRows } from "../src/view.js";

function state(overrides: Partial<SessionState> = {}): SessionState {
  return {
    id: "s1",
    step_counter: 5,
    mode: "paused",
    status: "running",
    breakpoints: [],
    ...overrides,
  };
}

const FRAMES: StackFrame[] = [
  { function: "canTraverseAllPairs", index: 1, pointer: "L18", live: false },
  { function: "update", index: 1, pointer: "L3", live: false },
  { function: "find", index: 1, pointer: "L2", live: true },
];

const CODE: CodeResponse = {
  ...state(),
  entry: "canTraverseAllPairs",
  functions: [
    {
      name: "find",
      params: ["x"],
      header: "def find(x):",
      lines: [
        { label: "L1", text: "    global parent", indent: 4 },
        { label: "L2", text: "    while parent[x] != x:", indent: 4 },
        { label: "L3", text: "        x = parent[x]", indent: 8 },
      ],
    },
  ],
};

describe("stackRows", () => {
  it("keeps service order and marks frozen frames", () => {
    const rows = stackRows(FRAMES);
    expect(rows.map((r) => r.functionName)).toEqual([
      "canTraverseAllPairs",
      "update",
      "find",
    ]);
    expect(rows.map((r) => r.live)).toEqual([false, false, true]);
    expect(rows[2].scopeKey).toBe("find:1");
  });
});

describe("highlightFor", () => {
  it("uses the top frame's pointer", () => {
    expect(highlightFor(FRAMES)).toEqual({ functionName: "find", pointer: "L2" });
  });

  it("is empty for an empty stack", () => {
    expect(highlightFor([])).toBeNull();
  });
});

describe("controlsFor", () => {
  it("enables stepping only while paused", () => {
    expect(controlsFor(state())).toEqual({ step: true, continue: true, reset: true });
    expect(controlsFor(state({ mode: "finished" }))).toEqual({
      step: false,
      continue: false,
      reset: true,
    });
  });
});

describe("buildSessionView", () => {
  it("highlights the top frame's line in the code panel", () => {
    const view = buildSessionView({
      state: state(),
      stack: FRAMES,
      heapScope: "find:1",
      heapVariables: { x: 0, parent: [0, 2, 2] },
      code: CODE,
      trace: null,
    });
    const findLines = view.code[0].lines;
    expect(findLines.map((l) => l.highlighted)).toEqual([false, true, false]);
    expect(view.stack).toHaveLength(3);
    expect(view.heapRows).toEqual([
      { name: "parent", value: "[0,2,2]" },
      { name: "x", value: "0" },
    ]);
  });

  it("marks breakpoint lines", () => {
    const view = buildSessionView({
      state: state({ breakpoints: [["find", "L2"]] }),
      stack: [],
      heapScope: "global",
      heapVariables: {},
      code: CODE,
      trace: null,
    });
    expect(view.code[0].lines[1].breakpoint).toBe(true);
    expect(view.highlight).toBeNull();
  });

  it("shows the output once finished", () => {
    const view = buildSessionView({
      state: state({ mode: "finished", status: "finished", output: true }),
      stack: [],
      heapScope: "global",
      heapVariables: {},
      code: null,
      trace: null,
    });
    expect(view.output).toBe("true");
    expect(view.controls).toEqual({ step: false, continue: false, reset: true });
  });

  it("is a pure function of the responses", () => {
    const parts = {
      state: state(),
      stack: FRAMES,
      heapScope: "global",
      heapVariables: { parent: [0, 2, 2] },
      code: CODE,
      trace: null,
    };
    expect(buildSessionView(parts)).toEqual(buildSessionView(parts));
  });
});
