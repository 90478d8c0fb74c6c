// Pure view-model construction: the UI holds no execution state beyond
// the latest service responses, so rebuilding from fresh fetches always
// reproduces the identical view.

import { formatValue } from "./format.js";
import type {
  CodeResponse,
  SessionState,
  StackFrame,
  TraceResponse,
} from "./types.js";

export interface StackRow {
  functionName: string;
  index: number;
  pointer: string;
  live: boolean;
  scopeKey: string;
  label: string;
}

export interface HeapRow {
  name: string;
  value: string;
}

export interface CodeLineView {
  label: string;
  text: string;
  highlighted: boolean;
  breakpoint: boolean;
}

export interface CodeFunctionView {
  name: string;
  header: string;
  lines: CodeLineView[];
}

export interface ControlsState {
  step: boolean;
  continue: boolean;
  reset: boolean;
}

export interface UiSessionView {
  sessionId: string;
  mode: string;
  stepCounter: number;
  stack: StackRow[];
  heapScope: string;
  heapRows: HeapRow[];
  code: CodeFunctionView[];
  highlight: { functionName: string; pointer: string } | null;
  controls: ControlsState;
  traceTail: string[];
  output: string | null;
  error: string | null;
}

export function stackRows(frames: StackFrame[]): StackRow[] {
  return frames.map((frame) => ({
    functionName: frame.function,
    index: frame.index,
    pointer: frame.pointer,
    live: frame.live,
    scopeKey: `${frame.function}:${frame.index}`,
    label: `${frame.function} #${frame.index} @ ${frame.pointer} ${frame.live ? "(live)" : "(frozen)"}`,
  }));
}

export function heapRows(variables: Record<string, unknown>): HeapRow[] {
  return Object.keys(variables)
    .sort()
    .map((name) => ({ name, value: formatValue(variables[name]) }));
}

/** The highlighted line is the top frame's pointer. */
export function highlightFor(
  frames: StackFrame[],
): { functionName: string; pointer: string } | null {
  if (frames.length === 0) {
    return null;
  }
  const top = frames[frames.length - 1];
  if (top.pointer === "DONE") {
    return null;
  }
  return { functionName: top.function, pointer: top.pointer };
}

export function controlsFor(state: SessionState): ControlsState {
  const paused = state.mode === "paused";
  return { step: paused, continue: paused, reset: true };
}

export function buildSessionView(parts: {
  state: SessionState;
  stack: StackFrame[];
  heapScope: string;
  heapVariables: Record<string, unknown>;
  code: CodeResponse | null;
  trace: TraceResponse | null;
}): UiSessionView {
  const { state, stack, heapScope, heapVariables, code, trace } = parts;
  const highlight = highlightFor(stack);
  const breakpoints = new Set(state.breakpoints.map(([fn, line]) => `${fn}@${line}`));
  const codeView: CodeFunctionView[] = (code?.functions ?? []).map((fn) => ({
    name: fn.name,
    header: fn.header,
    lines: fn.lines.map((line) => ({
      label: line.label,
      text: line.text,
      highlighted:
        highlight !== null &&
        highlight.functionName === fn.name &&
        highlight.pointer === line.label,
      breakpoint: breakpoints.has(`${fn.name}@${line.label}`),
    })),
  }));
  return {
    sessionId: state.id,
    mode: state.mode,
    stepCounter: state.step_counter,
    stack: stackRows(stack),
    heapScope,
    heapRows: heapRows(heapVariables),
    code: codeView,
    highlight,
    controls: controlsFor(state),
    traceTail: (trace?.events ?? []).map((event) => formatValue(event)),
    output: state.output !== undefined ? formatValue(state.output) : null,
    error: state.error ?? null,
  };
}
