// Shapes of the debug service's HTTP+JSON protocol responses.

export type SessionMode = "paused" | "running-to-breakpoint" | "finished";

export interface SessionState {
  id: string;
  step_counter: number;
  mode: SessionMode;
  status: "running" | "finished" | "failed";
  breakpoints: [string, string][];
  output?: unknown;
  error?: string;
}

export interface StackFrame {
  function: string;
  index: number;
  pointer: string;
  live: boolean;
}

export interface StackResponse extends SessionState {
  stack: StackFrame[];
}

export interface HeapResponse extends SessionState {
  scope: string;
  variables: Record<string, unknown>;
}

export interface TraceResponse extends SessionState {
  events: Record<string, unknown>[];
}

export interface CodeLine {
  label: string;
  text: string;
  indent: number;
}

export interface CodeFunction {
  name: string;
  params: string[];
  header: string;
  lines: CodeLine[];
}

export interface CodeResponse extends SessionState {
  entry: string;
  functions: CodeFunction[];
}

export interface StepResponse extends SessionState {
  event?: Record<string, unknown>;
}
