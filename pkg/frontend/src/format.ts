// Value rendering, kept in lockstep with the runtime's canonical form
// (sorted map keys, compact separators, lowercase booleans, shortest
// floats) so what the human sees is what the output matcher compares.

export function formatValue(value: unknown): string {
  if (value === undefined) {
    return "null";
  }
  return stableStringify(value);
}

function stableStringify(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(stableStringify).join(",") + "]";
  }
  const record = value as Record<string, unknown>;
  const body = Object.keys(record)
    .sort()
    .map((key) => JSON.stringify(key) + ":" + stableStringify(record[key]))
    .join(",");
  return "{" + body + "}";
}
