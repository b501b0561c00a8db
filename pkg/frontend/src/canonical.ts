/** Canonical JSON text: recursively sorted object keys, no whitespace.
 * Used to compare persisted records byte-for-byte across sessions. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const record = value as Record<string, unknown>;
  const body = Object.keys(record)
    .sort()
    .map((key) => JSON.stringify(key) + ":" + canonicalJson(record[key]))
    .join(",");
  return "{" + body + "}";
}
