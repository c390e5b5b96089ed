/** Flatten a native browser event into a plain JSON-safe document.
 *
 * Only text-representable data is kept: the backend stores structured
 * text documents, never binary payloads. */

const COMMON_KEYS = ["type", "timeStamp", "isTrusted", "detail"] as const;

const EVENT_KEYS = [
  // mouse / pointer
  "button", "buttons", "clientX", "clientY", "pageX", "pageY", "screenX", "screenY",
  "movementX", "movementY", "offsetX", "offsetY", "pointerType", "pressure",
  // keyboard
  "key", "code", "location", "repeat",
  // modifiers
  "altKey", "ctrlKey", "metaKey", "shiftKey",
  // wheel / scroll
  "deltaX", "deltaY", "deltaZ", "deltaMode",
  // input
  "data", "inputType",
] as const;

function isJsonScalar(value: unknown): value is string | number | boolean {
  return (
    typeof value === "string" ||
    (typeof value === "number" && Number.isFinite(value)) ||
    typeof value === "boolean"
  );
}

export function serializeNativeEvent(event: unknown): Record<string, unknown> {
  const source = event as Record<string, unknown>;
  const out: Record<string, unknown> = {};
  for (const key of [...COMMON_KEYS, ...EVENT_KEYS]) {
    const value = source?.[key];
    if (isJsonScalar(value)) out[key] = value;
  }
  const target = source?.["target"] as Record<string, unknown> | undefined;
  if (target && typeof target === "object") {
    const described: Record<string, unknown> = {};
    for (const key of ["tagName", "id", "name", "className"]) {
      const value = target[key];
      if (isJsonScalar(value) && value !== "") described[key] = value;
    }
    if (Object.keys(described).length > 0) out["target"] = described;
  }
  const touches = source?.["touches"] as { length?: unknown } | undefined;
  if (touches && typeof touches.length === "number") out["touches"] = touches.length;
  return out;
}
