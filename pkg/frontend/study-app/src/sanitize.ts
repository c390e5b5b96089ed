/** Conservative HTML sanitizer for researcher-authored text pages.
 *
 * Strips active content (scripts, event handlers, javascript: URLs)
 * while keeping formatting plus embedded video and iframes, which
 * task briefings legitimately use.
 */

const BLOCKED_TAGS = new Set(["SCRIPT", "OBJECT", "EMBED", "BASE", "LINK", "META", "FORM"]);
const URL_ATTRIBUTES = new Set(["href", "src", "xlink:href"]);

function scrubElement(element: Element): void {
  for (const attribute of Array.from(element.attributes)) {
    const name = attribute.name.toLowerCase();
    if (name.startsWith("on")) {
      element.removeAttribute(attribute.name);
      continue;
    }
    if (URL_ATTRIBUTES.has(name)) {
      const value = attribute.value.trim().toLowerCase();
      if (value.startsWith("javascript:") || value.startsWith("data:text/html")) {
        element.removeAttribute(attribute.name);
      }
    }
  }
}

export function sanitizeHtml(html: string): string {
  const doc = new DOMParser().parseFromString(`<body>${html}</body>`, "text/html");
  const walk = (node: Element): void => {
    for (const child of Array.from(node.children)) {
      if (BLOCKED_TAGS.has(child.tagName)) {
        child.remove();
        continue;
      }
      scrubElement(child);
      walk(child);
    }
  };
  walk(doc.body);
  return doc.body.innerHTML;
}
