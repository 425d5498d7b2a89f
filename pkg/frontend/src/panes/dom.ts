// Tiny DOM helpers shared by the step panes.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function field(label: string, input: HTMLElement): HTMLElement {
  return el("label", { class: "field" }, [el("span", {}, [label]), input]);
}

export function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = el("button", { type: "button" }, [label]);
  b.addEventListener("click", onClick);
  return b;
}

/** Inline error slot fed by the service's JSON error envelope. */
export function errorSlot(): { node: HTMLElement; show: (err: unknown) => void; clear: () => void } {
  const node = el("div", { class: "inline-error" });
  return {
    node,
    show(err: unknown) {
      node.textContent = err instanceof Error ? err.message : String(err);
    },
    clear() {
      node.textContent = "";
    },
  };
}

export function select(options: string[], value?: string): HTMLSelectElement {
  const node = el("select");
  for (const option of options) {
    node.append(el("option", { value: option }, [option]));
  }
  if (value !== undefined) {
    node.value = value;
  }
  return node;
}

export function multiSelect(options: string[]): HTMLSelectElement {
  const node = select(options);
  node.multiple = true;
  node.size = Math.min(8, Math.max(3, options.length));
  return node;
}

export function selectedValues(node: HTMLSelectElement): string[] {
  return Array.from(node.selectedOptions).map((o) => o.value);
}
