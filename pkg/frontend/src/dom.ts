// Small DOM helpers shared by the views.

export function el<T extends HTMLElement = HTMLElement>(selector: string): T {
  const node = document.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node as T;
}

export function make<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function audioSrc(wavB64: string): string {
  return `data:audio/wav;base64,${wavB64}`;
}

export function imageSrc(pngB64: string): string {
  return `data:image/png;base64,${pngB64}`;
}
