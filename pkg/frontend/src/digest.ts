// FNV-1a over the base64 payload text: cheap, synchronous, and stable, which
// is all the UI needs to compare whether two renders carry identical bytes.

export function digest(data: string): string {
  let hash = 0x811c9dc5;
  for (let i = 0; i < data.length; i++) {
    hash ^= data.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash.toString(16).padStart(8, "0");
}
