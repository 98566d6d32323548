// Pin storage and shareable-URL serialization. latent_id is self-contained
// (it encodes seed and condition), so a pin survives service restarts and
// cache evictions: re-sampling by id always reproduces the same artifact.

import type { SamplePayload } from "./api.js";

export interface PinnedLatent {
  latentId: string;
  label: string;
  condition: number | null;
  seed: number;
  wavB64: string;
  melPngB64: string;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class MemoryStorage implements StorageLike {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
}

const PINS_KEY = "laughgan.pins";

export function pinFromPayload(payload: SamplePayload, label: string): PinnedLatent {
  if (!payload.latent_id) {
    throw new Error("only payloads with a latent_id can be pinned");
  }
  return {
    latentId: payload.latent_id,
    label,
    condition: payload.condition,
    seed: payload.seed,
    wavB64: payload.wav_b64,
    melPngB64: payload.mel_png_b64,
  };
}

export class PinStore {
  private pins: PinnedLatent[] = [];

  constructor(private storage: StorageLike) {
    const raw = storage.getItem(PINS_KEY);
    if (raw) {
      try {
        this.pins = JSON.parse(raw) as PinnedLatent[];
      } catch {
        this.pins = [];
      }
    }
  }

  list(): PinnedLatent[] {
    return [...this.pins];
  }

  add(pin: PinnedLatent): void {
    if (!this.pins.some((p) => p.latentId === pin.latentId)) {
      this.pins.push(pin);
      this.persist();
    }
  }

  remove(latentId: string): void {
    this.pins = this.pins.filter((p) => p.latentId !== latentId);
    this.persist();
  }

  get(latentId: string): PinnedLatent | undefined {
    return this.pins.find((p) => p.latentId === latentId);
  }

  private persist(): void {
    this.storage.setItem(PINS_KEY, JSON.stringify(this.pins));
  }
}

// --- shareable view state in the URL fragment ---

export interface ViewState {
  pinIds: string[];
  a: string | null;
  b: string | null;
  slider: number;
  mode: "lerp" | "slerp";
}

export const EMPTY_VIEW: ViewState = {
  pinIds: [],
  a: null,
  b: null,
  slider: 0,
  mode: "lerp",
};

export function encodeViewState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.pinIds.length) params.set("pins", state.pinIds.join(","));
  if (state.a) params.set("a", state.a);
  if (state.b) params.set("b", state.b);
  if (state.slider) params.set("t", String(state.slider));
  if (state.mode !== "lerp") params.set("mode", state.mode);
  return params.toString();
}

export function decodeViewState(fragment: string): ViewState {
  const params = new URLSearchParams(fragment.replace(/^#/, ""));
  const pins = params.get("pins");
  const slider = Number(params.get("t") ?? "0");
  const mode = params.get("mode") === "slerp" ? "slerp" : "lerp";
  return {
    pinIds: pins ? pins.split(",").filter(Boolean) : [],
    a: params.get("a"),
    b: params.get("b"),
    slider: Number.isFinite(slider) ? slider : 0,
    mode,
  };
}
