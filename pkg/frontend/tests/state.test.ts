import { describe, expect, it } from "vitest";

import {
  MemoryStorage,
  PinStore,
  decodeViewState,
  encodeViewState,
  pinFromPayload,
} from "../src/state.js";
import type { SamplePayload } from "../src/api.js";

function payload(seed: number, condition: number | null = null): SamplePayload {
  return {
    latent_id: condition === null ? `s${seed}` : `s${seed}c${condition}`,
    seed,
    condition,
    wav_b64: `wav${seed}`,
    mel_png_b64: `png${seed}`,
    mel_shape: [64, 128],
  };
}

describe("PinStore", () => {
  it("persists pins across instances sharing one storage", () => {
    const storage = new MemoryStorage();
    const store = new PinStore(storage);
    store.add(pinFromPayload(payload(1), "one"));
    store.add(pinFromPayload(payload(2, 3), "two"));

    const reloaded = new PinStore(storage);
    expect(reloaded.list().map((p) => p.latentId)).toEqual(["s1", "s2c3"]);
    expect(reloaded.get("s2c3")?.condition).toBe(3);
  });

  it("deduplicates by latent id and supports removal", () => {
    const store = new PinStore(new MemoryStorage());
    store.add(pinFromPayload(payload(1), "a"));
    store.add(pinFromPayload(payload(1), "duplicate"));
    expect(store.list()).toHaveLength(1);
    store.remove("s1");
    expect(store.list()).toHaveLength(0);
  });

  it("refuses to pin payloads without a latent id", () => {
    const stepPayload = { ...payload(5), latent_id: null };
    expect(() => pinFromPayload(stepPayload, "x")).toThrow();
  });
});

describe("view state fragment", () => {
  it("round-trips through the URL fragment", () => {
    const state = {
      pinIds: ["s1", "s2c3"],
      a: "s1",
      b: "s2c3",
      slider: 4,
      mode: "slerp" as const,
    };
    const decoded = decodeViewState("#" + encodeViewState(state));
    expect(decoded).toEqual(state);
  });

  it("decodes an empty fragment to defaults", () => {
    const decoded = decodeViewState("");
    expect(decoded.pinIds).toEqual([]);
    expect(decoded.a).toBeNull();
    expect(decoded.mode).toBe("lerp");
    expect(decoded.slider).toBe(0);
  });
});
