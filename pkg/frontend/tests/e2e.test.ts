// End-to-end explorer flow against the deterministic mock service:
// sample, pin two, interpolate ten steps, scrub the slider, and transfer.
// The mock records every artifact it issues, which lets the suite prove that
// every byte shown by the UI was fetched from the service.

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  ExploreController,
  InterpolationController,
  TransferController,
} from "../src/controllers.js";
import { digest } from "../src/digest.js";
import { MemoryStorage, PinStore } from "../src/state.js";
import { MockService } from "./mockService.js";

const BASE = "http://service.test";

describe("explorer end-to-end (conditional model)", () => {
  let mock: MockService;
  let api: ApiClient;
  let pins: PinStore;
  let explore: ExploreController;

  beforeEach(() => {
    mock = new MockService({ conditional: true });
    api = new ApiClient(BASE, mock.fetch);
    pins = new PinStore(new MemoryStorage());
    explore = new ExploreController(api, pins);
  });

  it("locked seed resamples byte-identical audio", async () => {
    explore.lockedSeed = 42;
    const first = await explore.sample(0);
    const second = await explore.sample(0);
    expect(digest(first.wav_b64)).toBe(digest(second.wav_b64));
    expect(first.wav_b64).toBe(second.wav_b64);
  });

  it("sample -> pin two -> interpolate: slider endpoints equal the pins", async () => {
    explore.lockedSeed = 1;
    await explore.sample(0);
    const pinA = explore.pin("laugh A");
    explore.lockedSeed = 2;
    await explore.sample(5);
    const pinB = explore.pin("laugh B");

    const interp = new InterpolationController(api);
    await interp.load(pinA, pinB);
    expect(interp.steps).toHaveLength(10);

    const leftmost = interp.select(0);
    const rightmost = interp.select(9);
    expect(digest(leftmost.wav_b64)).toBe(digest(pinA.wavB64));
    expect(digest(rightmost.wav_b64)).toBe(digest(pinB.wavB64));

    // one prefetching call serves the whole scrub
    const interpolateCalls = mock.calls.filter((c) => c.path === "/v1/interpolate");
    expect(interpolateCalls).toHaveLength(1);
    for (let i = 0; i < 10; i++) interp.select(i);
    expect(mock.calls.filter((c) => c.path === "/v1/interpolate")).toHaveLength(1);
  });

  it("mode toggle refetches", async () => {
    explore.lockedSeed = 1;
    await explore.sample(0);
    const pinA = explore.pin("a");
    explore.lockedSeed = 2;
    await explore.sample(1);
    const pinB = explore.pin("b");

    const interp = new InterpolationController(api);
    await interp.load(pinA, pinB);
    await interp.setMode("slerp", pinA, pinB);
    const calls = mock.calls.filter((c) => c.path === "/v1/interpolate");
    expect(calls).toHaveLength(2);
    expect((calls[1].body as { mode: string }).mode).toBe("slerp");
  });

  it("failed interpolation exposes a retryable error", async () => {
    const flaky = new MockService({ conditional: true, failInterpolations: 1 });
    const flakyApi = new ApiClient(BASE, flaky.fetch);
    const ex = new ExploreController(flakyApi, pins);
    ex.lockedSeed = 1;
    await ex.sample(0);
    const pinA = ex.pin("a");
    ex.lockedSeed = 2;
    await ex.sample(1);
    const pinB = ex.pin("b");

    const interp = new InterpolationController(flakyApi);
    await expect(interp.load(pinA, pinB)).rejects.toThrow();
    expect(interp.error).not.toBeNull();
    await interp.load(pinA, pinB);   // the retry succeeds
    expect(interp.steps).toHaveLength(10);
  });

  it("transfer to the source condition is an A/B no-op", async () => {
    explore.lockedSeed = 9;
    await explore.sample(3);
    const pin = explore.pin("same-condition");

    const card = await api.model();
    const transfer = new TransferController(api, card);
    const pair = await transfer.load(pin, 3);
    expect(digest(pair.original.wav_b64)).toBe(digest(pair.transferred.wav_b64));

    const moved = await transfer.load(pin, 0);
    expect(digest(moved.original.wav_b64)).not.toBe(digest(moved.transferred.wav_b64));
  });

  it("every artifact byte in UI state came from the service", async () => {
    explore.lockedSeed = 1;
    await explore.sample(0);
    const pinA = explore.pin("a");
    explore.lockedSeed = 2;
    await explore.sample(5);
    const pinB = explore.pin("b");
    const interp = new InterpolationController(api);
    await interp.load(pinA, pinB);
    const card = await api.model();
    const transfer = new TransferController(api, card);
    const pair = await transfer.load(pinA, 4);

    const held = [
      ...pins.list().map((p) => p.wavB64),
      ...interp.steps.map((s) => s.wav_b64),
      pair.original.wav_b64,
      pair.transferred.wav_b64,
    ];
    for (const wav of held) {
      expect(mock.issuedWavs.has(wav)).toBe(true);
    }
  });
});

describe("explorer on an unconditional model", () => {
  it("hides conditions and transfer is disabled", async () => {
    const mock = new MockService({ conditional: false });
    const api = new ApiClient(BASE, mock.fetch);
    const card = await api.model();
    expect(card.classes).toHaveLength(0);

    const transfer = new TransferController(api, card);
    expect(transfer.enabled).toBe(false);
    const pins = new PinStore(new MemoryStorage());
    const explore = new ExploreController(api, pins);
    explore.lockedSeed = 5;
    await explore.sample();
    const pin = explore.pin("p");
    await expect(transfer.load(pin, 1)).rejects.toThrow();
  });
});
