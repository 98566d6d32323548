import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { MockService } from "./mockService.js";

const BASE = "http://service.test";

describe("ApiClient", () => {
  it("fetches the model card", async () => {
    const mock = new MockService({ conditional: true });
    const api = new ApiClient(BASE, mock.fetch);
    const card = await api.model();
    expect(card.latent_dim).toBe(256);
    expect(card.conditional).toBe(true);
    expect(card.classes).toHaveLength(6);
  });

  it("samples deterministically by seed", async () => {
    const mock = new MockService();
    const api = new ApiClient(BASE, mock.fetch);
    const a = await api.sample({ seed: 7 });
    const b = await api.sample({ seed: 7 });
    expect(a.wav_b64).toBe(b.wav_b64);
    expect(a.latent_id).toBe("s7");
  });

  it("draws a fresh seed when none is given", async () => {
    const mock = new MockService();
    const api = new ApiClient(BASE, mock.fetch);
    const a = await api.sample();
    const b = await api.sample();
    expect(a.seed).not.toBe(b.seed);
  });

  it("surfaces HTTP errors as ApiError", async () => {
    const mock = new MockService({ conditional: true });
    const api = new ApiClient(BASE, mock.fetch);
    await expect(api.sample({ seed: 1 })).rejects.toBeInstanceOf(ApiError);
    await expect(api.sample({ seed: 1 })).rejects.toMatchObject({ status: 400 });
  });

  it("reports health", async () => {
    const mock = new MockService();
    const api = new ApiClient(BASE, mock.fetch);
    expect(await api.healthy()).toBe(true);
    const dead = new ApiClient(BASE, async () => {
      throw new Error("connection refused");
    });
    expect(await dead.healthy()).toBe(false);
  });
});
