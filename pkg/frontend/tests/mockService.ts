// Deterministic in-memory stand-in for the synthesis service. It implements
// the same wire contract (latent ids encode seed and condition; identical
// requests yield identical bytes) and records every artifact it ever
// returned, so tests can prove the UI never fabricates audio locally.

import type { FetchLike } from "../src/api.js";

export interface MockOptions {
  conditional?: boolean;
  failInterpolations?: number;
}

const CLASSES = [
  { index: 0, gender: "male", age_group: "adult" },
  { index: 1, gender: "male", age_group: "child" },
  { index: 2, gender: "male", age_group: "teen" },
  { index: 3, gender: "female", age_group: "adult" },
  { index: 4, gender: "female", age_group: "child" },
  { index: 5, gender: "female", age_group: "teen" },
];

function renderWav(tag: string, seed: number, condition: number | null): string {
  // stable fake bytes: a function of (checkpoint, seed, condition) only
  return Buffer.from(`WAV:${tag}:${seed}:${condition ?? "none"}`).toString("base64");
}

function renderPng(tag: string, seed: number, condition: number | null): string {
  return Buffer.from(`PNG:${tag}:${seed}:${condition ?? "none"}`).toString("base64");
}

function encodeLatentId(seed: number, condition: number | null): string {
  return condition === null ? `s${seed}` : `s${seed}c${condition}`;
}

function decodeLatentId(token: string): [number, number | null] | null {
  const m = /^s(\d+)(?:c(\d))?$/.exec(token);
  if (!m) return null;
  return [Number(m[1]), m[2] === undefined ? null : Number(m[2])];
}

export class MockService {
  tag = "mock00000001";
  issuedWavs = new Set<string>();
  calls: { path: string; body: unknown }[] = [];
  private freshSeed = 1000;
  private failInterpolations: number;
  conditional: boolean;

  constructor(opts: MockOptions = {}) {
    this.conditional = opts.conditional ?? false;
    this.failInterpolations = opts.failInterpolations ?? 0;
  }

  private payload(seed: number, condition: number | null, step?: number) {
    const wav = renderWav(this.tag, seed, condition);
    this.issuedWavs.add(wav);
    const body: Record<string, unknown> = {
      latent_id: encodeLatentId(seed, condition),
      seed,
      condition,
      wav_b64: wav,
      mel_png_b64: renderPng(this.tag, seed, condition),
      mel_shape: [64, 128],
    };
    if (step !== undefined) body.step = step;
    return body;
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private resolve(ref: number | string): [number, number | null] | null {
    if (typeof ref === "number") return this.conditional ? null : [ref, null];
    return decodeLatentId(ref);
  }

  fetch: FetchLike = async (input, init) => {
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    this.calls.push({ path, body });

    if (path === "/healthz") return new Response("ok", { status: 200 });

    if (path === "/v1/model") {
      return this.json(200, {
        latent_dim: 256,
        conditional: this.conditional,
        classes: this.conditional ? CLASSES : [],
        checkpoint_tag: this.tag,
        sample_rate: 22050,
        clip_seconds: 3.0,
      });
    }

    if (path === "/v1/sample") {
      const condition = body.condition ?? null;
      if (this.conditional && condition === null) {
        return this.json(400, { detail: "condition required" });
      }
      if (!this.conditional && condition !== null) {
        return this.json(400, { detail: "no conditions on this model" });
      }
      const seed = body.seed ?? this.freshSeed++;
      return this.json(200, this.payload(seed, condition));
    }

    if (path === "/v1/interpolate") {
      if (this.failInterpolations > 0) {
        this.failInterpolations--;
        return this.json(503, { detail: "render budget exceeded; retry" });
      }
      const steps: number = body.steps ?? 10;
      if (steps < 2 || steps > 32) return this.json(400, { detail: "steps" });
      const a = this.resolve(body.a);
      const b = this.resolve(body.b);
      if (!a || !b) return this.json(404, { detail: "unknown latent" });
      const payloads = [];
      for (let i = 0; i < steps; i++) {
        const endpoint = i === 0 ? a : i === steps - 1 ? b : null;
        if (endpoint) {
          payloads.push({ ...this.payload(endpoint[0], endpoint[1], i) });
        } else {
          // midpoints: unique deterministic bytes per (a, b, mode, i)
          const seed = a[0] * 1_000_000 + b[0] * 1_000 + i;
          const p = this.payload(seed, a[1], i);
          p.latent_id = null;
          payloads.push(p);
        }
      }
      return this.json(200, { steps: payloads, mode: body.mode ?? "lerp" });
    }

    if (path === "/v1/transfer") {
      if (!this.conditional) return this.json(400, { detail: "unconditional" });
      const decoded = decodeLatentId(body.latent_id);
      if (!decoded) return this.json(404, { detail: "unknown latent" });
      if (decoded[1] === null) return this.json(400, { detail: "no condition" });
      const target: number = body.new_condition;
      if (target < 0 || target > 5) return this.json(400, { detail: "bad condition" });
      return this.json(200, this.payload(decoded[0], target));
    }

    return this.json(404, { detail: `no route ${path}` });
  };
}
