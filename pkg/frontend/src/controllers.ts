// View controllers: all interaction logic, no DOM. Views bind these to
// elements; tests drive them headless against a mocked service.

import type {
  ApiClient,
  ModelCard,
  SamplePayload,
} from "./api.js";
import { PinStore, PinnedLatent, pinFromPayload } from "./state.js";

export class ExploreController {
  current: SamplePayload | null = null;
  lockedSeed: number | null = null;

  constructor(private api: ApiClient, private pins: PinStore) {}

  async sample(condition?: number): Promise<SamplePayload> {
    const req: { seed?: number; condition?: number } = {};
    if (this.lockedSeed !== null) req.seed = this.lockedSeed;
    if (condition !== undefined) req.condition = condition;
    this.current = await this.api.sample(req);
    return this.current;
  }

  pin(label: string): PinnedLatent {
    if (!this.current) throw new Error("nothing to pin yet");
    const pin = pinFromPayload(this.current, label);
    this.pins.add(pin);
    return pin;
  }
}

export class InterpolationController {
  steps: SamplePayload[] = [];
  position = 0;
  mode: "lerp" | "slerp" = "lerp";
  nSteps = 10;
  error: string | null = null;

  constructor(private api: ApiClient) {}

  // One prefetching request per (a, b, mode): the slider then scrubs locally
  // for instant audition without further network traffic.
  async load(a: PinnedLatent, b: PinnedLatent): Promise<void> {
    this.error = null;
    try {
      const res = await this.api.interpolate({
        a: a.latentId,
        b: b.latentId,
        steps: this.nSteps,
        mode: this.mode,
      });
      this.steps = res.steps;
      this.position = Math.min(this.position, this.steps.length - 1);
    } catch (err) {
      this.steps = [];
      this.error = err instanceof Error ? err.message : String(err);
      throw err;
    }
  }

  async setMode(mode: "lerp" | "slerp", a: PinnedLatent, b: PinnedLatent): Promise<void> {
    if (mode !== this.mode) {
      this.mode = mode;
      await this.load(a, b);
    }
  }

  select(position: number): SamplePayload {
    if (!this.steps.length) throw new Error("no interpolation loaded");
    this.position = Math.max(0, Math.min(position, this.steps.length - 1));
    return this.steps[this.position];
  }
}

export interface TransferPair {
  original: SamplePayload;
  transferred: SamplePayload;
}

export class TransferController {
  pair: TransferPair | null = null;

  constructor(private api: ApiClient, private model: ModelCard) {}

  get enabled(): boolean {
    return this.model.conditional;
  }

  async load(pin: PinnedLatent, newCondition: number): Promise<TransferPair> {
    if (!this.enabled) throw new Error("model is unconditional");
    // the pin's latent_id is self-contained, so both sides re-derive server-side
    const original = await this.api.sample({
      seed: pin.seed,
      condition: pin.condition ?? undefined,
    });
    const transferred = await this.api.transfer({
      latent_id: pin.latentId,
      new_condition: newCondition,
    });
    this.pair = { original, transferred };
    return this.pair;
  }
}
