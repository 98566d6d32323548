// Typed client for the laughter-synthesis service. Every artifact byte the
// UI shows originates from these calls; nothing is synthesized client-side.

export interface ClassInfo {
  index: number;
  gender: string;
  age_group: string;
}

export interface ModelCard {
  latent_dim: number;
  conditional: boolean;
  classes: ClassInfo[];
  checkpoint_tag: string;
  sample_rate: number;
  clip_seconds: number;
}

export interface SamplePayload {
  latent_id: string | null;
  seed: number;
  condition: number | null;
  wav_b64: string;
  mel_png_b64: string;
  mel_shape: number[];
  step?: number;
}

export interface InterpolateResponse {
  steps: SamplePayload[];
  mode: string;
}

export interface SampleRequest {
  seed?: number;
  condition?: number;
}

export interface InterpolateRequest {
  a: number | string;
  b: number | string;
  steps?: number;
  mode?: string;
}

export interface TransferRequest {
  latent_id: string;
  new_condition: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  async healthy(): Promise<boolean> {
    try {
      const res = await this.fetchFn(this.baseUrl + "/healthz");
      return res.ok;
    } catch {
      return false;
    }
  }

  model(): Promise<ModelCard> {
    return this.get<ModelCard>("/v1/model");
  }

  sample(req: SampleRequest = {}): Promise<SamplePayload> {
    return this.post<SamplePayload>("/v1/sample", req);
  }

  interpolate(req: InterpolateRequest): Promise<InterpolateResponse> {
    return this.post<InterpolateResponse>("/v1/interpolate", req);
  }

  transfer(req: TransferRequest): Promise<SamplePayload> {
    return this.post<SamplePayload>("/v1/transfer", req);
  }
}
