/**
 * Typed client for the try-on service. Every server interaction in the UI
 * goes through these functions and nowhere else; tests inject a recording
 * fetch to verify exactly that.
 */

export interface Garment {
  garment_id: string;
  display_name: string;
  garment_class: string;
  size_bytes: number;
  downloaded: boolean;
}

export interface GenerateOptions {
  steps?: number;
  guidance?: number;
  seed?: number;
}

export interface ApiFailure {
  error: string;
  message: string;
}

export class ApiError extends Error {
  constructor(public readonly code: string, message: string, public readonly status: number) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class TryOnApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async call(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let failure: ApiFailure = { error: "unknown", message: response.statusText };
      try {
        failure = (await response.json()) as ApiFailure;
      } catch {
        // non-JSON error body; keep the fallback
      }
      throw new ApiError(failure.error, failure.message, response.status);
    }
    return response;
  }

  async listGarments(classFilter?: string): Promise<Garment[]> {
    const query = classFilter ? `?class=${encodeURIComponent(classFilter)}` : "";
    const response = await this.call(`/garments${query}`);
    return (await response.json()) as Garment[];
  }

  async download(garmentId: string): Promise<void> {
    await this.call(`/garments/${encodeURIComponent(garmentId)}/download`, { method: "POST" });
  }

  async createSession(png: Uint8Array): Promise<string> {
    const response = await this.call("/sessions", {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: png as unknown as BodyInit,
    });
    const body = (await response.json()) as { session_id: string };
    return body.session_id;
  }

  originalUrl(sessionId: string): string {
    return `${this.base}/sessions/${encodeURIComponent(sessionId)}/original`;
  }

  resultUrl(sessionId: string): string {
    return `${this.base}/sessions/${encodeURIComponent(sessionId)}/result`;
  }

  async fetchPng(url: string): Promise<Uint8Array> {
    const response = await this.call(url.slice(this.base.length));
    return new Uint8Array(await response.arrayBuffer());
  }

  async submitMask(sessionId: string, png: Uint8Array): Promise<void> {
    await this.call(`/sessions/${encodeURIComponent(sessionId)}/mask`, {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: png as unknown as BodyInit,
    });
  }

  async generate(sessionId: string, garmentId: string, options: GenerateOptions = {}): Promise<void> {
    await this.call(`/sessions/${encodeURIComponent(sessionId)}/generate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ garment_id: garmentId, ...options }),
    });
  }

  async erase(sessionId: string, png: Uint8Array): Promise<void> {
    await this.call(`/sessions/${encodeURIComponent(sessionId)}/erase`, {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: png as unknown as BodyInit,
    });
  }
}
