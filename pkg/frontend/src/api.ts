// Typed client for the prediction service. The fetch implementation is
// injectable so tests can run against canned responses.

export interface AtomInfo {
  element: string;
  charge: number;
  explicit_h: number;
  aromatic: boolean;
  in_ring: boolean;
}

export interface BondInfo {
  a: number;
  b: number;
  order: number;
  aromatic: boolean;
  in_ring: boolean;
}

export interface ParsedMolecule {
  smiles: string;
  atoms: AtomInfo[];
  bonds: BondInfo[];
}

export interface PredictionRow {
  disease_id: string;
  disease_name: string;
  score: number;
}

export interface PredictResponse {
  results: PredictionRow[];
  count: number;
  unk_tokens: number;
}

export interface DiseaseEntry {
  id: string;
  name: string;
}

export interface ApiError {
  type: string;
  message: string;
  offset?: number;
}

export class RequestFailed extends Error {
  readonly detail: ApiError;
  readonly status: number;

  constructor(status: number, detail: ApiError) {
    super(detail.message);
    this.status = status;
    this.detail = detail;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchImpl: FetchLike;
  private readonly base: string;

  constructor(fetchImpl?: FetchLike, base = "") {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    this.base = base;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      const detail: ApiError = payload?.error ?? {
        type: "HttpError",
        message: `request failed with status ${response.status}`,
      };
      throw new RequestFailed(response.status, detail);
    }
    return payload as T;
  }

  async parse(smiles: string): Promise<ParsedMolecule> {
    return this.post<ParsedMolecule>("/api/parse", { smiles });
  }

  async predict(smiles: string, prior: string[]): Promise<PredictResponse> {
    const body: Record<string, unknown> = { smiles };
    if (prior.length > 0) body.prior = prior;
    return this.post<PredictResponse>("/api/predict", body);
  }

  async diseases(): Promise<DiseaseEntry[]> {
    const response = await this.fetchImpl(this.base + "/api/diseases");
    const payload = await response.json();
    return (payload.diseases ?? []) as DiseaseEntry[];
  }
}
