/**
 * Thin typed client for the extraction service. The UI talks to the
 * documented HTTP endpoints and nothing else; no extraction logic leaks in.
 */

import type {
  AdjustmentRequest,
  ExportFilter,
  FilingsResponse,
  SegmentRecord,
  SegmentsResponse,
} from "./types.js";

/** Raised on 409: the record was adjusted since the client last read it. */
export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    return body.error ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async listFilings(): Promise<FilingsResponse> {
    const response = await this.fetchFn(this.url("/filings"));
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as FilingsResponse;
  }

  async getSegments(filingId: string): Promise<SegmentsResponse> {
    const response = await this.fetchFn(
      this.url(`/filings/${encodeURIComponent(filingId)}/segments`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as SegmentsResponse;
  }

  async getDocument(filingId: string): Promise<string> {
    const response = await this.fetchFn(
      this.url(`/filings/${encodeURIComponent(filingId)}/document`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.text();
  }

  async postAdjustment(
    recordId: string,
    request: AdjustmentRequest,
  ): Promise<SegmentRecord> {
    const response = await this.fetchFn(
      this.url(`/records/${encodeURIComponent(recordId)}/adjustments`),
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
      },
    );
    if (response.status === 409) {
      throw new ConflictError(await errorMessage(response));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    const body = (await response.json()) as { record: SegmentRecord };
    return body.record;
  }

  exportUrl(filter: ExportFilter): string {
    const params = new URLSearchParams();
    if (filter.company) params.set("company", filter.company);
    if (filter.period) params.set("period", filter.period);
    if (filter.segment) params.set("segment", filter.segment);
    const query = params.toString();
    return this.url(`/export${query ? `?${query}` : ""}`);
  }

  async exportCsv(filter: ExportFilter): Promise<string> {
    const response = await this.fetchFn(this.exportUrl(filter));
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return response.text();
  }
}
