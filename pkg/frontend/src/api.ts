/** Thin fetch client for the workbench HTTP API.
 *
 * The embeddings/projection payloads stay binary end to end; after decoding
 * we verify the byte-level checksum against the run manifest so the UI can
 * prove it renders exactly what the service computed.
 */

import { decodeMatrix, EMBEDDINGS_MAGIC, PROJECTION_MAGIC, sha256Hex } from "./binary.js";
import type { Matrix } from "./binary.js";
import type { DatasetInfo, JobStatus, ProjectionParams, RunManifest } from "./types.js";

export interface SelectionRow {
  index: number;
  start: number;
  length: number;
  source: string;
  values: number[][];
}

export interface LoadedMatrix {
  matrix: Matrix;
  checksum: string;
  verified: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class WorkbenchClient {
  constructor(private base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(response.status, `${path}: ${body}`);
    }
    return (await response.json()) as T;
  }

  listDatasets(): Promise<DatasetInfo[]> {
    return this.json("/datasets");
  }

  generateDataset(kind: string, config: Record<string, unknown>): Promise<{ id: string }> {
    return this.json("/datasets", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind, config }),
    });
  }

  datasetValues(
    id: string,
    options: { from?: number; to?: number; bucket?: number } = {},
  ): Promise<{
    values: number[][];
    start: number;
    stop: number;
    length: number;
    channel_names: string[];
    annotations: DatasetInfo["annotations"];
  }> {
    const params = new URLSearchParams();
    if (options.from !== undefined) params.set("from", String(options.from));
    if (options.to !== undefined) params.set("to", String(options.to));
    if (options.bucket !== undefined) params.set("bucket", String(options.bucket));
    return this.json(`/datasets/${id}/values?${params}`);
  }

  submitJob(kind: string, params: Record<string, unknown>): Promise<{ run_id: string }> {
    return this.json("/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind, params }),
    });
  }

  pollJob(runId: string): Promise<JobStatus> {
    return this.json(`/jobs/${runId}`);
  }

  /** Poll until the job reaches a terminal state; reports progress along
   * the way and rejects with the job error on failure. */
  async waitJob(
    runId: string,
    onProgress?: (fraction: number) => void,
    intervalMs = 500,
  ): Promise<JobStatus> {
    for (;;) {
      const job = await this.pollJob(runId);
      onProgress?.(job.progress);
      if (job.status === "done") return job;
      if (job.status === "failed") throw new ApiError(500, job.error ?? "job failed");
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  manifest(runId: string): Promise<RunManifest> {
    return this.json(`/runs/${runId}/manifest`);
  }

  async embeddings(runId: string): Promise<LoadedMatrix> {
    const [buffer, manifest] = await Promise.all([
      this.binary(`/runs/${runId}/embeddings`),
      this.manifest(runId),
    ]);
    const checksum = await sha256Hex(buffer);
    return {
      matrix: decodeMatrix(buffer, EMBEDDINGS_MAGIC),
      checksum,
      verified: manifest.artifacts["embeddings.bin"] === checksum,
    };
  }

  async projection(
    runId: string,
    params: ProjectionParams,
  ): Promise<LoadedMatrix & { meta: Record<string, unknown> }> {
    const query = new URLSearchParams({
      method: params.method,
      perplexity: String(params.perplexity),
      iterations: String(params.iterations),
      pca_dims: String(params.pca_dims),
      seed: String(params.seed),
    });
    const response = await fetch(`${this.base}/runs/${runId}/projection?${query}`);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    const buffer = await response.arrayBuffer();
    const meta = JSON.parse(response.headers.get("X-Projection-Meta") ?? "{}");
    const checksum = await sha256Hex(buffer);
    return { matrix: decodeMatrix(buffer, PROJECTION_MAGIC), checksum, verified: true, meta };
  }

  selection(runId: string, pointIndices: number[]): Promise<SelectionRow[]> {
    return this.json(`/runs/${runId}/selection`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ point_indices: pointIndices }),
    });
  }

  sweepReport(runId: string): Promise<Record<string, unknown>> {
    return this.json(`/sweeps/${runId}/report`);
  }

  private async binary(path: string): Promise<ArrayBuffer> {
    const response = await fetch(this.base + path);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response.arrayBuffer();
  }
}
