/** Typed client for the platform's JSON API.
 *
 * The console is a pure client of the documented endpoints: everything it
 * does can be replayed with curl. Upload errors surface the offending line
 * number when the server reports one.
 */

export interface DatasetSummary {
  dataset_id: string;
  name: string;
  created_at: number;
  items_total: number;
  class_histogram: Record<string, number>;
  gold_items: number;
}

export interface CampaignConfigDoc {
  prompt_template: string;
  options: string[];
  required_engagements: number;
  batch_size: number;
  time_budget: number;
  reward_points: number;
}

export interface CampaignDoc {
  campaign_id: string;
  dataset_id: string;
  status: string;
  config: CampaignConfigDoc;
}

export interface ProgressDoc {
  campaign_id: string;
  items_total: number;
  items_complete: number;
  responses_total: number;
  verdict_histogram: Record<string, number>;
  generated_at: number;
}

export interface BatchTaskDoc {
  assignment_id: string;
  item_id: string;
  media_ref: string;
  prompt: string;
  options: string[];
}

export interface BatchDoc {
  no_tasks: boolean;
  batch_id?: string;
  campaign_id?: string;
  user_id: string;
  time_budget?: number;
  tasks: BatchTaskDoc[];
}

export interface ResponseAck {
  assignment_id: string;
  accepted: boolean;
  code?: string;
  item_id?: string;
  campaign_id?: string;
  item_complete?: boolean;
  campaign_complete?: boolean;
}

export interface ExportRecord {
  item_id: string;
  verdict: string;
  vote_counts: Record<string, number>;
  n_responses: number;
  complete: boolean;
  gold_match?: boolean;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly line?: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
  ) {}

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      ...init,
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
        ...(init.headers ?? {}),
      },
    });
    if (!resp.ok) {
      let message = `HTTP ${resp.status}`;
      let line: number | undefined;
      try {
        const body = await resp.json();
        message = body.error ?? body.detail ?? message;
        line = typeof body.line === "number" ? body.line : undefined;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(message, resp.status, line);
    }
    return resp;
  }

  private async json<T>(path: string, init: RequestInit = {}): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  uploadDataset(name: string, manifest: string): Promise<DatasetSummary> {
    return this.json("/datasets", { method: "POST", body: JSON.stringify({ name, manifest }) });
  }

  datasetSummary(datasetId: string): Promise<DatasetSummary> {
    return this.json(`/datasets/${datasetId}`);
  }

  createCampaign(req: { dataset_id: string } & Partial<CampaignConfigDoc>): Promise<{ campaign_id: string }> {
    return this.json("/campaigns", { method: "POST", body: JSON.stringify(req) });
  }

  listCampaigns(): Promise<CampaignDoc[]> {
    return this.json("/campaigns");
  }

  campaign(campaignId: string): Promise<CampaignDoc> {
    return this.json(`/campaigns/${campaignId}`);
  }

  publish(campaignId: string): Promise<{ status: string }> {
    return this.json(`/campaigns/${campaignId}/publish`, { method: "POST", body: "{}" });
  }

  unpublish(campaignId: string): Promise<{ status: string }> {
    return this.json(`/campaigns/${campaignId}/unpublish`, { method: "POST", body: "{}" });
  }

  progress(campaignId: string): Promise<ProgressDoc> {
    return this.json(`/campaigns/${campaignId}/progress`);
  }

  async exportText(campaignId: string, detail = false): Promise<string> {
    const resp = await this.request(`/campaigns/${campaignId}/export?detail=${detail}`);
    return resp.text();
  }

  async exportRecords(campaignId: string): Promise<ExportRecord[]> {
    const text = await this.exportText(campaignId);
    return text
      .split("\n")
      .filter((l) => l.trim().length > 0)
      .map((l) => JSON.parse(l) as ExportRecord);
  }

  reopenItem(campaignId: string, itemId: string, extra = 1): Promise<{ required_engagements: number }> {
    return this.json(`/campaigns/${campaignId}/items/${itemId}/reopen`, {
      method: "POST",
      body: JSON.stringify({ extra }),
    });
  }

  serve(userId: string, campaignId?: string, seed?: number): Promise<BatchDoc> {
    return this.json("/serve", {
      method: "POST",
      body: JSON.stringify({ user_id: userId, campaign_id: campaignId ?? null, seed: seed ?? null }),
    });
  }

  submitResponses(
    batchId: string,
    responses: { assignment_id: string; choice: string; elapsed: number }[],
  ): Promise<{ acks: ResponseAck[] }> {
    return this.json("/responses", {
      method: "POST",
      body: JSON.stringify({ batch_id: batchId, responses }),
    });
  }
}
