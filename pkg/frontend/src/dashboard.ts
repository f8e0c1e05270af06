/** Progress dashboard: polls the progress endpoint, renders a completion
 * bar and verdict histogram, lists Undecided items with a re-open action,
 * and offers the consolidated export as a download.
 *
 * Displayed counters never decrease between polls: a snapshot that goes
 * backwards (e.g. pointing the console at a different server) is rejected
 * and surfaced as a refresh notice instead of rendered.
 */

import { ApiClient, ProgressDoc } from "./api.js";

export class DashboardModel {
  snapshots: ProgressDoc[] = [];
  responsesSeries: number[] = [];
  staleNotice: string | null = null;

  ingest(doc: ProgressDoc): boolean {
    const last = this.snapshots[this.snapshots.length - 1];
    if (last && doc.campaign_id === last.campaign_id && doc.responses_total < last.responses_total) {
      this.staleNotice = `snapshot went backwards (${doc.responses_total} < ${last.responses_total}); refresh the console`;
      return false;
    }
    this.staleNotice = null;
    this.snapshots.push(doc);
    this.responsesSeries.push(doc.responses_total);
    return true;
  }

  latest(): ProgressDoc | undefined {
    return this.snapshots[this.snapshots.length - 1];
  }

  isMonotone(): boolean {
    return this.responsesSeries.every((v, i) => i === 0 || v >= this.responsesSeries[i - 1]);
  }
}

export class DashboardView {
  readonly root: HTMLElement;
  readonly model = new DashboardModel();
  campaignId: string | null = null;
  pollMs = 2000;

  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly bar: HTMLElement;
  private readonly barLabel: HTMLElement;
  private readonly histogram: HTMLElement;
  private readonly undecidedList: HTMLElement;
  private readonly exportLink: HTMLAnchorElement;
  private readonly notice: HTMLElement;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
  ) {
    this.root = doc.createElement("section");
    this.root.id = "dashboard-view";

    const title = doc.createElement("h2");
    title.textContent = "Campaign progress";
    this.root.appendChild(title);

    const barOuter = doc.createElement("div");
    barOuter.className = "bar-outer";
    this.bar = doc.createElement("div");
    this.bar.id = "completion-bar";
    this.bar.className = "bar-inner";
    barOuter.appendChild(this.bar);
    this.root.appendChild(barOuter);
    this.barLabel = doc.createElement("p");
    this.barLabel.id = "completion-label";
    this.root.appendChild(this.barLabel);

    this.histogram = doc.createElement("ul");
    this.histogram.id = "verdict-histogram";
    this.root.appendChild(this.histogram);

    const undecidedTitle = doc.createElement("h3");
    undecidedTitle.textContent = "Undecided items";
    this.root.appendChild(undecidedTitle);
    this.undecidedList = doc.createElement("ul");
    this.undecidedList.id = "undecided-list";
    this.root.appendChild(this.undecidedList);

    this.exportLink = doc.createElement("a");
    this.exportLink.id = "export-download";
    this.exportLink.textContent = "Download export";
    this.exportLink.addEventListener("click", () => void this.prepareExport());
    this.root.appendChild(this.exportLink);

    this.notice = doc.createElement("p");
    this.notice.id = "dashboard-notice";
    this.root.appendChild(this.notice);
  }

  watch(campaignId: string): void {
    this.campaignId = campaignId;
    this.stop();
    this.timer = setInterval(() => void this.poll(), this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async poll(): Promise<ProgressDoc | null> {
    if (!this.campaignId) return null;
    const doc = await this.api.progress(this.campaignId);
    if (this.model.ingest(doc)) {
      this.render(doc);
      await this.renderUndecided();
      return doc;
    }
    this.notice.textContent = this.model.staleNotice;
    return null;
  }

  private render(doc: ProgressDoc): void {
    const pct = doc.items_total === 0 ? 0 : Math.round((100 * doc.items_complete) / doc.items_total);
    this.bar.style.width = `${pct}%`;
    this.bar.setAttribute("data-pct", String(pct));
    this.barLabel.textContent =
      `${doc.items_complete}/${doc.items_total} items complete, ${doc.responses_total} responses`;
    this.histogram.innerHTML = "";
    for (const verdict of ["Yes", "No", "Undecided"]) {
      const li = this.doc.createElement("li");
      li.textContent = `${verdict}: ${doc.verdict_histogram[verdict] ?? 0}`;
      this.histogram.appendChild(li);
    }
    this.notice.textContent = "";
  }

  private async renderUndecided(): Promise<void> {
    if (!this.campaignId) return;
    const records = await this.api.exportRecords(this.campaignId);
    this.undecidedList.innerHTML = "";
    for (const rec of records.filter((r) => r.complete && r.verdict === "Undecided")) {
      const li = this.doc.createElement("li");
      li.textContent = `${rec.item_id} (${JSON.stringify(rec.vote_counts)}) `;
      const btn = this.doc.createElement("button");
      btn.textContent = "re-open";
      btn.className = "reopen-button";
      btn.setAttribute("data-item", rec.item_id);
      btn.addEventListener("click", () => void this.reopen(rec.item_id, li));
      li.appendChild(btn);
      this.undecidedList.appendChild(li);
    }
  }

  private async reopen(itemId: string, row: HTMLElement): Promise<void> {
    if (!this.campaignId) return;
    const result = await this.api.reopenItem(this.campaignId, itemId);
    row.setAttribute("data-required", String(result.required_engagements));
    row.appendChild(this.doc.createTextNode(` re-opened (now needs ${result.required_engagements})`));
  }

  async prepareExport(): Promise<string> {
    if (!this.campaignId) return "";
    const text = await this.api.exportText(this.campaignId);
    this.exportLink.href = `data:application/x-ndjson;charset=utf-8,${encodeURIComponent(text)}`;
    this.exportLink.setAttribute("download", `${this.campaignId}-export.ndjson`);
    return text;
  }
}
