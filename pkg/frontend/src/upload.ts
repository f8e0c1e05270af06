/** Dataset upload view: paste or pick a manifest file, see per-line errors,
 * and get a summary (item count, class histogram, gold coverage) on success.
 */

import { ApiClient, ApiError, DatasetSummary } from "./api.js";

export class UploadView {
  readonly root: HTMLElement;
  onUploaded: (summary: DatasetSummary) => void = () => {};

  private readonly textarea: HTMLTextAreaElement;
  private readonly nameInput: HTMLInputElement;
  private readonly button: HTMLButtonElement;
  private readonly status: HTMLElement;
  private readonly summaryBox: HTMLElement;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
  ) {
    this.root = doc.createElement("section");
    this.root.id = "upload-view";

    const title = doc.createElement("h2");
    title.textContent = "Upload dataset";
    this.root.appendChild(title);

    this.nameInput = doc.createElement("input");
    this.nameInput.id = "dataset-name";
    this.nameInput.placeholder = "dataset name";
    this.root.appendChild(this.nameInput);

    const file = doc.createElement("input");
    file.type = "file";
    file.id = "manifest-file";
    file.addEventListener("change", () => {
      const picked = file.files?.[0];
      if (picked) {
        void picked.text().then((text) => {
          this.textarea.value = text;
        });
      }
    });
    this.root.appendChild(file);

    this.textarea = doc.createElement("textarea");
    this.textarea.id = "manifest-text";
    this.textarea.rows = 10;
    this.textarea.placeholder = '{"item_id": ..., "media_ref": ..., "class_name": ..., "gold": "yes"|"no"}';
    this.root.appendChild(this.textarea);

    this.button = doc.createElement("button");
    this.button.id = "upload-button";
    this.button.textContent = "Upload";
    this.button.addEventListener("click", () => void this.upload());
    this.root.appendChild(this.button);

    this.status = doc.createElement("p");
    this.status.id = "upload-status";
    this.root.appendChild(this.status);

    this.summaryBox = doc.createElement("div");
    this.summaryBox.id = "dataset-summary";
    this.root.appendChild(this.summaryBox);
  }

  manifestLineCount(): number {
    return this.textarea.value.split("\n").filter((l) => l.trim().length > 0).length;
  }

  async upload(): Promise<void> {
    const manifest = this.textarea.value;
    if (manifest.trim().length === 0) {
      this.status.textContent = "Nothing to upload: the manifest is empty.";
      this.status.className = "error";
      return; // blocked before any network call
    }
    this.status.textContent = "Uploading...";
    this.status.className = "";
    try {
      const summary = await this.api.uploadDataset(this.nameInput.value || "unnamed", manifest);
      this.renderSummary(summary);
      this.status.textContent = `Dataset ${summary.dataset_id} stored.`;
      this.status.className = "ok";
      this.onUploaded(summary);
    } catch (err) {
      if (err instanceof ApiError && err.line !== undefined) {
        this.status.textContent = `Line ${err.line}: ${err.message}`;
        this.highlightLine(err.line);
      } else {
        this.status.textContent = `Upload failed: ${(err as Error).message}`;
      }
      this.status.className = "error";
    }
  }

  private highlightLine(line: number): void {
    const lines = this.textarea.value.split("\n");
    const before = lines.slice(0, line - 1).join("\n").length;
    this.textarea.focus();
    this.textarea.setSelectionRange(before === 0 ? 0 : before + 1, before + 1 + (lines[line - 1]?.length ?? 0));
  }

  private renderSummary(summary: DatasetSummary): void {
    this.summaryBox.innerHTML = "";
    const counts = this.doc.createElement("p");
    counts.id = "summary-counts";
    counts.textContent = `${summary.items_total} items, ${summary.gold_items} with gold labels`;
    this.summaryBox.appendChild(counts);
    const table = this.doc.createElement("ul");
    table.id = "summary-classes";
    for (const [cls, n] of Object.entries(summary.class_histogram).sort()) {
      const li = this.doc.createElement("li");
      li.textContent = `${cls}: ${n}`;
      table.appendChild(li);
    }
    this.summaryBox.appendChild(table);
  }
}
