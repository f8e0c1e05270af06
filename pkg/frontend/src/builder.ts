/** Campaign builder: form model with client-side validation, live task-ad
 * preview, a quality (K) slider, and create/publish controls.
 */

import { ApiClient, DatasetSummary } from "./api.js";
import { DEFAULT_OPTIONS, placeholderCount, renderTaskAdPreview } from "./preview.js";

export interface CampaignFormState {
  datasetId: string;
  promptTemplate: string;
  options: string[];
  requiredEngagements: number;
  batchSize: number;
  timeBudget: number;
  rewardPoints: number;
}

export function defaultFormState(datasetId = ""): CampaignFormState {
  return {
    datasetId,
    promptTemplate: "Does this image contain a {class}?",
    options: [...DEFAULT_OPTIONS],
    requiredEngagements: 3,
    batchSize: 5,
    timeBudget: 30,
    rewardPoints: 0,
  };
}

/** Mirrors the server-side campaign invariants so submit stays disabled
 * until the config would be accepted. */
export function validateForm(state: CampaignFormState): string[] {
  const problems: string[] = [];
  if (!state.datasetId) problems.push("choose a dataset");
  const n = placeholderCount(state.promptTemplate);
  if (n === 0) problems.push("prompt template needs a {class} placeholder");
  if (n > 1) problems.push("prompt template must contain exactly one {class}");
  if (new Set(state.options).size < 2) problems.push("at least 2 distinct options");
  if (new Set(state.options).size !== state.options.length) problems.push("options must not repeat");
  if (!(Number.isInteger(state.requiredEngagements) && state.requiredEngagements >= 1))
    problems.push("quality threshold must be a positive integer");
  if (!(Number.isInteger(state.batchSize) && state.batchSize >= 1))
    problems.push("batch size must be a positive integer");
  if (!(state.timeBudget > 0 && state.timeBudget <= 30)) problems.push("time budget must be in (0, 30] seconds");
  if (state.rewardPoints < 0) problems.push("reward points must be >= 0");
  return problems;
}

export class BuilderView {
  readonly root: HTMLElement;
  state: CampaignFormState;
  campaignId: string | null = null;
  previewClass = "Dog";
  onCreated: (campaignId: string) => void = () => {};

  private readonly promptInput: HTMLInputElement;
  private readonly kSlider: HTMLInputElement;
  private readonly kValue: HTMLElement;
  private readonly batchInput: HTMLInputElement;
  private readonly createButton: HTMLButtonElement;
  private readonly publishToggle: HTMLButtonElement;
  private readonly problemsList: HTMLElement;
  private readonly previewBox: HTMLElement;
  private readonly statusLine: HTMLElement;
  private published = false;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
  ) {
    this.state = defaultFormState();
    this.root = doc.createElement("section");
    this.root.id = "builder-view";

    const title = doc.createElement("h2");
    title.textContent = "Build labeling task";
    this.root.appendChild(title);

    this.promptInput = doc.createElement("input");
    this.promptInput.id = "prompt-template";
    this.promptInput.value = this.state.promptTemplate;
    this.promptInput.addEventListener("input", () => {
      this.state.promptTemplate = this.promptInput.value;
      this.refresh();
    });
    this.root.appendChild(this.promptInput);

    const kLabel = doc.createElement("label");
    kLabel.textContent = "Quality (workers per item): ";
    this.kSlider = doc.createElement("input");
    this.kSlider.type = "range";
    this.kSlider.id = "k-slider";
    this.kSlider.min = "1";
    this.kSlider.max = "10";
    this.kSlider.value = String(this.state.requiredEngagements);
    this.kSlider.addEventListener("input", () => {
      this.state.requiredEngagements = Number(this.kSlider.value);
      this.refresh();
    });
    this.kValue = doc.createElement("span");
    this.kValue.id = "k-value";
    kLabel.appendChild(this.kSlider);
    kLabel.appendChild(this.kValue);
    this.root.appendChild(kLabel);

    this.batchInput = doc.createElement("input");
    this.batchInput.id = "batch-size";
    this.batchInput.type = "number";
    this.batchInput.value = String(this.state.batchSize);
    this.batchInput.addEventListener("input", () => {
      this.state.batchSize = Number(this.batchInput.value);
      this.refresh();
    });
    this.root.appendChild(this.batchInput);

    this.problemsList = doc.createElement("ul");
    this.problemsList.id = "form-problems";
    this.root.appendChild(this.problemsList);

    const previewTitle = doc.createElement("h3");
    previewTitle.textContent = "Preview";
    this.root.appendChild(previewTitle);
    this.previewBox = doc.createElement("div");
    this.previewBox.id = "preview-box";
    this.root.appendChild(this.previewBox);

    this.createButton = doc.createElement("button");
    this.createButton.id = "create-campaign";
    this.createButton.textContent = "Create campaign";
    this.createButton.addEventListener("click", () => void this.create());
    this.root.appendChild(this.createButton);

    this.publishToggle = doc.createElement("button");
    this.publishToggle.id = "publish-toggle";
    this.publishToggle.textContent = "Publish";
    this.publishToggle.disabled = true;
    this.publishToggle.addEventListener("click", () => void this.togglePublish());
    this.root.appendChild(this.publishToggle);

    this.statusLine = doc.createElement("p");
    this.statusLine.id = "builder-status";
    this.root.appendChild(this.statusLine);

    this.refresh();
  }

  useDataset(summary: DatasetSummary): void {
    this.state.datasetId = summary.dataset_id;
    const classes = Object.keys(summary.class_histogram).sort();
    if (classes.length > 0) this.previewClass = classes[0];
    this.refresh();
  }

  previewText(): string {
    return this.previewBox.querySelector(".preview-prompt")?.textContent ?? "";
  }

  refresh(): void {
    this.kValue.textContent = ` ${this.state.requiredEngagements}`;
    const problems = validateForm(this.state);
    this.problemsList.innerHTML = "";
    for (const p of problems) {
      const li = this.doc.createElement("li");
      li.textContent = p;
      this.problemsList.appendChild(li);
    }
    this.createButton.disabled = problems.length > 0 || this.campaignId !== null;
    this.previewBox.innerHTML = "";
    this.previewBox.appendChild(
      renderTaskAdPreview(this.doc, this.state.promptTemplate, this.previewClass, this.state.options),
    );
  }

  async create(): Promise<void> {
    const problems = validateForm(this.state);
    if (problems.length > 0) return;
    const created = await this.api.createCampaign({
      dataset_id: this.state.datasetId,
      prompt_template: this.state.promptTemplate,
      options: this.state.options,
      required_engagements: this.state.requiredEngagements,
      batch_size: this.state.batchSize,
      time_budget: this.state.timeBudget,
      reward_points: this.state.rewardPoints,
    });
    this.campaignId = created.campaign_id;
    this.publishToggle.disabled = false;
    this.statusLine.textContent = `Created ${this.campaignId} (Draft)`;
    this.refresh();
    this.onCreated(this.campaignId);
  }

  async togglePublish(): Promise<void> {
    if (!this.campaignId) return;
    const result = this.published
      ? await this.api.unpublish(this.campaignId)
      : await this.api.publish(this.campaignId);
    this.published = result.status === "Published";
    this.publishToggle.textContent = this.published ? "Unpublish" : "Publish";
    this.statusLine.textContent = `Campaign ${this.campaignId}: ${result.status}`;
  }
}
