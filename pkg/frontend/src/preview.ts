/** Client-side task-ad preview.
 *
 * renderPrompt must stay byte-for-byte identical to the server's rendering
 * (single `{class}` placeholder substituted with the class name); the e2e
 * suite checks the preview against prompts actually served to a client.
 */

export const PROMPT_PLACEHOLDER = "{class}";
export const DEFAULT_OPTIONS = ["Yes", "No", "Not sure"];

export function placeholderCount(template: string): number {
  return template.split(PROMPT_PLACEHOLDER).length - 1;
}

export function renderPrompt(template: string, className: string): string {
  if (placeholderCount(template) !== 1) {
    throw new Error(`template must contain exactly one ${PROMPT_PLACEHOLDER}`);
  }
  return template.replace(PROMPT_PLACEHOLDER, className);
}

/** The preview mirrors what a labeling client renders: prompt text plus one
 * button per option. */
export function renderTaskAdPreview(
  doc: Document,
  template: string,
  className: string,
  options: string[] = DEFAULT_OPTIONS,
): HTMLElement {
  const card = doc.createElement("div");
  card.className = "task-ad-preview";
  const prompt = doc.createElement("p");
  prompt.className = "preview-prompt";
  try {
    prompt.textContent = renderPrompt(template, className);
  } catch (err) {
    prompt.textContent = `(invalid template: ${(err as Error).message})`;
    prompt.classList.add("invalid");
  }
  card.appendChild(prompt);
  const buttons = doc.createElement("div");
  buttons.className = "preview-options";
  for (const option of options) {
    const b = doc.createElement("button");
    b.type = "button";
    b.className = "preview-option";
    b.textContent = option;
    buttons.appendChild(b);
  }
  card.appendChild(buttons);
  return card;
}
