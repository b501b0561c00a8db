/** Plain-HTML rendering of a screen model. The markup is intentionally
 * framework-free so it can be unit-tested without a browser and mounted
 * with `element.innerHTML = renderScreen(model)` in one. */

import type { ScreenModel } from "./screen.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderScreen(model: ScreenModel): string {
  const parts: string[] = [
    `<main data-screen="${esc(model.screen)}" data-version="${model.version}">`,
  ];

  parts.push(`<section class="sections">`);
  for (const row of model.sections) {
    const classes = ["section", row.locked ? "locked" : "unlocked"].join(" ");
    const disabled = row.recordingEnabled ? "" : " disabled";
    parts.push(
      `<details class="${classes}" data-section="${esc(row.section)}">` +
        `<summary>${esc(row.section)} — ${esc(row.status)}</summary>` +
        `<button class="record"${disabled}>Record</button>` +
        `</details>`,
    );
  }
  parts.push(`</section>`);

  if (model.clarificationInputs.length > 0) {
    parts.push(`<section class="clarifications">`);
    for (const input of model.clarificationInputs) {
      const disabled = input.enabled ? "" : " disabled";
      parts.push(
        `<label>${esc(input.questionText)}` +
          `<input data-section="${esc(input.section)}"` +
          ` data-question="${input.questionId}"${disabled}></label>`,
      );
    }
    parts.push(`</section>`);
  }

  if (model.flags.length > 0) {
    parts.push(`<section class="flags">`);
    for (const flag of model.flags) {
      parts.push(
        `<p class="flag ${flag.highlight}" data-rule="${esc(flag.ruleId)}">` +
          `${esc(flag.title)}: ${esc(flag.detail)}` +
          (flag.acknowledged ? ` <em>acknowledged</em>` : ``) +
          `</p>`,
      );
    }
    parts.push(`</section>`);
  }

  const saveDisabled = model.saveGate.enabled ? "" : " disabled";
  parts.push(
    `<button class="save"${saveDisabled}` +
      ` data-blocking="${esc(model.saveGate.blockingFlagIds.join(","))}">` +
      `Save visit</button>`,
  );

  for (const warning of model.warnings) {
    parts.push(`<p class="warning yellow">${esc(warning)}</p>`);
  }
  parts.push(`</main>`);
  return parts.join("");
}
