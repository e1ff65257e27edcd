/** Stored results: list, view, download, delete. */

import { Api } from "../api.js";
import { clear, h, panel } from "../dom.js";

export class ResultsPanel {
  el: HTMLElement;
  private body: HTMLElement;
  onView: ((buffer: ArrayBuffer) => void) | null = null;

  constructor(private api: Api) {
    this.body = h("div", { dataset: { testid: "results-list" } });
    this.el = panel("Results",
      h("button", { onclick: () => void this.refresh() }, "Refresh"), this.body);
  }

  async refresh(): Promise<void> {
    const items = await this.api.results();
    clear(this.body);
    if (!items.length) {
      this.body.append(h("p", { class: "hint" }, "No stored results yet."));
      return;
    }
    for (const item of items) {
      this.body.append(h("div", { class: "result-row", dataset: { id: item.id } },
        h("span", {}, item.name),
        h("button", {
          onclick: async () => this.onView?.(await this.api.resultData(item.id)),
        }, "view"),
        h("button", { onclick: () => void this.download(item.id, item.name) }, "download"),
        h("button", {
          onclick: async () => {
            await this.api.deleteResult(item.id);
            await this.refresh();
          },
        }, "delete"),
      ));
    }
  }

  private async download(id: string, name: string): Promise<void> {
    const data = await this.api.resultData(id);
    const url = URL.createObjectURL(new Blob([data]));
    const a = h("a", { href: url, download: `${name}.mrresult` });
    a.click();
    URL.revokeObjectURL(url);
  }
}
