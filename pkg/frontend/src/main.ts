/** Application shell: menu bar, panel layout, login gate, responsive reflow. */

import { Api } from "./api.js";
import { clear, h } from "./dom.js";
import { validateDoc } from "./schema.js";
import { Editor } from "./state.js";
import { SequenceDoc } from "./types.js";
import { AdminPanel, LoginScreen, UserMenu } from "./panels/auth.js";
import { DiagramPanel } from "./panels/diagram.js";
import { GroupsPanel, PalettePanel, SequencePanel } from "./panels/editor.js";
import { DescriptionPanel, ParamsPanel, ScannerPanel, VariablesPanel } from "./panels/params.js";
import { PhantomPanel } from "./panels/phantom.js";
import { ResultsPanel } from "./panels/results.js";
import { SimulatePanel } from "./panels/simulate.js";

export const MOBILE_BREAKPOINT = 768;

/** Pure layout rule so reflow is testable without a layout engine. */
export function layoutMode(width: number): "desktop" | "single-column" {
  return width < MOBILE_BREAKPOINT ? "single-column" : "desktop";
}

export class App {
  editor = new Editor();
  api: Api;
  root: HTMLElement;

  login: LoginScreen;
  userMenu: UserMenu;
  sequence!: SequencePanel;
  palette!: PalettePanel;
  groups!: GroupsPanel;
  params!: ParamsPanel;
  scanner!: ScannerPanel;
  variables!: VariablesPanel;
  description!: DescriptionPanel;
  simulate!: SimulatePanel;
  diagram!: DiagramPanel;
  phantom!: PhantomPanel;
  results!: ResultsPanel;
  admin!: AdminPanel;

  constructor(root: HTMLElement, api?: Api) {
    this.root = root;
    this.api = api ?? new Api();
    this.login = new LoginScreen(this.api);
    this.userMenu = new UserMenu(this.api);
    this.login.onLogin = () => void this.showWorkspace();
    this.userMenu.onLogout = () => this.showLogin();
    this.userMenu.onShowAdmin = () => {
      this.admin.el.classList.toggle("hidden");
      void this.admin.refresh();
    };
  }

  showLogin(): void {
    clear(this.root);
    this.root.append(this.login.el);
  }

  async showWorkspace(): Promise<void> {
    this.sequence = new SequencePanel(this.editor);
    this.palette = new PalettePanel(this.editor);
    this.groups = new GroupsPanel(this.editor);
    this.params = new ParamsPanel(this.editor);
    this.scanner = new ScannerPanel(this.editor);
    this.variables = new VariablesPanel(this.editor);
    this.description = new DescriptionPanel(this.editor);
    this.simulate = new SimulatePanel(this.editor, this.api);
    this.diagram = new DiagramPanel(this.editor, this.api);
    this.phantom = new PhantomPanel(this.editor, this.api);
    this.results = new ResultsPanel(this.api);
    this.admin = new AdminPanel(this.api);
    this.admin.el.classList.add("hidden");
    this.diagram.onViolations = (v) => this.variables.setServerViolations(v);
    this.results.onView = (buffer) => this.simulate.showResult(buffer);
    this.simulate.onFinished = () => void this.results.refresh();
    this.userMenu.render();

    clear(this.root);
    this.root.append(
      h("header", { class: "menubar" },
        h("span", { class: "brand" }, "mrseq"),
        this.fileMenu(),
        h("button", { dataset: { testid: "menu-diagram" },
                      onclick: () => void this.diagram.refresh() }, "Diagram"),
        h("span", { class: "spacer" }),
        this.userMenu.el,
      ),
      h("main", { class: "workspace", dataset: { testid: "workspace" } },
        h("div", { class: "col col-left" }, this.palette.el, this.groups.el,
          this.scanner.el),
        h("div", { class: "col col-mid" }, this.sequence.el, this.params.el,
          this.description.el),
        h("div", { class: "col col-right" }, this.variables.el, this.simulate.el,
          this.phantom.el),
        h("div", { class: "col col-wide" }, this.diagram.el, this.results.el,
          this.admin.el),
      ),
    );
    this.applyLayout(window.innerWidth);
    window.addEventListener("resize", () => this.applyLayout(window.innerWidth));
    await Promise.all([this.simulate.loadPhantoms(), this.phantom.loadPhantoms(),
                       this.results.refresh()]);
  }

  applyLayout(width: number): void {
    const workspace = this.root.querySelector(".workspace");
    if (!workspace) return;
    workspace.classList.toggle("single-column", layoutMode(width) === "single-column");
  }

  private fileMenu(): HTMLElement {
    const select = h("select", { class: "file-menu", dataset: { testid: "file-menu" } },
      h("option", { value: "" }, "File"),
      h("option", { value: "new" }, "New"),
      h("option", { value: "save-server" }, "Save to server"),
      h("option", { value: "download" }, "Download JSON"),
      h("option", { value: "upload" }, "Open JSON file"),
    );
    void this.api.examples().then((names) => {
      for (const name of names) {
        select.append(h("option", { value: `example:${name}` }, `Example: ${name}`));
      }
    }).catch(() => undefined);
    select.addEventListener("change", async () => {
      const value = select.value;
      select.value = "";
      if (value === "new") {
        this.editor.newDoc();
      } else if (value.startsWith("example:")) {
        await this.loadExample(value.slice("example:".length));
      } else if (value === "save-server") {
        const name = prompt("sequence name", "untitled") ?? "untitled";
        await this.api.saveSequence(name, this.editor.doc);
        this.editor.dirty = false;
      } else if (value === "download") {
        const url = URL.createObjectURL(
          new Blob([JSON.stringify(this.editor.doc, null, 2)],
                   { type: "application/json" }));
        h("a", { href: url, download: "sequence.json" }).click();
        URL.revokeObjectURL(url);
      } else if (value === "upload") {
        const input = h("input", { type: "file", accept: ".json" });
        input.addEventListener("change", async () => {
          const file = input.files?.[0];
          if (!file) return;
          const doc = JSON.parse(await file.text()) as SequenceDoc;
          if (validateDoc(doc).length === 0) this.editor.loadDoc(doc);
        });
        input.click();
      }
    });
    return select;
  }

  async loadExample(name: string): Promise<void> {
    this.editor.loadDoc(await this.api.example(name));
  }
}

export function boot(): App {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new App(root);
  app.showLogin();
  return app;
}

declare global {
  interface Window {
    mrseqApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.mrseqApp = boot();
}
