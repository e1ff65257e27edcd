/** Parameter panels: selected block fields, scanner limits, global variables
 * (with validation badges), and the description text. */

import { clear, h, panel } from "../dom.js";
import { expressionError } from "../schema.js";
import { EditError, Editor } from "../state.js";
import { BLOCK_FIELDS, BLOCK_LABELS, BlockType, Violation } from "../types.js";

export class ParamsPanel {
  el: HTMLElement;
  private body: HTMLElement;

  constructor(private editor: Editor) {
    this.body = h("div", { dataset: { testid: "params" } });
    this.el = panel("Block parameters", this.body);
    editor.subscribe(() => this.render());
    this.render();
  }

  render(): void {
    clear(this.body);
    const sel = this.editor.selection;
    const block = sel ? this.editor.blockAt(sel) : null;
    if (!sel || !block) {
      this.body.append(h("p", { class: "hint" }, "Select a block to edit its fields."));
      return;
    }
    this.body.append(h("p", { class: "param-title" }, BLOCK_LABELS[block.type as BlockType]));
    for (const field of BLOCK_FIELDS[block.type as BlockType]) {
      const current = block[field.name] ?? field.default ?? "";
      const errorEl = h("span", { class: "field-error" });
      let input: HTMLElement;
      if (field.kind === "enum") {
        const values = field.name === "group"
          ? this.editor.doc.groups.map((g) => g.name)
          : field.values ?? [];
        input = h("select", {
          value: current,
          onchange: (e: Event) => {
            this.commit(sel!, field.name, (e.target as HTMLSelectElement).value, errorEl);
          },
        }, ...values.map((v) => h("option", { value: v, selected: v === current }, v)));
      } else {
        input = h("input", {
          value: current,
          dataset: { field: field.name },
          onchange: (e: Event) => {
            this.commit(sel!, field.name, (e.target as HTMLInputElement).value, errorEl);
          },
        });
      }
      this.body.append(h("label", { class: "field-row" },
        h("span", { class: "field-label" },
          field.label + (field.unit ? ` [${field.unit}]` : "")),
        input, errorEl));
    }
  }

  private commit(sel: { group: string | null; index: number }, field: string,
                 value: string, errorEl: HTMLElement): void {
    try {
      this.editor.updateField(sel, field, value);
      errorEl.textContent = "";
    } catch (e) {
      errorEl.textContent = e instanceof EditError ? e.message : String(e);
    }
  }
}

export class ScannerPanel {
  el: HTMLElement;

  constructor(editor: Editor) {
    const fields: { key: keyof Editor["doc"]["scanner"]; label: string }[] = [
      { key: "b0", label: "B0 [T]" },
      { key: "max_rf_amp", label: "Max B1 [T]" },
      { key: "max_grad", label: "Max gradient [T/m]" },
      { key: "max_slew", label: "Max slew [T/m/s]" },
      { key: "adc_dead_time", label: "ADC dead time [s]" },
    ];
    const body = h("div", {});
    const render = () => {
      clear(body);
      for (const f of fields) {
        body.append(h("label", { class: "field-row" },
          h("span", { class: "field-label" }, f.label),
          h("input", {
            type: "number", step: "any", value: String(editor.doc.scanner[f.key]),
            onchange: (e: Event) => {
              const v = Number((e.target as HTMLInputElement).value);
              try {
                editor.setScannerField(f.key, v);
              } catch { render(); }
            },
          })));
      }
    };
    editor.subscribe(render);
    render();
    this.el = panel("Scanner", body);
  }
}

export class VariablesPanel {
  el: HTMLElement;
  private body: HTMLElement;
  /** badges from the last /api/plot validation, keyed by referenced name */
  private serverBadges = new Map<string, string>();

  constructor(private editor: Editor) {
    this.body = h("div", { dataset: { testid: "variables" } });
    this.el = panel("Variables", this.body);
    editor.subscribe(() => this.render());
    this.render();
  }

  /** Inline badges derived from server-side validation (eval errors name
   * unknown identifiers and cycles). */
  setServerViolations(violations: Violation[]): void {
    this.serverBadges.clear();
    for (const v of violations) {
      if (v.kind !== "eval") continue;
      const m = /'([A-Za-z_][A-Za-z0-9_]*)'/.exec(v.message);
      this.serverBadges.set(m ? m[1] : v.path, v.message);
    }
    this.render();
  }

  render(): void {
    clear(this.body);
    for (const [name, expr] of Object.entries(this.editor.doc.variables)) {
      const badge = this.serverBadges.get(name);
      const errorEl = h("span", { class: "field-error" }, badge ?? "");
      this.body.append(h("div", { class: "var-row", dataset: { name } },
        h("span", { class: "var-name" }, name),
        h("input", {
          value: expr,
          onchange: (e: Event) => {
            const value = (e.target as HTMLInputElement).value;
            const err = expressionError(value);
            if (err) {
              errorEl.textContent = err;
            } else {
              this.editor.setVariable(name, value);
            }
          },
        }),
        errorEl,
        h("button", { onclick: () => this.editor.removeVariable(name) }, "×"),
      ));
    }
    const nameInput = h("input", { placeholder: "name", size: 8 });
    const exprInput = h("input", { placeholder: "expression", size: 14 });
    const addError = h("span", { class: "field-error" });
    this.body.append(h("div", { class: "var-add" },
      nameInput, exprInput,
      h("button", {
        dataset: { testid: "add-variable" },
        onclick: () => {
          const err = expressionError(exprInput.value);
          if (err) {
            addError.textContent = err;
            return;
          }
          try {
            this.editor.setVariable(nameInput.value.trim(), exprInput.value);
            addError.textContent = "";
            nameInput.value = "";
            exprInput.value = "";
          } catch (e) {
            addError.textContent = String((e as Error).message);
          }
        },
      }, "add"),
      addError,
    ));
  }
}

export class DescriptionPanel {
  el: HTMLElement;

  constructor(editor: Editor) {
    const area = h("textarea", {
      rows: 3,
      onchange: (e: Event) => editor.setDescription((e.target as HTMLTextAreaElement).value),
    });
    editor.subscribe(() => {
      if (document.activeElement !== area) area.value = editor.doc.description;
    });
    area.value = editor.doc.description;
    this.el = panel("Description", area);
  }
}
