/** Client-side mirror of the server's sequence schema: structural checks plus a
 * parse-only expression checker with the same grammar.  The UI never evaluates
 * expressions or does physics; parsing exists so every committed edit keeps the
 * document schema-valid. */

import { BLOCK_FIELDS, Block, BlockType, SequenceDoc } from "./types.js";

const NAME_RE = /^[A-Za-z_][A-Za-z0-9_]*$/;
const RESERVED = new Set(["gamma", "rep"]);

/** Returns null when the expression parses, otherwise a message. */
export function expressionError(source: string): string | null {
  if (typeof source !== "string" || source.trim() === "") {
    return "expected a non-empty expression";
  }
  let pos = 0;
  const n = source.length;
  const ws = () => {
    while (pos < n && /\s/.test(source[pos])) pos++;
  };
  const peek = () => {
    ws();
    return pos < n ? source[pos] : null;
  };
  let failure: string | null = null;
  const fail = (expected: string): false => {
    if (failure === null) failure = `syntax error at offset ${pos}: expected ${expected}`;
    return false;
  };
  const number = (): boolean => {
    const start = pos;
    while (pos < n && /[0-9]/.test(source[pos])) pos++;
    if (pos < n && source[pos] === ".") {
      pos++;
      while (pos < n && /[0-9]/.test(source[pos])) pos++;
    }
    if (pos === start || source.slice(start, pos) === ".") return fail("a number");
    if (pos < n && (source[pos] === "e" || source[pos] === "E")) {
      const mark = pos;
      pos++;
      if (pos < n && (source[pos] === "+" || source[pos] === "-")) pos++;
      if (pos < n && /[0-9]/.test(source[pos])) {
        while (pos < n && /[0-9]/.test(source[pos])) pos++;
      } else {
        pos = mark;
      }
    }
    return true;
  };
  const atom = (): boolean => {
    const c = peek();
    if (c === null) return fail("a value");
    if (c === "(") {
      pos++;
      if (!sum()) return false;
      if (peek() !== ")") return fail("')'");
      pos++;
      return true;
    }
    if (/[0-9.]/.test(c)) return number();
    if (/[A-Za-z_]/.test(c)) {
      while (pos < n && /[A-Za-z0-9_]/.test(source[pos])) pos++;
      if (peek() === "(") {
        pos++;
        if (!sum()) return false;
        while (peek() === ",") {
          pos++;
          if (!sum()) return false;
        }
        if (peek() !== ")") return fail("')'");
        pos++;
      }
      return true;
    }
    return fail("a value");
  };
  const power = (): boolean => {
    if (!atom()) return false;
    if (peek() === "^") {
      pos++;
      return unary();
    }
    return true;
  };
  const unary = (): boolean => {
    if (peek() === "-") {
      pos++;
      return unary();
    }
    return power();
  };
  const product = (): boolean => {
    if (!unary()) return false;
    while (peek() === "*" || peek() === "/") {
      pos++;
      if (!unary()) return false;
    }
    return true;
  };
  const sum = (): boolean => {
    if (!product()) return false;
    while (peek() === "+" || peek() === "-") {
      pos++;
      if (!product()) return false;
    }
    return true;
  };
  if (!sum()) return failure;
  if (peek() !== null) return `syntax error at offset ${pos}: expected end of input`;
  return null;
}

function checkBlock(block: Block, path: string, groupNames: Set<string>,
                    errors: string[]): void {
  const spec = BLOCK_FIELDS[block.type as BlockType];
  if (!spec) {
    errors.push(`${path}.type: unknown block variant '${block.type}'`);
    return;
  }
  const known = new Set(spec.map((f) => f.name));
  for (const key of Object.keys(block)) {
    if (key !== "type" && !known.has(key)) {
      errors.push(`${path}.${key}: unknown field for block '${block.type}'`);
    }
  }
  for (const f of spec) {
    const value = block[f.name];
    if (value === undefined) {
      if (f.default === undefined) errors.push(`${path}.${f.name}: missing required field`);
      continue;
    }
    if (f.kind === "enum") {
      const allowed = f.name === "group" ? groupNames : new Set(f.values);
      if (!allowed.has(value)) errors.push(`${path}.${f.name}: must be one of the allowed values`);
    } else {
      const err = expressionError(value);
      if (err) errors.push(`${path}.${f.name}: ${err}`);
    }
  }
}

/** All schema errors of a document (empty array = valid). Mirrors the server. */
export function validateDoc(doc: SequenceDoc): string[] {
  const errors: string[] = [];
  if (doc.mrseq_version !== 1) errors.push(".mrseq_version: unsupported version");
  for (const key of ["b0", "max_rf_amp", "max_grad", "max_slew"] as const) {
    if (!(typeof doc.scanner?.[key] === "number" && doc.scanner[key] > 0)) {
      errors.push(`.scanner.${key}: must be a positive number`);
    }
  }
  if (typeof doc.scanner?.adc_dead_time !== "number" || doc.scanner.adc_dead_time < 0) {
    errors.push(".scanner.adc_dead_time: must be a number >= 0");
  }
  const names = doc.groups.map((g) => g.name);
  const groupNames = new Set(names);
  if (groupNames.size !== names.length) errors.push(".groups: duplicate group name");
  for (const name of names) {
    if (!NAME_RE.test(name)) errors.push(`.groups: invalid group name '${name}'`);
  }
  const reserved = new Set([...RESERVED, ...names.map((g) => `rep_${g}`)]);
  for (const [name, src] of Object.entries(doc.variables)) {
    if (!NAME_RE.test(name)) errors.push(`.variables.${name}: invalid variable name`);
    else if (reserved.has(name)) errors.push(`.variables.${name}: shadows a reserved name`);
    const err = expressionError(src);
    if (err) errors.push(`.variables.${name}: ${err}`);
  }
  doc.groups.forEach((g, gi) => {
    g.blocks.forEach((b, bi) =>
      checkBlock(b, `.groups[${gi}].blocks[${bi}]`, groupNames, errors));
  });
  doc.blocks.forEach((b, bi) => checkBlock(b, `.blocks[${bi}]`, groupNames, errors));
  // acyclic group references
  const gmap = new Map(doc.groups.map((g) => [g.name, g] as const));
  const visiting = new Set<string>();
  const done = new Set<string>();
  const visit = (name: string): boolean => {
    if (done.has(name)) return true;
    if (visiting.has(name)) return false;
    visiting.add(name);
    for (const b of gmap.get(name)?.blocks ?? []) {
      if (b.type === "group_ref" && gmap.has(b.group) && !visit(b.group)) return false;
    }
    visiting.delete(name);
    done.add(name);
    return true;
  };
  for (const g of doc.groups) {
    if (!visit(g.name)) {
      errors.push(".groups: cyclic group reference");
      break;
    }
  }
  return errors;
}

export function emptyDoc(): SequenceDoc {
  return {
    mrseq_version: 1,
    description: "",
    scanner: { b0: 3.0, max_rf_amp: 1e-4, max_grad: 0.045, max_slew: 200.0,
               adc_dead_time: 0.0 },
    variables: {},
    groups: [],
    blocks: [],
  };
}

/** Deep clone via JSON; documents are plain data. */
export function cloneDoc(doc: SequenceDoc): SequenceDoc {
  return JSON.parse(JSON.stringify(doc)) as SequenceDoc;
}
