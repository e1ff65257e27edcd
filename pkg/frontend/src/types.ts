/** Sequence document types mirroring the server's JSON schema (mrseq_version 1). */

export interface Scanner {
  b0: number;
  max_rf_amp: number;
  max_grad: number;
  max_slew: number;
  adc_dead_time: number;
}

export type BlockType =
  | "rf_pulse"
  | "gradient"
  | "delay"
  | "readout"
  | "epi_acq"
  | "group_ref";

/** Blocks are plain objects: a type tag plus expression-string fields. */
export interface Block {
  type: BlockType;
  [field: string]: string;
}

export interface GroupDef {
  name: string;
  blocks: Block[];
}

export interface SequenceDoc {
  mrseq_version: 1;
  description: string;
  scanner: Scanner;
  variables: Record<string, string>;
  groups: GroupDef[];
  blocks: Block[];
}

export interface FieldSpec {
  name: string;
  kind: "expr" | "enum";
  /** allowed values when kind = enum */
  values?: string[];
  /** omit-able fields get this default */
  default?: string;
  label: string;
  unit?: string;
}

/** Field catalogue per block variant; drives the palette and the parameter panel. */
export const BLOCK_FIELDS: Record<BlockType, FieldSpec[]> = {
  rf_pulse: [
    { name: "shape", kind: "enum", values: ["hard", "sinc"], default: "hard", label: "Shape" },
    { name: "flip_angle", kind: "expr", label: "Flip angle", unit: "deg" },
    { name: "duration", kind: "expr", label: "Duration", unit: "s" },
    { name: "freq_offset", kind: "expr", default: "0", label: "Frequency offset", unit: "Hz" },
    { name: "phase", kind: "expr", default: "0", label: "Phase", unit: "deg" },
    { name: "sinc_lobes", kind: "expr", default: "3", label: "Sinc lobes" },
    { name: "slice_grad_axis", kind: "enum", values: ["none", "x", "y", "z"],
      default: "none", label: "Slice axis" },
    { name: "slice_grad_amp", kind: "expr", default: "0", label: "Slice gradient", unit: "T/m" },
  ],
  gradient: [
    { name: "gx", kind: "expr", default: "0", label: "Gx", unit: "T/m" },
    { name: "gy", kind: "expr", default: "0", label: "Gy", unit: "T/m" },
    { name: "gz", kind: "expr", default: "0", label: "Gz", unit: "T/m" },
    { name: "flat_duration", kind: "expr", label: "Flat duration", unit: "s" },
    { name: "rise_time", kind: "expr", default: "0", label: "Rise time (0 = auto)", unit: "s" },
  ],
  delay: [{ name: "duration", kind: "expr", label: "Duration", unit: "s" }],
  readout: [
    { name: "samples", kind: "expr", label: "Samples" },
    { name: "duration", kind: "expr", label: "Duration", unit: "s" },
    { name: "read_grad_axis", kind: "enum", values: ["x", "y", "z"], label: "Read axis" },
    { name: "read_grad_amp", kind: "expr", label: "Read gradient", unit: "T/m" },
    { name: "line_tag", kind: "expr", default: "0", label: "k-space line" },
  ],
  epi_acq: [
    { name: "n_lines", kind: "expr", label: "Lines" },
    { name: "samples_per_line", kind: "expr", label: "Samples per line" },
    { name: "fov", kind: "expr", label: "FOV", unit: "m" },
    { name: "read_axis", kind: "enum", values: ["x", "y", "z"], default: "x", label: "Read axis" },
    { name: "phase_axis", kind: "enum", values: ["x", "y", "z"], default: "y",
      label: "Phase axis" },
  ],
  group_ref: [
    { name: "group", kind: "enum", values: [], label: "Group" },
    { name: "repetitions", kind: "expr", default: "1", label: "Repetitions" },
  ],
};

export const BLOCK_LABELS: Record<BlockType, string> = {
  rf_pulse: "RF pulse",
  gradient: "Gradient",
  delay: "Delay",
  readout: "Readout",
  epi_acq: "EPI acquisition",
  group_ref: "Group",
};

/** Palette defaults: a freshly inserted block of each kind. */
export function defaultBlock(type: BlockType): Block {
  const seed: Record<BlockType, Record<string, string>> = {
    rf_pulse: { flip_angle: "90", duration: "0.001" },
    gradient: { flat_duration: "0.001" },
    delay: { duration: "0.001" },
    readout: { samples: "64", duration: "0.00064", read_grad_axis: "x",
               read_grad_amp: "0.01" },
    epi_acq: { n_lines: "32", samples_per_line: "32", fov: "0.2" },
    group_ref: { group: "", repetitions: "1" },
  };
  const block: Block = { type, ...seed[type] } as Block;
  for (const f of BLOCK_FIELDS[type]) {
    if (!(f.name in block) && f.default !== undefined) block[f.name] = f.default;
  }
  return block;
}

export interface PlotSeries {
  t: number[];
  rf_mag: number[];
  rf_phase: number[];
  gx: number[];
  gy: number[];
  gz: number[];
  adc_mask: number[];
}

export interface Violation {
  path: string;
  kind: string;
  message: string;
  axis: string | null;
}

export interface SlicePlane {
  axis: "x" | "y" | "z";
  center_offset: number;
  thickness: number;
}

export interface JobStatus {
  id: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  progress: number;
  error: string | null;
}

export interface PhantomInfo {
  id: string;
  name: string;
  n_spins: number;
  has_grid: boolean;
  grid_dims: number[] | null;
  has_motion: boolean;
}

export interface StoredItem {
  id: string;
  name: string;
  created_at: number;
  owner?: string;
}

export interface User {
  id: string;
  username: string;
  role: "user" | "admin";
}
