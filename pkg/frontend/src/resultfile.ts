/** Parser for downloaded result files: one JSON header line, then little-endian
 * float32/float64 arrays (raw re/im, sample times, k-space re/im, magnitude,
 * phase).  Mirrors the format documented in docs/formats.md. */

export interface ResultFile {
  header: {
    mrresult_version: number;
    layout: { n_lines: number; samples_per_line: number; reversed_lines: boolean[];
              fov: number | null };
    n_raw_samples: number;
    image_shape: [number, number];
    provenance: Record<string, unknown>;
  };
  magnitude: Float32Array; // row-major image_shape
  phase: Float32Array;
  kspaceInterleaved: Float32Array;
  rawInterleaved: Float32Array;
  sampleTimes: Float64Array;
}

export function parseResult(buffer: ArrayBuffer): ResultFile {
  const bytes = new Uint8Array(buffer);
  let nl = -1;
  for (let i = 0; i < bytes.length; i++) {
    if (bytes[i] === 0x0a) {
      nl = i;
      break;
    }
  }
  if (nl < 0) throw new Error("result file: missing header line");
  const header = JSON.parse(new TextDecoder().decode(bytes.subarray(0, nl)));
  if (header.mrresult_version !== 1) {
    throw new Error(`result file: unsupported version ${header.mrresult_version}`);
  }
  const nRaw: number = header.n_raw_samples;
  const [nLines, nSamp] = header.image_shape as [number, number];
  const nPix = nLines * nSamp;
  let off = nl + 1;
  const expect = nRaw * 8 + nRaw * 8 + nPix * 8 + nPix * 4 + nPix * 4;
  if (bytes.length - off !== expect) {
    throw new Error(`result file: truncated payload (${bytes.length - off} of ${expect})`);
  }
  const take32 = (count: number): Float32Array => {
    const out = new Float32Array(buffer.slice(off, off + count * 4));
    off += count * 4;
    return out;
  };
  const take64 = (count: number): Float64Array => {
    const out = new Float64Array(buffer.slice(off, off + count * 8));
    off += count * 8;
    return out;
  };
  const rawInterleaved = take32(2 * nRaw);
  const sampleTimes = take64(nRaw);
  const kspaceInterleaved = take32(2 * nPix);
  const magnitude = take32(nPix);
  const phase = take32(nPix);
  return { header, magnitude, phase, kspaceInterleaved, rawInterleaved, sampleTimes };
}
