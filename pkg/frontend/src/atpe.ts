/**
 * ATPE binary embedding store writer/reader.
 *
 * Layout (little-endian): magic "ATPE", format version u16, dim u32,
 * record count u64, then per record: modality u8 (0 = audio, 1 = text),
 * id length u16 + UTF-8 bytes, label length u16 + UTF-8 bytes (0 = no
 * label), dim float32 values.
 */

export const MAGIC = Buffer.from("ATPE", "ascii");
export const FORMAT_VERSION = 1;

export type Modality = "audio" | "text";

export interface EmbeddingRecord {
  id: string;
  modality: Modality;
  vector: Float32Array;
  label?: string;
}

const MODALITY_CODE: Record<Modality, number> = { audio: 0, text: 1 };
const CODE_MODALITY: Record<number, Modality> = { 0: "audio", 1: "text" };

export class FormatError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} at byte offset ${offset}`);
    this.name = "FormatError";
  }
}

export function encodeStore(dim: number, records: EmbeddingRecord[]): Buffer {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`dim must be a positive integer, got ${dim}`);
  }
  const header = Buffer.alloc(4 + 2 + 4 + 8);
  MAGIC.copy(header, 0);
  header.writeUInt16LE(FORMAT_VERSION, 4);
  header.writeUInt32LE(dim, 6);
  header.writeBigUInt64LE(BigInt(records.length), 10);

  const parts: Buffer[] = [header];
  for (const r of records) {
    if (r.vector.length !== dim) {
      throw new Error(`record ${r.id}: vector length ${r.vector.length} != dim ${dim}`);
    }
    const idBytes = Buffer.from(r.id, "utf-8");
    const labelBytes = Buffer.from(r.label ?? "", "utf-8");
    const head = Buffer.alloc(1 + 2 + idBytes.length + 2 + labelBytes.length);
    let pos = 0;
    head.writeUInt8(MODALITY_CODE[r.modality], pos); pos += 1;
    head.writeUInt16LE(idBytes.length, pos); pos += 2;
    idBytes.copy(head, pos); pos += idBytes.length;
    head.writeUInt16LE(labelBytes.length, pos); pos += 2;
    labelBytes.copy(head, pos);
    // Float32Array is platform-endian; all supported Node targets are LE.
    const vec = Buffer.from(r.vector.buffer, r.vector.byteOffset, dim * 4);
    parts.push(head, Buffer.from(vec));
  }
  return Buffer.concat(parts);
}

export function decodeStore(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  let pos = 0;
  const need = (n: number, what: string) => {
    if (pos + n > data.length) {
      throw new FormatError(`truncated while reading ${what}`, pos);
    }
  };
  need(4, "magic");
  if (!data.subarray(0, 4).equals(MAGIC)) {
    throw new FormatError("bad magic", 0);
  }
  pos = 4;
  need(2, "version");
  const version = data.readUInt16LE(pos);
  if (version !== FORMAT_VERSION) {
    throw new FormatError(`unsupported format version ${version}`, pos);
  }
  pos += 2;
  need(4, "dim");
  const dim = data.readUInt32LE(pos);
  pos += 4;
  need(8, "record count");
  const count = Number(data.readBigUInt64LE(pos));
  pos += 8;

  const records: EmbeddingRecord[] = [];
  for (let i = 0; i < count; i++) {
    need(1, "modality");
    const code = data.readUInt8(pos);
    const modality = CODE_MODALITY[code];
    if (modality === undefined) {
      throw new FormatError(`unknown modality code ${code}`, pos);
    }
    pos += 1;
    need(2, "id length");
    const idLen = data.readUInt16LE(pos);
    pos += 2;
    need(idLen, "id");
    const id = data.subarray(pos, pos + idLen).toString("utf-8");
    pos += idLen;
    need(2, "label length");
    const labelLen = data.readUInt16LE(pos);
    pos += 2;
    need(labelLen, "label");
    const label = labelLen ? data.subarray(pos, pos + labelLen).toString("utf-8") : undefined;
    pos += labelLen;
    need(dim * 4, "vector");
    const vector = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      vector[j] = data.readFloatLE(pos + j * 4);
    }
    pos += dim * 4;
    records.push({ id, modality, vector, label });
  }
  if (pos !== data.length) {
    throw new FormatError("trailing bytes after final record", pos);
  }
  return { dim, records };
}

export function l2Normalize(vector: Float32Array): Float32Array {
  let sum = 0;
  for (const v of vector) sum += v * v;
  const norm = Math.sqrt(sum);
  if (norm < 1e-12) {
    throw new Error("cannot normalize a zero vector");
  }
  const out = new Float32Array(vector.length);
  for (let i = 0; i < vector.length; i++) out[i] = vector[i] / norm;
  return out;
}
