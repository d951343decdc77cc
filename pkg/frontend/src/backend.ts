/**
 * Embedding backends. The adapter is model-agnostic: anything implementing
 * EmbeddingBackend can sit behind `extract`. The built-in mock backend
 * produces deterministic unit vectors from the input content alone, which
 * is what the test suite runs against (real checkpoints are deployment
 * configuration, not part of this package).
 */

import * as fs from "node:fs";

export class ModelLoadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ModelLoadError";
  }
}

export class AudioDecodeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "AudioDecodeError";
  }
}

export interface EmbeddingBackend {
  readonly modelId: string;
  readonly checkpointHash: string;
  readonly dim: number;
  /** Embed audio files by path. Throws AudioDecodeError per bad file. */
  embedAudio(paths: string[]): Promise<Float32Array[]>;
  /** Embed text prompts. */
  embedText(texts: string[]): Promise<Float32Array[]>;
}

function fnv1a64(data: Buffer): bigint {
  let hash = 0xcbf29ce484222325n;
  for (const byte of data) {
    hash ^= BigInt(byte);
    hash = (hash * 0x100000001b3n) & 0xffffffffffffffffn;
  }
  return hash;
}

/** splitmix64: full-period 64-bit generator, one value per call. */
function splitmix64(state: bigint): () => bigint {
  let s = state & 0xffffffffffffffffn;
  return () => {
    s = (s + 0x9e3779b97f4a7c15n) & 0xffffffffffffffffn;
    let z = s;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & 0xffffffffffffffffn;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & 0xffffffffffffffffn;
    return z ^ (z >> 31n);
  };
}

export class MockBackend implements EmbeddingBackend {
  readonly checkpointHash: string;

  constructor(readonly modelId: string, readonly dim: number = 64) {
    this.checkpointHash = fnv1a64(Buffer.from(modelId, "utf-8")).toString(16);
  }

  private vectorFor(seedData: Buffer): Float32Array {
    const next = splitmix64(fnv1a64(seedData));
    const raw = new Float32Array(this.dim);
    let sum = 0;
    for (let i = 0; i < this.dim; i++) {
      // Map the top 53 bits to (-1, 1).
      raw[i] = Number(next() >> 11n) / 2 ** 52 - 1;
      sum += raw[i] * raw[i];
    }
    const norm = Math.sqrt(sum);
    for (let i = 0; i < this.dim; i++) raw[i] /= norm;
    return raw;
  }

  async embedAudio(paths: string[]): Promise<Float32Array[]> {
    return paths.map((path) => {
      let data: Buffer;
      try {
        data = fs.readFileSync(path);
      } catch {
        throw new AudioDecodeError(`cannot read audio file: ${path}`);
      }
      if (data.length < 12 || data.subarray(0, 4).toString("ascii") !== "RIFF") {
        throw new AudioDecodeError(`not a RIFF/WAV file: ${path}`);
      }
      return this.vectorFor(Buffer.concat([Buffer.from("audio:"), data]));
    });
  }

  async embedText(texts: string[]): Promise<Float32Array[]> {
    return texts.map((t) =>
      this.vectorFor(Buffer.from("text:" + t, "utf-8")),
    );
  }
}

/**
 * Resolve a model identifier to a backend. `mock:<dim>` (or plain `mock`)
 * is always available; anything else needs a real inference integration
 * and fails with ModelLoadError.
 */
export function loadBackend(modelId: string): EmbeddingBackend {
  if (modelId === "mock" || modelId.startsWith("mock:")) {
    const dimPart = modelId.includes(":") ? modelId.split(":")[1] : "64";
    const dim = Number(dimPart);
    if (!Number.isInteger(dim) || dim < 1) {
      throw new ModelLoadError(`bad mock dim in model id: ${modelId}`);
    }
    return new MockBackend(modelId, dim);
  }
  throw new ModelLoadError(
    `no inference integration for model '${modelId}'; ` +
      "wire an EmbeddingBackend for it or use mock:<dim>",
  );
}
