/**
 * Batch extraction: manifest in, ATPE store plus JSON sidecar out.
 *
 * Entries that fail audio decoding are skipped and listed in the sidecar;
 * the run still writes a valid store but reports the skips so callers can
 * exit nonzero. Writes are atomic (temp file then rename) so a crashed run
 * never leaves a half-written store behind.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { EmbeddingRecord, encodeStore, l2Normalize } from "./atpe.js";
import { AudioDecodeError, EmbeddingBackend } from "./backend.js";
import { Manifest, ManifestEntry } from "./manifest.js";

export interface SkippedEntry {
  id: string;
  source: string;
  reason: string;
}

export interface ExtractResult {
  written: number;
  dim: number;
  skipped: SkippedEntry[];
}

function* batches<T>(items: T[], size: number): Generator<T[]> {
  for (let i = 0; i < items.length; i += size) {
    yield items.slice(i, i + size);
  }
}

async function embedBatch(
  backend: EmbeddingBackend,
  batch: ManifestEntry[],
  skipped: SkippedEntry[],
): Promise<EmbeddingRecord[]> {
  const records: EmbeddingRecord[] = [];
  for (const entry of batch) {
    try {
      const [vector] =
        entry.kind === "audio_path"
          ? await backend.embedAudio([entry.source])
          : await backend.embedText([entry.source]);
      records.push({
        id: entry.id,
        modality: entry.kind === "audio_path" ? "audio" : "text",
        vector: l2Normalize(vector),
        label: entry.label,
      });
    } catch (err) {
      if (err instanceof AudioDecodeError) {
        skipped.push({ id: entry.id, source: entry.source, reason: err.message });
      } else {
        throw err;
      }
    }
  }
  return records;
}

function writeAtomic(target: string, data: Buffer | string): void {
  const tmp = path.join(
    path.dirname(target),
    `.${path.basename(target)}.tmp-${process.pid}`,
  );
  fs.writeFileSync(tmp, data);
  fs.renameSync(tmp, target);
}

export async function extract(
  manifest: Manifest,
  backend: EmbeddingBackend,
  outPath: string,
  batchSize: number,
): Promise<ExtractResult> {
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${batchSize}`);
  }
  const skipped: SkippedEntry[] = [];
  const records: EmbeddingRecord[] = [];
  for (const batch of batches(manifest.entries, batchSize)) {
    records.push(...(await embedBatch(backend, batch, skipped)));
  }
  writeAtomic(outPath, encodeStore(backend.dim, records));
  const sidecar = {
    model_id: backend.modelId,
    checkpoint_hash: backend.checkpointHash,
    dim: backend.dim,
    records: records.length,
    skipped: [...skipped].sort((a, b) => a.id.localeCompare(b.id)),
  };
  writeAtomic(outPath + ".json", JSON.stringify(sidecar, null, 2) + "\n");
  return { written: records.length, dim: backend.dim, skipped };
}
