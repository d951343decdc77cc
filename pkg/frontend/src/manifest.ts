/**
 * Extraction manifest: which audio files and text prompts to embed.
 * Validation is complete before any model is loaded, so a bad manifest
 * never pays the model startup cost.
 */

import * as fs from "node:fs";
import { z } from "zod";

const entrySchema = z
  .object({
    id: z.string().min(1),
    kind: z.enum(["audio_path", "text_prompt"]),
    source: z.string().min(1),
    label: z.string().optional(),
  })
  .strict();

const manifestSchema = z.object({ entries: z.array(entrySchema) }).strict();

export type ManifestEntry = z.infer<typeof entrySchema>;
export type Manifest = z.infer<typeof manifestSchema>;

export class ManifestError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ManifestError";
  }
}

export function parseManifest(document: unknown): Manifest {
  const result = manifestSchema.safeParse(document);
  if (!result.success) {
    throw new ManifestError(
      "invalid manifest: " +
        result.error.issues.map((i) => `${i.path.join(".")}: ${i.message}`).join("; "),
    );
  }
  const manifest = result.data;
  const seen = new Set<string>();
  const duplicates = new Set<string>();
  for (const entry of manifest.entries) {
    if (seen.has(entry.id)) duplicates.add(entry.id);
    seen.add(entry.id);
  }
  if (duplicates.size) {
    throw new ManifestError(
      `duplicate ids: ${[...duplicates].sort().join(", ")}`,
    );
  }
  return manifest;
}

export function loadManifest(path: string): Manifest {
  return parseManifest(JSON.parse(fs.readFileSync(path, "utf-8")));
}
