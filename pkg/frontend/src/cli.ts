#!/usr/bin/env node
/**
 * embed-adapter CLI.
 *
 *   extract --manifest PATH --model ID --out PATH --batch N
 *
 * The manifest is validated (including duplicate-id detection) before the
 * model is loaded. Exit codes: 0 clean, 1 any entry skipped or any error.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadBackend } from "./backend.js";
import { extract } from "./extract.js";
import { loadManifest } from "./manifest.js";

export async function runExtract(argv: {
  manifest: string;
  model: string;
  out: string;
  batch: number;
}): Promise<number> {
  const manifest = loadManifest(argv.manifest);
  const backend = loadBackend(argv.model);
  const result = await extract(manifest, backend, argv.out, argv.batch);
  process.stdout.write(
    JSON.stringify(
      { out: argv.out, written: result.written, dim: result.dim, skipped: result.skipped.length },
      null,
      2,
    ) + "\n",
  );
  return result.skipped.length ? 1 : 0;
}

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .command(
      "extract",
      "embed manifest entries and write an ATPE store",
      (y) =>
        y
          .option("manifest", { type: "string", demandOption: true, describe: "extraction manifest JSON" })
          .option("model", { type: "string", demandOption: true, describe: "model identifier (mock:<dim> built in)" })
          .option("out", { type: "string", demandOption: true, describe: "output .atpe path" })
          .option("batch", { type: "number", default: 16, describe: "inference batch size" }),
      async (argv) => {
        try {
          process.exitCode = await runExtract(argv);
        } catch (err) {
          const e = err as Error;
          process.stderr.write(JSON.stringify({ error: e.name, message: e.message }) + "\n");
          process.exitCode = 1;
        }
      },
    )
    .demandCommand(1)
    .strict()
    .help()
    .parseAsync();
}

main();
