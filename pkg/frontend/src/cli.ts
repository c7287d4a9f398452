#!/usr/bin/env node
import { realpathSync } from "node:fs";
import { fileURLToPath } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { runCurves } from "./curves.js";
import { runLandscape } from "./landscape.js";

export async function main(argv: string[]): Promise<number> {
  let failed = false;
  const parser = yargs(argv)
    .scriptName("plots")
    .command(
      "curves",
      "learning curves with mean line and std band per label",
      (y) =>
        y
          .option("spec", {
            type: "string",
            demandOption: true,
            describe: "JSON figure description",
          })
          .option("out", {
            type: "string",
            describe: "output SVG path (overrides the spec's own)",
          }),
      (args) => {
        const out = runCurves(args.spec, args.out);
        console.log(`wrote ${out}`);
      },
    )
    .command(
      "landscape",
      "critic slice and gradient magnitude panels",
      (y) =>
        y
          .option("csv", {
            type: "string",
            demandOption: true,
            describe: "landscape CSV from the training harness",
          })
          .option("out", { type: "string", demandOption: true, describe: "output SVG path" }),
      (args) => {
        const out = runLandscape(args.csv, args.out);
        console.log(`wrote ${out}`);
      },
    )
    .demandCommand(1, "pick a command: curves or landscape")
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      console.error(msg ?? (err ? err.message : "unknown error"));
      failed = true;
    });
  try {
    await parser.parseAsync();
  } catch (err) {
    console.error((err as Error).message);
    failed = true;
  }
  return failed ? 1 : 0;
}

function invokedDirectly(): boolean {
  if (!process.argv[1]) return false;
  try {
    // realpath so the npm bin symlink still counts as "this file"
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
