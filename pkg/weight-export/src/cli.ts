#!/usr/bin/env node
/**
 * One-shot tooling: convert pretrained VGG16 weights into a DWSDW1
 * archive, and emit golden feature fixtures from the reference forward
 * pass for validating the scoring engine's inference core.
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { readArchiveFile, writeArchiveFile } from './archive.js';
import { convertModel } from './convert.js';
import { emitFixtures } from './fixtures.js';

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .command(
      'export-weights',
      'Convert a tfjs layers-format VGG16 model into a DWSDW1 archive',
      (cmd) =>
        cmd
          .option('source', {
            type: 'string',
            demandOption: true,
            describe: 'Model directory, model.json path, or http(s) URL',
          })
          .option('out', {
            type: 'string',
            demandOption: true,
            describe: 'Output archive path',
          }),
      async (argv) => {
        const archive = await convertModel(argv.source);
        writeArchiveFile(argv.out, archive);
        console.log(`wrote ${archive.size} tensors -> ${argv.out}`);
      },
    )
    .command(
      'emit-fixtures',
      'Write a seeded input tensor and the five expected stage tensors',
      (cmd) =>
        cmd
          .option('weights', {
            type: 'string',
            demandOption: true,
            describe: 'DWSDW1 archive to run the reference forward pass with',
          })
          .option('out', {
            type: 'string',
            demandOption: true,
            describe: 'Fixture output directory',
          })
          .option('seed', { type: 'number', default: 11 })
          .option('size', { type: 'number', default: 64 }),
      async (argv) => {
        const archive = readArchiveFile(argv.weights);
        const written = emitFixtures(archive, argv.out, argv.seed, argv.size);
        for (const path of written) {
          console.log(path);
        }
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(err?.message ?? msg);
      process.exit(1);
    })
    .parseAsync();
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : String(err));
  process.exit(1);
});
