// CLI: export VET1 tensors + manifests for the ensemble kit.
//
//   node dist/cli.js export --dataset data/pets.json --split full-test \
//     --models CLIP-RN50,CLIP-ViT-B/16 --backend stub --seed 1 --out out/pets
//   node dist/cli.js baseline-probs --dataset data/pets.json --split base-test \
//     --probs CoCoOp-RN50=rn50.json,CoCoOp-ViT-B/16=vit16.json \
//     --anchor CoCoOp-ViT-B/16 --out out/pets_cocoop

import { CLIP_VARIANTS, makeBackend, ModelSpec } from './backend'
import { parseSplit } from './dataset'
import { exportJob, exportBaselineProbs } from './export'

interface Args {
  [key: string]: string
}

function parseArgs(argv: string[]): { command: string; args: Args } {
  const command = argv[0]
  const args: Args = {}
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i]
    if (!flag.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad argument '${flag}' (flags take one value)`)
    }
    args[flag.slice(2)] = argv[i + 1]
  }
  return { command, args }
}

function selectModels(names: string | undefined, checkpointRoot?: string): ModelSpec[] {
  const wanted = names ? names.split(',') : CLIP_VARIANTS.map(m => m.name)
  return wanted.map(name => {
    const spec = CLIP_VARIANTS.find(m => m.name === name)
    if (!spec) {
      throw new Error(`unknown model '${name}' (known: ${CLIP_VARIANTS.map(m => m.name).join(', ')})`)
    }
    return checkpointRoot ? { ...spec, checkpoint: `${checkpointRoot}/${name}` } : spec
  })
}

export async function run(argv: string[]): Promise<number> {
  try {
    const { command, args } = parseArgs(argv)
    if (command === 'export') {
      for (const req of ['dataset', 'split', 'out']) {
        if (!args[req]) throw new Error(`export requires --${req}`)
      }
      const manifest = await exportJob({
        datasetFile: args.dataset,
        split: parseSplit(args.split),
        seed: Number(args.seed ?? '1'),
        models: selectModels(args.models, args['checkpoint-root']),
        outDir: args.out,
      }, makeBackend(args.backend ?? 'clip'))
      console.log(manifest)
      return 0
    }
    if (command === 'baseline-probs') {
      for (const req of ['dataset', 'split', 'probs', 'out']) {
        if (!args[req]) throw new Error(`baseline-probs requires --${req}`)
      }
      const probFiles = args.probs.split(',').map(pair => {
        const eq = pair.indexOf('=')
        if (eq < 0) throw new Error(`--probs entries must be name=file, got '${pair}'`)
        return { name: pair.slice(0, eq), file: pair.slice(eq + 1) }
      })
      const manifest = await exportBaselineProbs({
        datasetFile: args.dataset,
        split: parseSplit(args.split),
        seed: Number(args.seed ?? '1'),
        probFiles,
        anchorName: args.anchor ?? '',
        outDir: args.out,
      })
      console.log(manifest)
      return 0
    }
    throw new Error(`unknown command '${command}' (expected export | baseline-probs)`)
  } catch (err) {
    console.error(`error: ${(err as Error).message}`)
    return 2
  }
}

const isMain = process.argv[1]?.endsWith('cli.js') || process.argv[1]?.endsWith('cli.ts')
if (isMain) {
  run(process.argv.slice(2)).then(code => process.exit(code))
}
