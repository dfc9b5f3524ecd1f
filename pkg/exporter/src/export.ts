// Export jobs: compute features, text embeddings and labels for a dataset
// split and write VET1 tensors plus the manifest the ensemble kit consumes.

import fs from 'node:fs'
import path from 'node:path'
import { applySplit, loadDataset, parseSplit, Split } from './dataset'
import { Backend, ModelSpec, CLIP_VARIANTS } from './backend'
import { encodeTensor, decodeTensor } from './vet'

export interface ExportJob {
  datasetFile: string
  split: Split
  seed: number
  models: ModelSpec[]
  outDir: string
}

interface ManifestModel {
  name: string
  feature_dim: number
  probs_file?: string
  features_file?: string
  class_embeddings_file?: string
  temperature?: number
}

interface Manifest {
  dataset_name: string
  num_classes: number
  class_names: string[]
  labels_file: string
  anchor_index: number
  models: ManifestModel[]
}

function slug(name: string): string {
  return name.toLowerCase().replace(/[^a-z0-9]+/g, '_')
}

function writeFileDeterministic(p: string, buf: Buffer | string): void {
  fs.mkdirSync(path.dirname(p), { recursive: true })
  fs.writeFileSync(p, buf)
}

// The strongest variant anchors the ensemble.
export function anchorIndex(models: ModelSpec[]): number {
  const i = models.findIndex(m => m.name === 'CLIP-ViT-B/16')
  return i >= 0 ? i : models.length - 1
}

export async function exportJob(job: ExportJob, backend: Backend): Promise<string> {
  const ds = loadDataset(job.datasetFile)
  const split = applySplit(ds, job.split, job.seed)
  if (split.samples.length === 0) throw new Error(`split produced no samples for ${ds.dataset_name}`)
  if (split.classNames.length < 2) throw new Error('split has fewer than 2 classes')

  const n = split.samples.length
  const labels = new Float32Array(split.labels)
  writeFileDeterministic(path.join(job.outDir, 'labels.vet'), encodeTensor([n], labels))

  const models: ManifestModel[] = []
  for (const model of job.models) {
    const feats = await backend.imageFeatures(model, split.samples)
    const emb = await backend.textEmbeddings(model, split.classNames)
    const base = slug(model.name)
    const featsFile = `${base}_features.vet`
    const embFile = `${base}_class_embeddings.vet`
    writeFileDeterministic(path.join(job.outDir, featsFile),
      encodeTensor([n, model.featureDim], feats))
    writeFileDeterministic(path.join(job.outDir, embFile),
      encodeTensor([split.classNames.length, model.featureDim], emb))
    models.push({
      name: model.name,
      feature_dim: model.featureDim,
      features_file: featsFile,
      class_embeddings_file: embFile,
      temperature: model.temperature,
    })
  }

  const manifest: Manifest = {
    dataset_name: ds.dataset_name,
    num_classes: split.classNames.length,
    class_names: split.classNames,
    labels_file: 'labels.vet',
    anchor_index: anchorIndex(job.models),
    models,
  }
  const manifestPath = path.join(job.outDir, 'manifest.json')
  writeFileDeterministic(manifestPath, JSON.stringify(manifest, null, 2) + '\n')
  return manifestPath
}

export interface BaselineProbsJob {
  datasetFile: string
  split: Split
  seed: number
  // per backbone: model name -> JSON file holding { class_names: [...], probs: number[][] }
  probFiles: { name: string; file: string }[]
  anchorName: string
  outDir: string
}

// Bridge externally produced per-sample probability matrices (prompt-learning
// baselines run per CLIP backbone) into a probs-source manifest.
export async function exportBaselineProbs(job: BaselineProbsJob): Promise<string> {
  const ds = loadDataset(job.datasetFile)
  const split = applySplit(ds, job.split, job.seed)
  const k = split.classNames.length
  const n = split.samples.length

  writeFileDeterministic(path.join(job.outDir, 'labels.vet'),
    encodeTensor([n], new Float32Array(split.labels)))

  const models: ManifestModel[] = []
  for (const { name, file } of job.probFiles) {
    if (!fs.existsSync(file)) throw new Error(`probability file missing for ${name}: ${file}`)
    const doc = JSON.parse(fs.readFileSync(file, 'utf-8')) as { class_names: string[]; probs: number[][] }
    if (doc.class_names.length !== k ||
        doc.class_names.some((c, i) => c !== split.classNames[i])) {
      throw new Error(`class order in ${file} does not match the dataset split`)
    }
    if (doc.probs.length !== n || doc.probs.some(row => row.length !== k)) {
      throw new Error(`probability matrix in ${file} is not ${n}x${k}`)
    }
    const flat = new Float32Array(n * k)
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < k; j++) flat[i * k + j] = doc.probs[i][j]
    }
    const fileName = `${slug(name)}_probs.vet`
    writeFileDeterministic(path.join(job.outDir, fileName), encodeTensor([n, k], flat))
    models.push({ name, feature_dim: 0, probs_file: fileName })
  }

  let anchor = models.findIndex(m => m.name === job.anchorName)
  if (anchor < 0) anchor = models.length - 1
  const manifest: Manifest = {
    dataset_name: ds.dataset_name,
    num_classes: k,
    class_names: split.classNames,
    labels_file: 'labels.vet',
    anchor_index: anchor,
    models,
  }
  const manifestPath = path.join(job.outDir, 'manifest.json')
  writeFileDeterministic(manifestPath, JSON.stringify(manifest, null, 2) + '\n')
  return manifestPath
}

export { parseSplit, CLIP_VARIANTS, encodeTensor, decodeTensor }
