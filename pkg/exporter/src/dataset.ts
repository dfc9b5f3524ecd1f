// Local dataset descriptions. A dataset is a JSON file:
//   { "dataset_name": str, "class_names": [str], "samples": [{ "id": str,
//     "label": int, "image"?: path }] }
// plus split selection (full test set, per-seed 16-shot base training split,
// base test, new test, or a named domain variant which is just another
// dataset file sharing the class list).

import fs from 'node:fs'
import { makeRng, shuffled } from './rng'

export interface Sample {
  id: string
  label: number
  image?: string
}

export interface Dataset {
  dataset_name: string
  class_names: string[]
  samples: Sample[]
}

export type Split =
  | { kind: 'full-test' }
  | { kind: 'base-train-16shot'; seed: number; shots?: number }
  | { kind: 'base-test' }
  | { kind: 'new-test' }

export function loadDataset(path: string): Dataset {
  if (!fs.existsSync(path)) {
    throw new Error(
      `dataset description not found: ${path}\n` +
      `Provide a JSON file with dataset_name, class_names and samples[].`)
  }
  const doc = JSON.parse(fs.readFileSync(path, 'utf-8')) as Dataset
  if (!doc.dataset_name || !Array.isArray(doc.class_names) || !Array.isArray(doc.samples)) {
    throw new Error(`dataset file ${path} is missing dataset_name, class_names or samples`)
  }
  const k = doc.class_names.length
  for (const s of doc.samples) {
    if (!Number.isInteger(s.label) || s.label < 0 || s.label >= k) {
      throw new Error(`dataset file ${path}: sample ${s.id} has label ${s.label} outside [0, ${k})`)
    }
  }
  return doc
}

export function baseClassCount(k: number): number {
  return Math.ceil(k / 2)
}

export function parseSplit(text: string): Split {
  if (text === 'full-test') return { kind: 'full-test' }
  if (text === 'base-test') return { kind: 'base-test' }
  if (text === 'new-test') return { kind: 'new-test' }
  const m = /^base-train-16shot$/.exec(text)
  if (m) return { kind: 'base-train-16shot', seed: 1 }
  throw new Error(`unknown split '${text}' (expected full-test | base-train-16shot | base-test | new-test)`)
}

export interface SplitResult {
  classNames: string[]
  samples: Sample[]
  // labels remapped to the split's class space (new-test re-indexes from 0)
  labels: number[]
}

export function applySplit(ds: Dataset, split: Split, seed: number, shots = 16): SplitResult {
  const k = ds.class_names.length
  const nBase = baseClassCount(k)
  if (split.kind === 'full-test') {
    return { classNames: ds.class_names, samples: ds.samples, labels: ds.samples.map(s => s.label) }
  }
  if (split.kind === 'base-test') {
    const samples = ds.samples.filter(s => s.label < nBase)
    return { classNames: ds.class_names.slice(0, nBase), samples, labels: samples.map(s => s.label) }
  }
  if (split.kind === 'new-test') {
    const samples = ds.samples.filter(s => s.label >= nBase)
    return {
      classNames: ds.class_names.slice(nBase),
      samples,
      labels: samples.map(s => s.label - nBase),
    }
  }
  // base-train-16shot: per base class, a seeded draw of min(shots, count)
  const chosen: Sample[] = []
  for (let cls = 0; cls < nBase; cls++) {
    const pool = ds.samples.filter(s => s.label === cls)
    if (pool.length === 0) continue
    const rng = makeRng(seed * 1000003 + cls)
    chosen.push(...shuffled(pool, rng).slice(0, Math.min(shots, pool.length)))
  }
  return { classNames: ds.class_names.slice(0, nBase), samples: chosen, labels: chosen.map(s => s.label) }
}
