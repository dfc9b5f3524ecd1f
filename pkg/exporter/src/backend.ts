// Embedding backends. The real backend drives CLIP checkpoints through
// transformers.js; the stub backend produces deterministic pseudo-features
// so the full export pipeline can be exercised without checkpoints.

import fs from 'node:fs'
import path from 'node:path'
import { hashString, makeRng, normal } from './rng'
import type { Sample } from './dataset'

export interface ModelSpec {
  name: string
  featureDim: number
  temperature: number
  checkpoint?: string // local checkpoint directory for the clip backend
}

export const CLIP_VARIANTS: ModelSpec[] = [
  { name: 'CLIP-RN50', featureDim: 1024, temperature: 0.01 },
  { name: 'CLIP-RN101', featureDim: 512, temperature: 0.01 },
  { name: 'CLIP-ViT-B/32', featureDim: 512, temperature: 0.01 },
  { name: 'CLIP-ViT-B/16', featureDim: 512, temperature: 0.01 },
]

export const PROMPT_TEMPLATE = 'a photo of a {class}'

export interface Backend {
  imageFeatures(model: ModelSpec, samples: Sample[]): Promise<Float32Array>
  textEmbeddings(model: ModelSpec, classNames: string[]): Promise<Float32Array>
}

function fillVector(out: Float32Array, offset: number, dim: number, key: string): void {
  const rng = makeRng(hashString(key))
  for (let d = 0; d < dim; d++) out[offset + d] = normal(rng)
}

// Deterministic features: each (model, id) pair hashes to a vector that is
// pulled toward its class's text direction, so stub exports have non-trivial
// per-model accuracy.
export class StubBackend implements Backend {
  async imageFeatures(model: ModelSpec, samples: Sample[]): Promise<Float32Array> {
    const dim = model.featureDim
    const out = new Float32Array(samples.length * dim)
    const classDir = new Float32Array(dim)
    for (let i = 0; i < samples.length; i++) {
      fillVector(out, i * dim, dim, `${model.name}|img|${samples[i].id}`)
      fillVector(classDir, 0, dim, `${model.name}|txt|${samples[i].label}`)
      for (let d = 0; d < dim; d++) out[i * dim + d] = 0.6 * out[i * dim + d] + classDir[d]
    }
    return out
  }

  async textEmbeddings(model: ModelSpec, classNames: string[]): Promise<Float32Array> {
    const dim = model.featureDim
    const out = new Float32Array(classNames.length * dim)
    for (let c = 0; c < classNames.length; c++) {
      // keyed by class position so image features can point at the same direction
      fillVector(out, c * dim, dim, `${model.name}|txt|${c}`)
    }
    return out
  }
}

// transformers.js-backed CLIP. Requires the optional @xenova/transformers
// package and locally downloaded checkpoints; both absences produce
// actionable messages rather than silent fallbacks.
export class ClipBackend implements Backend {
  private async pipelineModule(): Promise<any> {
    try {
      // optional dependency, resolved at runtime only
      return await import('@xenova/transformers' as string)
    } catch {
      throw new Error(
        'the clip backend needs the optional dependency @xenova/transformers;\n' +
        'run `npm install @xenova/transformers` inside exporter/ and retry')
    }
  }

  private checkpointDir(model: ModelSpec): string {
    const dir = model.checkpoint ?? ''
    if (!dir || !fs.existsSync(dir)) {
      throw new Error(
        `checkpoint for ${model.name} not found` + (dir ? ` at ${dir}` : '') +
        ';\ndownload the checkpoint locally and pass --checkpoint-root <dir> ' +
        'with one subdirectory per model name')
    }
    return dir
  }

  async imageFeatures(model: ModelSpec, samples: Sample[]): Promise<Float32Array> {
    const dir = this.checkpointDir(model)
    const { pipeline } = await this.pipelineModule()
    const extractor = await pipeline('image-feature-extraction', dir, { local_files_only: true })
    const out = new Float32Array(samples.length * model.featureDim)
    for (let i = 0; i < samples.length; i++) {
      const image = samples[i].image
      if (!image || !fs.existsSync(image)) {
        throw new Error(`image file missing for sample ${samples[i].id}: ${image ?? '(none)'}`)
      }
      const res = await extractor(path.resolve(image))
      out.set(res.data as Float32Array, i * model.featureDim)
    }
    return out
  }

  async textEmbeddings(model: ModelSpec, classNames: string[]): Promise<Float32Array> {
    const dir = this.checkpointDir(model)
    const { pipeline } = await this.pipelineModule()
    const extractor = await pipeline('feature-extraction', dir, { local_files_only: true })
    const out = new Float32Array(classNames.length * model.featureDim)
    for (let c = 0; c < classNames.length; c++) {
      const prompt = PROMPT_TEMPLATE.replace('{class}', classNames[c])
      const res = await extractor(prompt, { pooling: 'mean', normalize: false })
      out.set(res.data as Float32Array, c * model.featureDim)
    }
    return out
  }
}

export function makeBackend(name: string): Backend {
  if (name === 'stub') return new StubBackend()
  if (name === 'clip') return new ClipBackend()
  throw new Error(`unknown backend '${name}' (expected stub | clip)`)
}
