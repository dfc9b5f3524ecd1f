import fs from 'node:fs'
import os from 'node:os'
import path from 'node:path'
import { describe, expect, it } from 'vitest'
import { applySplit, baseClassCount, loadDataset, parseSplit } from '../src/dataset'

function tmpDataset(k = 6, perClass = 20): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'vlme-ds-'))
  const samples = []
  for (let c = 0; c < k; c++) {
    for (let i = 0; i < perClass; i++) samples.push({ id: `s${c}_${i}`, label: c })
  }
  const file = path.join(dir, 'dataset.json')
  fs.writeFileSync(file, JSON.stringify({
    dataset_name: 'toy',
    class_names: Array.from({ length: k }, (_, c) => `class${c}`),
    samples,
  }))
  return file
}

describe('dataset splits', () => {
  it('splits classes with ceil(K/2) base classes', () => {
    expect(baseClassCount(4)).toBe(2)
    expect(baseClassCount(5)).toBe(3)
    expect(baseClassCount(1000)).toBe(500)
  })

  it('base-test and new-test partition the class space', () => {
    const ds = loadDataset(tmpDataset(5))
    const base = applySplit(ds, { kind: 'base-test' }, 1)
    const nw = applySplit(ds, { kind: 'new-test' }, 1)
    expect(base.classNames).toEqual(['class0', 'class1', 'class2'])
    expect(nw.classNames).toEqual(['class3', 'class4'])
    // new-test labels are re-indexed from 0
    expect(Math.min(...nw.labels)).toBe(0)
    expect(Math.max(...nw.labels)).toBe(1)
    expect(base.samples.length + nw.samples.length).toBe(ds.samples.length)
  })

  it('16-shot draw is per-class, deterministic, and clamps small classes', () => {
    const ds = loadDataset(tmpDataset(4, 20))
    const a = applySplit(ds, { kind: 'base-train-16shot', seed: 3 }, 3)
    const b = applySplit(ds, { kind: 'base-train-16shot', seed: 3 }, 3)
    expect(a.samples.map(s => s.id)).toEqual(b.samples.map(s => s.id))
    expect(a.samples.length).toBe(16 * 2)
    const c = applySplit(ds, { kind: 'base-train-16shot', seed: 4 }, 4)
    expect(c.samples.map(s => s.id)).not.toEqual(a.samples.map(s => s.id))

    const small = loadDataset(tmpDataset(4, 5))
    const d = applySplit(small, { kind: 'base-train-16shot', seed: 1 }, 1)
    expect(d.samples.length).toBe(5 * 2) // all samples of each base class
  })

  it('rejects unknown splits and bad labels', () => {
    expect(() => parseSplit('nope')).toThrow(/unknown split/)
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'vlme-ds-'))
    const file = path.join(dir, 'bad.json')
    fs.writeFileSync(file, JSON.stringify({
      dataset_name: 'bad', class_names: ['a', 'b'],
      samples: [{ id: 'x', label: 2 }],
    }))
    expect(() => loadDataset(file)).toThrow(/label 2/)
  })

  it('missing dataset file yields an actionable message', () => {
    expect(() => loadDataset('/nonexistent/ds.json')).toThrow(/dataset description not found/)
  })
})
