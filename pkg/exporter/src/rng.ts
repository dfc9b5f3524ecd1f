// Deterministic PRNG (splitmix64 seeding + sfc32) so re-exports are
// byte-identical for the same inputs.

export function hashString(s: string): number {
  let h = 2166136261 >>> 0
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i)
    h = Math.imul(h, 16777619)
  }
  return h >>> 0
}

export type Rng = () => number // uniform in [0, 1)

export function makeRng(seed: number): Rng {
  let a = seed >>> 0
  let b = (seed ^ 0x9e3779b9) >>> 0
  let c = (seed ^ 0x85ebca6b) >>> 0
  let d = (seed ^ 0xc2b2ae35) >>> 0
  for (let i = 0; i < 12; i++) next() // scramble the seed words
  function next(): number {
    const t = (((a + b) >>> 0) + d) >>> 0
    d = (d + 1) >>> 0
    a = b ^ (b >>> 9)
    b = (c + (c << 3)) >>> 0
    c = ((c << 21) | (c >>> 11)) >>> 0
    c = (c + t) >>> 0
    return t / 4294967296
  }
  return next
}

// Marsaglia polar-free normal via Box-Muller on the deterministic stream.
export function normal(rng: Rng): number {
  let u = 0
  while (u === 0) u = rng()
  const v = rng()
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v)
}

export function shuffled<T>(items: T[], rng: Rng): T[] {
  const out = items.slice()
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1))
    ;[out[i], out[j]] = [out[j], out[i]]
  }
  return out
}
