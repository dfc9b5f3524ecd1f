// Binary tensor format shared with the ensemble kit ("VET1").
// Layout: 4-byte ASCII magic, dtype code byte (0x01 = float32 LE),
// ndim byte (1..4), two zero bytes, ndim u64 LE dims, row-major payload.

const MAGIC = 'VET1'
const DTYPE_F32 = 0x01
const MAX_NDIM = 4

export class TensorFormatError extends Error {}

export function encodeTensor(shape: number[], data: Float32Array): Buffer {
  if (shape.length < 1 || shape.length > MAX_NDIM) {
    throw new TensorFormatError(`ndim must be 1..${MAX_NDIM}, got ${shape.length}`)
  }
  if (shape.some(s => !Number.isInteger(s) || s <= 0)) {
    throw new TensorFormatError(`empty or invalid shape [${shape}]`)
  }
  const n = shape.reduce((a, b) => a * b, 1)
  if (data.length !== n) {
    throw new TensorFormatError(`shape [${shape}] requires ${n} values, got ${data.length}`)
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) throw new TensorFormatError(`non-finite value at index ${i}`)
  }
  const header = Buffer.alloc(8 + 8 * shape.length)
  header.write(MAGIC, 0, 'ascii')
  header.writeUInt8(DTYPE_F32, 4)
  header.writeUInt8(shape.length, 5)
  for (let i = 0; i < shape.length; i++) {
    header.writeBigUInt64LE(BigInt(shape[i]), 8 + 8 * i)
  }
  const payload = Buffer.alloc(4 * n)
  for (let i = 0; i < n; i++) payload.writeFloatLE(data[i], 4 * i)
  return Buffer.concat([header, payload])
}

export function decodeTensor(buf: Buffer): { shape: number[]; data: Float32Array } {
  if (buf.length < 8 || buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new TensorFormatError('bad magic')
  }
  const dtype = buf.readUInt8(4)
  if (dtype !== DTYPE_F32) throw new TensorFormatError(`unsupported dtype code 0x${dtype.toString(16)}`)
  const ndim = buf.readUInt8(5)
  if (ndim < 1 || ndim > MAX_NDIM) throw new TensorFormatError(`unsupported ndim ${ndim}`)
  const dimsEnd = 8 + 8 * ndim
  if (buf.length < dimsEnd) throw new TensorFormatError('truncated payload (header cut short)')
  const shape: number[] = []
  for (let i = 0; i < ndim; i++) shape.push(Number(buf.readBigUInt64LE(8 + 8 * i)))
  const n = shape.reduce((a, b) => a * b, 1)
  if (buf.length < dimsEnd + 4 * n) {
    throw new TensorFormatError(`truncated payload (expected ${4 * n} bytes, got ${buf.length - dimsEnd})`)
  }
  const data = new Float32Array(n)
  for (let i = 0; i < n; i++) data[i] = buf.readFloatLE(dimsEnd + 4 * i)
  return { shape, data }
}
