import { describe, expect, it } from 'vitest'
import { decodeTensor, encodeTensor, TensorFormatError } from '../src/vet'

describe('VET1 encoding', () => {
  it('round-trips bit-exactly', () => {
    const data = new Float32Array([1.5, -2.25, 3.125, 0.0078125, 1e-30, 12345.678])
    const buf = encodeTensor([2, 3], data)
    const out = decodeTensor(buf)
    expect(out.shape).toEqual([2, 3])
    expect(Buffer.from(out.data.buffer)).toEqual(Buffer.from(data.buffer))
  })

  it('writes the documented byte layout', () => {
    const buf = encodeTensor([2, 2], new Float32Array([1, 2, 3, 4]))
    expect(buf.length).toBe(40) // 8 header + 2*8 dims + 4*4 payload
    expect(buf.toString('ascii', 0, 4)).toBe('VET1')
    expect(buf.readUInt8(4)).toBe(0x01)
    expect(buf.readUInt8(5)).toBe(2)
    expect(buf.readUInt8(6)).toBe(0)
    expect(buf.readUInt8(7)).toBe(0)
    expect(Number(buf.readBigUInt64LE(8))).toBe(2)
    expect(Number(buf.readBigUInt64LE(16))).toBe(2)
    expect(buf.readFloatLE(24)).toBe(1)
    expect(buf.readFloatLE(36)).toBe(4)
  })

  it('rejects empty shapes and mismatched data', () => {
    expect(() => encodeTensor([0], new Float32Array(0))).toThrow(TensorFormatError)
    expect(() => encodeTensor([3, 2], new Float32Array(5))).toThrow(/requires 6/)
    expect(() => encodeTensor([1], new Float32Array([NaN]))).toThrow(/non-finite/)
  })

  it('reports distinct decode failures', () => {
    const good = encodeTensor([4], new Float32Array([1, 2, 3, 4]))
    const badMagic = Buffer.from(good)
    badMagic.write('XXXX', 0, 'ascii')
    expect(() => decodeTensor(badMagic)).toThrow(/bad magic/)

    const badDtype = Buffer.from(good)
    badDtype.writeUInt8(0x55, 4)
    expect(() => decodeTensor(badDtype)).toThrow(/dtype/)

    expect(() => decodeTensor(good.subarray(0, good.length - 3))).toThrow(/truncated/)
  })
})
