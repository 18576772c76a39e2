/**
 * Minimal dependency-free PNG encoder (8-bit grayscale and RGB).
 *
 * Masks must hit the wire at exactly the image's intrinsic dimensions, with
 * no canvas or devicePixelRatio in the loop, so rasterized bytes are encoded
 * directly. The zlib stream uses stored (uncompressed) deflate blocks: valid
 * everywhere, byte-deterministic, and plenty small for mask payloads.
 */

const PNG_SIGNATURE = new Uint8Array([137, 80, 78, 71, 13, 10, 26, 10]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(...parts: Uint8Array[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(data: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < data.length; i++) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(value: number): Uint8Array {
  return new Uint8Array([(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff]);
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const typeBytes = new TextEncoder().encode(type);
  const out = new Uint8Array(12 + data.length);
  out.set(u32be(data.length), 0);
  out.set(typeBytes, 4);
  out.set(data, 8);
  out.set(u32be(crc32(typeBytes, data)), 8 + data.length);
  return out;
}

/** zlib stream made of stored deflate blocks. */
function zlibStored(data: Uint8Array): Uint8Array {
  const blocks: Uint8Array[] = [new Uint8Array([0x78, 0x01])];
  const max = 65535;
  for (let off = 0; off < data.length || off === 0; off += max) {
    const part = data.subarray(off, Math.min(off + max, data.length));
    const last = off + max >= data.length ? 1 : 0;
    const header = new Uint8Array([
      last,
      part.length & 0xff,
      (part.length >>> 8) & 0xff,
      ~part.length & 0xff,
      (~part.length >>> 8) & 0xff,
    ]);
    blocks.push(header, part);
    if (data.length === 0) break;
  }
  blocks.push(u32be(adler32(data)));
  const total = blocks.reduce((n, b) => n + b.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const b of blocks) {
    out.set(b, pos);
    pos += b.length;
  }
  return out;
}

function encode(width: number, height: number, pixels: Uint8Array, channels: 1 | 3): Uint8Array {
  if (width < 1 || height < 1) {
    throw new Error(`bad dimensions ${width}x${height}`);
  }
  if (pixels.length !== width * height * channels) {
    throw new Error(`pixel buffer is ${pixels.length} bytes, expected ${width * height * channels}`);
  }
  const stride = width * channels;
  const raw = new Uint8Array((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter: None
    raw.set(pixels.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const ihdr = new Uint8Array(13);
  ihdr.set(u32be(width), 0);
  ihdr.set(u32be(height), 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = channels === 1 ? 0 : 2; // grayscale | truecolor
  const parts = [
    PNG_SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    out.set(p, pos);
    pos += p.length;
  }
  return out;
}

export function encodeGrayPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  return encode(width, height, pixels, 1);
}

export function encodeRgbPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  return encode(width, height, pixels, 3);
}
