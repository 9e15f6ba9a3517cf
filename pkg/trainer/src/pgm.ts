/** Binary PGM (P5) read/write for grayscale images and class-ID masks.
 *
 * Header layout matches the engine's mask files: `P5\n{width} {height}\n255\n`
 * followed by row-major uint8 samples. `#` comments in the header are
 * accepted when reading.
 */

import * as fs from "node:fs";

export interface Image {
  data: Uint8Array;
  height: number;
  width: number;
}

export function writePgm(path: string, image: Image): void {
  const { data, height, width } = image;
  if (data.length !== height * width) {
    throw new Error(
      `pixel count ${data.length} does not match ${width}x${height}`
    );
  }
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, "ascii");
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(data)]));
}

export function readPgm(path: string): Image {
  const raw = fs.readFileSync(path);
  if (raw.length < 2 || raw[0] !== 0x50 || raw[1] !== 0x35) {
    throw new Error(`${path}: not a binary PGM (P5) file`);
  }
  // tokenize the header: magic, width, height, maxval; '#' starts a comment
  const tokens: string[] = [];
  let offset = 0;
  while (tokens.length < 4 && offset < raw.length) {
    let byte = raw[offset];
    if (byte === 0x23) {
      while (offset < raw.length && raw[offset] !== 0x0a) offset++;
      offset++;
      continue;
    }
    if (byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d) {
      offset++;
      continue;
    }
    let start = offset;
    while (offset < raw.length) {
      byte = raw[offset];
      if (
        byte === 0x20 ||
        byte === 0x09 ||
        byte === 0x0a ||
        byte === 0x0d ||
        byte === 0x23
      ) {
        break;
      }
      offset++;
    }
    tokens.push(raw.subarray(start, offset).toString("ascii"));
  }
  if (tokens.length < 4) throw new Error(`${path}: truncated PGM header`);
  const [magic, widthText, heightText, maxvalText] = tokens;
  if (magic !== "P5") throw new Error(`${path}: unsupported PGM magic ${magic}`);
  const width = Number(widthText);
  const height = Number(heightText);
  const maxval = Number(maxvalText);
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`${path}: bad PGM dimensions ${widthText}x${heightText}`);
  }
  if (maxval !== 255) throw new Error(`${path}: unsupported maxval ${maxval}`);
  offset++; // exactly one whitespace byte separates header and samples
  const expected = width * height;
  const body = raw.subarray(offset, offset + expected);
  if (body.length !== expected) {
    throw new Error(
      `${path}: expected ${expected} pixel bytes, found ${body.length}`
    );
  }
  return { data: new Uint8Array(body), height, width };
}
