import QRCode from "qrcode";

// The API sends the BIP21 URI as a plain string; the QR is rendered
// client-side so the backend stays pure data.

export interface QrMatrix {
  size: number;
  /** true = dark module */
  get(x: number, y: number): boolean;
}

export async function qrMatrix(text: string): Promise<QrMatrix> {
  const code = QRCode.create(text, { errorCorrectionLevel: "M" });
  const size = code.modules.size;
  const data = code.modules.data;
  return {
    size,
    get: (x: number, y: number) => data[y * size + x] === 1,
  };
}

/** Rasterize to RGBA for canvas-less consumers (tests, odd displays). */
export async function qrBitmap(
  text: string,
  scale = 4,
  quietZone = 4,
): Promise<{ width: number; height: number; rgba: Uint8ClampedArray }> {
  const matrix = await qrMatrix(text);
  const width = (matrix.size + quietZone * 2) * scale;
  const rgba = new Uint8ClampedArray(width * width * 4).fill(255);
  for (let y = 0; y < matrix.size; y++) {
    for (let x = 0; x < matrix.size; x++) {
      if (!matrix.get(x, y)) {
        continue;
      }
      for (let dy = 0; dy < scale; dy++) {
        for (let dx = 0; dx < scale; dx++) {
          const px = (x + quietZone) * scale + dx;
          const py = (y + quietZone) * scale + dy;
          const offset = (py * width + px) * 4;
          rgba[offset] = 0;
          rgba[offset + 1] = 0;
          rgba[offset + 2] = 0;
        }
      }
    }
  }
  return { width, height: width, rgba };
}

export async function renderQrCanvas(canvas: HTMLCanvasElement, text: string): Promise<void> {
  await QRCode.toCanvas(canvas, text, {
    errorCorrectionLevel: "M",
    margin: 2,
    width: 280,
  });
}
