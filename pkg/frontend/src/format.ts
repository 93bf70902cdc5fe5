/** Display formatting; numbers pass through untouched otherwise. */

export function fmt(value: number, digits = 4): string {
  if (!Number.isFinite(value)) return String(value);
  const abs = Math.abs(value);
  if (abs !== 0 && (abs >= 10_000 || abs < 0.001)) return value.toExponential(digits - 1);
  return value.toFixed(digits).replace(/(\.\d*?)0+$/, '$1').replace(/\.$/, '');
}

export function fmtInterval(interval: [number, number], digits = 3): string {
  return `(${fmt(interval[0], digits)}, ${fmt(interval[1], digits)})`;
}

export function parseProbability(text: string): number | null {
  const v = Number(text);
  if (!Number.isFinite(v) || v <= 0 || v >= 1) return null;
  return v;
}
