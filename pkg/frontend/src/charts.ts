/**
 * SVG density charts drawn from server-provided grids.
 *
 * The chart code never computes statistics: it only scales the {x, pdf}
 * arrays the service returns into an SVG polyline, so every client renders
 * exactly the curve the CLI would emit.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  cssClass: string;
}

const WIDTH = 560;
const HEIGHT = 240;
const PAD = 34;

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(hi > lo)) hi = lo + 1;
  return [lo, hi];
}

export function densityChart(series: Series[], title: string): SVGSVGElement {
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  svg.setAttribute('viewBox', `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute('class', 'density-chart');
  svg.setAttribute('role', 'img');
  svg.setAttribute('aria-label', title);

  const allX = series.flatMap((s) => s.x);
  const allY = series.flatMap((s) => s.y);
  if (allX.length === 0) return svg;
  const [xLo, xHi] = extent(allX);
  const [, yHi] = extent(allY);

  const sx = (v: number) => PAD + ((v - xLo) / (xHi - xLo)) * (WIDTH - 2 * PAD);
  const sy = (v: number) => HEIGHT - PAD - (v / yHi) * (HEIGHT - 2 * PAD);

  const axis = document.createElementNS(svg.namespaceURI, 'path');
  axis.setAttribute(
    'd',
    `M ${PAD} ${PAD} L ${PAD} ${HEIGHT - PAD} L ${WIDTH - PAD} ${HEIGHT - PAD}`,
  );
  axis.setAttribute('class', 'axis');
  axis.setAttribute('fill', 'none');
  axis.setAttribute('stroke', '#555');
  svg.appendChild(axis);

  for (const s of series) {
    const points = s.x.map((v, i) => `${sx(v).toFixed(2)},${sy(s.y[i] ?? 0).toFixed(2)}`);
    const line = document.createElementNS(svg.namespaceURI, 'polyline');
    line.setAttribute('points', points.join(' '));
    line.setAttribute('fill', 'none');
    line.setAttribute('class', `series ${s.cssClass}`);
    line.setAttribute('data-label', s.label);
    svg.appendChild(line);
  }

  const labels = document.createElementNS(svg.namespaceURI, 'text');
  labels.setAttribute('x', String(PAD));
  labels.setAttribute('y', '16');
  labels.setAttribute('class', 'chart-title');
  labels.textContent = `${title} — ${series.map((s) => s.label).join(' vs ')}`;
  svg.appendChild(labels);
  return svg;
}
