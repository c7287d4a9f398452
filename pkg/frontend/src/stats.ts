/** Pointwise curve statistics. No smoothing anywhere: figures reflect logs. */

export interface Series {
  x: number[];
  y: number[];
}

/** True when every series carries exactly the same x grid. */
export function sameGrid(series: Series[]): boolean {
  const first = series[0].x;
  return series.every(
    (s) => s.x.length === first.length && s.x.every((v, i) => v === first[i]),
  );
}

/** Sorted union of all x values across the series. */
export function unionGrid(series: Series[]): number[] {
  const seen = new Set<number>();
  for (const s of series) for (const v of s.x) seen.add(v);
  return [...seen].sort((a, b) => a - b);
}

/**
 * Linear interpolation of one series onto a grid. Outside the series' own
 * range the nearest endpoint is held, which keeps seed counts constant at
 * every grid point instead of shrinking the band near the edges.
 */
export function resample(series: Series, grid: number[]): number[] {
  const { x, y } = series;
  return grid.map((g) => {
    if (g <= x[0]) return y[0];
    if (g >= x[x.length - 1]) return y[y.length - 1];
    // x is an increasing log axis; a linear scan is fine at these sizes
    let hi = 1;
    while (x[hi] < g) hi++;
    const lo = hi - 1;
    if (x[hi] === g) return y[hi];
    const t = (g - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
  });
}

/**
 * Align per-seed series for pointwise statistics. Shared grids pass through
 * untouched; mismatched ones are resampled onto the union grid.
 */
export function alignSeries(series: Series[]): { grid: number[]; ys: number[][] } {
  if (series.length === 0) throw new Error("need at least one series");
  for (const s of series) {
    if (s.x.length !== s.y.length) throw new Error("x/y length mismatch");
    if (s.x.length === 0) throw new Error("empty series");
    for (let i = 1; i < s.x.length; i++) {
      if (!(s.x[i] > s.x[i - 1])) throw new Error("x grid must be increasing");
    }
  }
  if (sameGrid(series)) {
    return { grid: [...series[0].x], ys: series.map((s) => [...s.y]) };
  }
  const grid = unionGrid(series);
  return { grid, ys: series.map((s) => resample(s, grid)) };
}

/** Pointwise mean and population standard deviation across seeds. */
export function meanStd(ys: number[][]): { mean: number[]; std: number[] } {
  const n = ys.length;
  const len = ys[0].length;
  const mean = new Array<number>(len);
  const std = new Array<number>(len);
  for (let i = 0; i < len; i++) {
    let s = 0;
    for (const y of ys) s += y[i];
    const m = s / n;
    let v = 0;
    for (const y of ys) v += (y[i] - m) ** 2;
    mean[i] = m;
    std[i] = Math.sqrt(v / n);
  }
  return { mean, std };
}
