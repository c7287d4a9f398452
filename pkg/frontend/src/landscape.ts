
import { numericColumn, readCsv, SchemaError } from "./csv.js";
import { PALETTE, renderSvg, writeSvg, type ChartOption, type LineSeries } from "./render.js";

/** Exact schema of the critic-slice export produced by the training harness. */
const LANDSCAPE_COLUMNS = ["a", "q", "abs_grad"];

export interface Landscape {
  a: number[];
  q: number[];
  absGrad: number[];
}

export function loadLandscape(path: string): Landscape {
  const table = readCsv(path);
  const got = [...table.columns].sort().join(",");
  const want = [...LANDSCAPE_COLUMNS].sort().join(",");
  if (got !== want) {
    throw new SchemaError(
      `${path}: expected columns ${LANDSCAPE_COLUMNS.join(",")}, got ${table.columns.join(",")}`,
    );
  }
  const a = numericColumn(table, "a", path);
  if (a.length === 0) throw new SchemaError(`${path}: no data rows`);
  return {
    a,
    q: numericColumn(table, "q", path),
    absGrad: numericColumn(table, "abs_grad", path),
  };
}

const pair = (xs: number[], ys: number[]) => xs.map((x, i) => [x, ys[i]]);

/** Two stacked panels on a shared action axis: the critic slice above, its
 * absolute action-gradient below. */
export function buildLandscapeOption(data: Landscape): ChartOption {
  return {
    grid: [
      { left: 80, right: 24, top: 32, height: "34%" },
      { left: 80, right: 24, bottom: 56, height: "34%" },
    ],
    xAxis: [
      { type: "value", gridIndex: 0, min: data.a[0], max: data.a[data.a.length - 1] },
      {
        type: "value",
        gridIndex: 1,
        min: data.a[0],
        max: data.a[data.a.length - 1],
        name: "a",
        nameLocation: "middle",
        nameGap: 30,
      },
    ],
    yAxis: [
      { type: "value", gridIndex: 0, name: "Q(s, a)", nameLocation: "middle", nameGap: 56 },
      { type: "value", gridIndex: 1, name: "|dQ/da|", nameLocation: "middle", nameGap: 56 },
    ],
    series: [
      {
        type: "line",
        xAxisIndex: 0,
        yAxisIndex: 0,
        data: pair(data.a, data.q),
        symbol: "none",
        lineStyle: { color: PALETTE[0], width: 2 },
      },
      {
        type: "line",
        xAxisIndex: 1,
        yAxisIndex: 1,
        data: pair(data.a, data.absGrad),
        symbol: "none",
        lineStyle: { color: PALETTE[1], width: 2 },
      },
    ],
  };
}

/** End-to-end: landscape CSV in, SVG out. Returns the path written. */
export function runLandscape(csvPath: string, outPath: string): string {
  const data = loadLandscape(csvPath);
  writeSvg(outPath, renderSvg(buildLandscapeOption(data)));
  return outPath;
}
