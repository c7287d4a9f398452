import { readFileSync } from "node:fs";
import { z } from "zod";

import { numericColumn, readCsv, SchemaError } from "./csv.js";
import { alignSeries, meanStd, Series } from "./stats.js";
import { PALETTE, renderSvg, writeSvg, type ChartOption, type CustomSeries, type LineSeries } from "./render.js";

/**
 * Figure description: one entry per labeled group of per-seed logs, plus the
 * two column names to plot. `out` may live in the file or come from the CLI.
 */
export const CurveSpecSchema = z
  .object({
    labels: z
      .array(
        z
          .object({
            label: z.string().min(1),
            files: z.array(z.string().min(1)).min(1),
          })
          .strict(),
      )
      .min(1),
    x: z.string().min(1),
    y: z.string().min(1),
    out: z.string().min(1).optional(),
  })
  .strict();

export type CurveSpec = z.infer<typeof CurveSpecSchema>;

export function loadCurveSpec(path: string): CurveSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaError(`${path}: ${(err as Error).message}`);
  }
  const parsed = CurveSpecSchema.safeParse(raw);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    throw new SchemaError(`${path}: ${issue.path.join(".")}: ${issue.message}`);
  }
  return parsed.data;
}

export interface LabelCurve {
  label: string;
  grid: number[];
  mean: number[];
  std: number[];
  seeds: number;
}

/** Read every group's CSVs and reduce them to pointwise mean and std. */
export function assembleCurves(spec: CurveSpec): LabelCurve[] {
  return spec.labels.map(({ label, files }) => {
    const series: Series[] = files.map((path) => {
      const table = readCsv(path);
      return {
        x: numericColumn(table, spec.x, path),
        y: numericColumn(table, spec.y, path),
      };
    });
    const { grid, ys } = alignSeries(series);
    const { mean, std } = meanStd(ys);
    return { label, grid, mean, std, seeds: files.length };
  });
}

const pair = (xs: number[], ys: number[]) => xs.map((x, i) => [x, ys[i]]);

/**
 * The +-1 std band as one filled polygon: down the lower edge, back along
 * the upper. A custom series maps the value-space points through the axes at
 * render time, so the fill is exactly pointwise (line-series stacking cannot
 * do this on a value x axis). encode pulls both edges into the y extent.
 */
function bandSeries(c: LabelCurve, color: string): CustomSeries {
  const rows = c.grid.map((x, j) => [x, c.mean[j] - c.std[j], c.mean[j] + c.std[j]]);
  return {
    name: `${c.label} (band)`,
    type: "custom",
    data: rows,
    encode: { x: 0, y: [1, 2] },
    silent: true,
    z: 1,
    renderItem: (params, api) => {
      if (params.dataIndex !== 0) return { type: "group", children: [] };
      const points: number[][] = [];
      for (let j = 0; j < rows.length; j++) {
        points.push(api.coord([rows[j][0], rows[j][1]]));
      }
      for (let j = rows.length - 1; j >= 0; j--) {
        points.push(api.coord([rows[j][0], rows[j][2]]));
      }
      return {
        type: "polygon",
        shape: { points },
        style: { fill: color, opacity: 0.25 },
      };
    },
  };
}

/**
 * One solid mean line per label plus its band. Band series carry names
 * outside the legend list so the legend shows one entry per label.
 */
export function buildCurvesOption(
  curves: LabelCurve[],
  xName: string,
  yName: string,
): ChartOption {
  const series: (CustomSeries | LineSeries)[] = [];
  curves.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    series.push(bandSeries(c, color));
    series.push({
      name: c.label,
      type: "line",
      data: pair(c.grid, c.mean),
      lineStyle: { color, width: 2 },
      itemStyle: { color },
      symbol: "none",
      z: 2,
    });
  });
  return {
    legend: { data: curves.map((c) => c.label), top: 8 },
    grid: { left: 70, right: 24, top: 48, bottom: 56 },
    xAxis: {
      type: "value",
      name: xName,
      nameLocation: "middle",
      nameGap: 30,
    },
    yAxis: {
      type: "value",
      name: yName,
      nameLocation: "middle",
      nameGap: 48,
    },
    series,
  };
}

/** End-to-end: spec file in, SVG out. Returns the path written. */
export function runCurves(specPath: string, outOverride?: string): string {
  const spec = loadCurveSpec(specPath);
  const out = outOverride ?? spec.out;
  if (!out) {
    throw new SchemaError(`${specPath}: no "out" field and no --out given`);
  }
  const curves = assembleCurves(spec);
  writeSvg(out, renderSvg(buildCurvesOption(curves, spec.x, spec.y)));
  return out;
}
