import * as echarts from "echarts/core";
import { CustomChart, LineChart } from "echarts/charts";
import { GridComponent, LegendComponent } from "echarts/components";
import { SVGRenderer } from "echarts/renderers";
import type { ComposeOption } from "echarts/core";
import type { CustomSeriesOption, LineSeriesOption } from "echarts/charts";
import type { GridComponentOption, LegendComponentOption } from "echarts/components";
import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

echarts.use([CustomChart, LineChart, GridComponent, LegendComponent, SVGRenderer]);

export type ChartOption = ComposeOption<
  CustomSeriesOption | LineSeriesOption | GridComponentOption | LegendComponentOption
>;
export type LineSeries = LineSeriesOption;
export type CustomSeries = CustomSeriesOption;

export const WIDTH = 960;
export const HEIGHT = 600;

/** Fixed palette so output bytes do not depend on the echarts default theme. */
export const PALETTE = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"];

/**
 * The SSR renderer names CSS classes with a process-global counter, so two
 * renders of the same option differ byte-wise. Renumber the generated ids in
 * encounter order; output becomes a pure function of the option.
 */
export function normalizeSvgIds(svg: string): string {
  const seen = new Map<string, string>();
  // two id families: style classes "zr0-cls-12" and clip paths "zr0-c3"
  return svg.replace(/zr\d+-(cls-)?\d+|zr\d+-c\d+/g, (token) => {
    let mapped = seen.get(token);
    if (mapped === undefined) {
      const kind = token.includes("-cls-") ? "cls" : "clip";
      mapped = `zr-${kind}-${seen.size}`;
      seen.set(token, mapped);
    }
    return mapped;
  });
}

/** Render an option to an SVG string with a headless chart instance. */
export function renderSvg(option: ChartOption, width = WIDTH, height = HEIGHT): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  // animations would make SSR output depend on capture time
  chart.setOption({ animation: false, ...option });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return normalizeSvgIds(svg);
}

export function writeSvg(path: string, svg: string): void {
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, svg, "utf8");
}
