export { readCsv, numericColumn, SchemaError } from "./csv.js";
export { alignSeries, meanStd, resample, sameGrid, unionGrid } from "./stats.js";
export type { Series } from "./stats.js";
export {
  assembleCurves,
  buildCurvesOption,
  CurveSpecSchema,
  loadCurveSpec,
  runCurves,
} from "./curves.js";
export type { CurveSpec, LabelCurve } from "./curves.js";
export { buildLandscapeOption, loadLandscape, runLandscape } from "./landscape.js";
export type { Landscape } from "./landscape.js";
export { renderSvg, writeSvg, PALETTE } from "./render.js";
export { main } from "./cli.js";
