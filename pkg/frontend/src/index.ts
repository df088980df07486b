export { RateRow, RateTable, SchemaError, parseRateTable, readRateTable } from "./csv.js";
export { Fit, Model, abscissa, fitRate, usableRows } from "./fit.js";
export { FigureOptions, figureSvg } from "./svg.js";
export { PlotSpec, RenderedFigure, render } from "./render.js";
export { UsageError, main, parseArgs, runRender } from "./cli.js";
