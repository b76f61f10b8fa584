/** Build echarts option objects for the four figure analogues.
 *
 * Inputs are the CLI's published CSV/JSON files; nothing is recomputed here.
 */

import * as fs from "fs";
import * as path from "path";
import type { EChartsOption } from "echarts";
import { column, readTable, requireColumns, SchemaError } from "./csv";

const PALETTE = ["#2f6fb2", "#d1495b", "#3f9b6e", "#1a1a1a", "#b66dd6"];

function groupBy(keys: number[], values: number[][]): Map<number, number[][]> {
  const out = new Map<number, number[][]>();
  keys.forEach((k, i) => {
    if (!out.has(k)) out.set(k, []);
    out.get(k)!.push(values[i]);
  });
  return out;
}

export function figure1(inDir: string): EChartsOption {
  const file = path.join(inDir, "figure1.csv");
  const table = readTable(file);
  requireColumns(file, table, ["w", "D_series", "var_over_t_t100", "romanelli_guess"]);
  const w = column(table, "w");
  return {
    backgroundColor: "#ffffff",
    title: { text: "Diffusion constant, reflection-noise walk", left: "center" },
    legend: { bottom: 0 },
    xAxis: { type: "value", name: "w", min: 0, max: 1 },
    yAxis: { type: "value", name: "D  (sites^2/step)" },
    series: [
      {
        name: "D (series)",
        type: "line",
        smooth: true,
        symbol: "none",
        color: PALETTE[0],
        data: w.map((x, i) => [x, column(table, "D_series")[i]]),
      },
      {
        name: "Var(Q_t)/t at t=100",
        type: "scatter",
        color: PALETTE[1],
        symbolSize: 9,
        data: w.map((x, i) => [x, column(table, "var_over_t_t100")[i]]),
      },
      {
        name: "w/(1-w) guess",
        type: "line",
        symbol: "none",
        color: PALETTE[2],
        lineStyle: { type: "dashed" },
        data: w.map((x, i) => [x, column(table, "romanelli_guess")[i]]),
      },
    ],
  };
}

export function figure2(inDir: string): EChartsOption {
  const dcurveFile = path.join(inDir, "figure2_dcurve.csv");
  const distFile = path.join(inDir, "figure2_distributions.csv");
  const dcurve = readTable(dcurveFile);
  requireColumns(dcurveFile, dcurve, ["delta", "D"]);
  const dists = readTable(distFile);
  requireColumns(distFile, dists, ["t", "x", "p_avg", "gaussian"]);

  const byT = groupBy(column(dists, "t"), dists.rows);
  const ts = [...byT.keys()].sort((a, b) => a - b);
  const layerSeries: any[] = [];
  ts.forEach((t, i) => {
    const rows = byT.get(t)!;
    layerSeries.push({
      name: `t = ${t}`,
      type: "line",
      symbol: "none",
      color: PALETTE[i % PALETTE.length],
      xAxisIndex: 1,
      yAxisIndex: 1,
      data: rows.map((r) => [r[1], r[2]]),
    });
  });
  const last = byT.get(ts[ts.length - 1])!;
  layerSeries.push({
    name: "asymptotic Gaussian",
    type: "line",
    symbol: "none",
    color: PALETTE[1],
    lineStyle: { type: "dashed", width: 2 },
    xAxisIndex: 1,
    yAxisIndex: 1,
    data: last.map((r) => [r[1], r[3]]),
  });
  return {
    backgroundColor: "#ffffff",
    title: [
      { text: "(a) D vs phase spread", left: "22%", textAlign: "center" },
      { text: "(b) distributions vs asymptote", left: "76%", textAlign: "center" },
    ],
    legend: { bottom: 0 },
    grid: [
      { left: "6%", width: "38%", bottom: "14%" },
      { left: "56%", width: "38%", bottom: "14%" },
    ],
    xAxis: [
      { type: "value", gridIndex: 0, name: "delta" },
      { type: "value", gridIndex: 1, name: "x" },
    ],
    yAxis: [
      { type: "value", gridIndex: 0, name: "D" },
      { type: "value", gridIndex: 1, name: "probability" },
    ],
    series: [
      {
        name: "D(delta)",
        type: "line",
        smooth: true,
        symbol: "circle",
        color: PALETTE[0],
        xAxisIndex: 0,
        yAxisIndex: 0,
        data: column(dcurve, "delta").map((d, i) => [d, column(dcurve, "D")[i]]),
      },
      ...layerSeries,
    ],
  };
}

export function figure3(inDir: string): EChartsOption {
  const gridFile = path.join(inDir, "figure3_grid.csv");
  const distFile = path.join(inDir, "figure3_distributions.csv");
  const grid = readTable(gridFile);
  requireColumns(gridFile, grid, ["r0", "sigma", "D"]);
  const dists = readTable(distFile);
  requireColumns(distFile, dists, ["sigma", "x", "x_scaled", "p_avg", "p_scaled"]);

  const r0s = [...new Set(column(grid, "r0"))].sort((a, b) => a - b);
  const sigmas = [...new Set(column(grid, "sigma"))].sort((a, b) => a - b);
  const dvals = column(grid, "D");
  const heat = grid.rows.map((r) => [
    r0s.indexOf(r[0]),
    sigmas.indexOf(r[1]),
    r[2],
  ]);
  const bySigma = groupBy(column(dists, "sigma"), dists.rows);
  const layers: any[] = [...bySigma.keys()]
    .sort((a, b) => a - b)
    .map((s, i) => ({
      name: `sigma = ${s}`,
      type: "line",
      symbol: "none",
      color: PALETTE[i % PALETTE.length],
      xAxisIndex: 1,
      yAxisIndex: 1,
      data: bySigma.get(s)!.map((r) => [r[2], r[4]]),
    }));
  return {
    backgroundColor: "#ffffff",
    title: [
      { text: "(a) D over (r0, sigma)", left: "22%", textAlign: "center" },
      { text: "(b) scaled distributions", left: "76%", textAlign: "center" },
    ],
    legend: { bottom: 0 },
    grid: [
      { left: "7%", width: "36%", bottom: "14%" },
      { left: "56%", width: "38%", bottom: "14%" },
    ],
    xAxis: [
      {
        type: "category",
        gridIndex: 0,
        name: "r0",
        data: r0s.map((v) => v.toFixed(2)),
      },
      { type: "value", gridIndex: 1, name: "x / sqrt(t)" },
    ],
    yAxis: [
      {
        type: "category",
        gridIndex: 0,
        name: "sigma",
        data: sigmas.map((v) => v.toFixed(2)),
      },
      { type: "value", gridIndex: 1, name: "sqrt(t) p" },
    ],
    visualMap: {
      min: 0,
      max: Math.max(...dvals),
      dimension: 2,
      seriesIndex: 0,
      orient: "vertical",
      left: "44%",
      bottom: "30%",
      inRange: { color: ["#20306f", "#3f9b6e", "#f2d43f"] },
    },
    series: [
      {
        name: "D",
        type: "heatmap",
        xAxisIndex: 0,
        yAxisIndex: 0,
        data: heat,
      },
      ...layers,
    ],
  };
}

interface Figure4Payload {
  walks: {
    w: number;
    d_matrix: number[][];
    density_grid: { x1: number[]; x2: number[]; p: number[][] };
  }[];
}

export function figure4(inDir: string): EChartsOption {
  const file = path.join(inDir, "figure4.json");
  let payload: Figure4Payload;
  try {
    payload = JSON.parse(fs.readFileSync(file, "utf8"));
  } catch (err) {
    throw new SchemaError(`${file}: ${(err as Error).message}`);
  }
  if (!payload.walks || payload.walks.length === 0) {
    throw new SchemaError(`${file}: expected a nonempty 'walks' array`);
  }
  const grids: any[] = [];
  const xAxes: any[] = [];
  const yAxes: any[] = [];
  const series: any[] = [];
  const titles: any[] = [];
  let maxP = 0;
  payload.walks.forEach((walk) => {
    for (const key of ["w", "d_matrix", "density_grid"]) {
      if (!(key in walk)) {
        throw new SchemaError(`${file}: walk entry missing '${key}'`);
      }
    }
    maxP = Math.max(maxP, ...walk.density_grid.p.map((row) => Math.max(...row)));
  });
  payload.walks.forEach((walk, i) => {
    const n = payload.walks.length;
    const width = 80 / n - 6;
    const left = 8 + (i * 80) / n;
    grids.push({ left: `${left}%`, width: `${width}%`, bottom: "14%" });
    titles.push({
      text: `w = ${walk.w}`,
      left: `${left + width / 2}%`,
      textAlign: "center",
    });
    xAxes.push({
      type: "category",
      gridIndex: i,
      name: "x1",
      data: walk.density_grid.x1.map((v) => v.toFixed(1)),
    });
    yAxes.push({
      type: "category",
      gridIndex: i,
      name: "x2",
      data: walk.density_grid.x2.map((v) => v.toFixed(1)),
    });
    const cells: number[][] = [];
    walk.density_grid.p.forEach((row, ix) => {
      row.forEach((p, iy) => {
        cells.push([ix, iy, p]);
      });
    });
    series.push({
      name: `w = ${walk.w}`,
      type: "heatmap",
      xAxisIndex: i,
      yAxisIndex: i,
      data: cells,
      progressive: 0,
    });
  });
  // quantized levels give the filled-contour look
  const pieces = Array.from({ length: 9 }, (_, i) => ({
    min: (maxP * i) / 9,
    max: (maxP * (i + 1)) / 9,
  }));
  return {
    backgroundColor: "#ffffff",
    title: titles,
    grid: grids,
    xAxis: xAxes,
    yAxis: yAxes,
    visualMap: {
      type: "piecewise",
      pieces,
      dimension: 2,
      seriesIndex: series.map((_, i) => i),
      show: false,
      inRange: { color: ["#1c2560", "#2f6fb2", "#3f9b6e", "#f2d43f", "#ffffff"] },
    },
    series,
  };
}

export const FIGURES: Record<number, (inDir: string) => EChartsOption> = {
  1: figure1,
  2: figure2,
  3: figure3,
  4: figure4,
};
