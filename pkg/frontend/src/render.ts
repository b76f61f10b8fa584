#!/usr/bin/env node
/** Render a figure analogue from CLI outputs to SVG (or PNG with resvg).
 *
 * Usage: render --figure N --in DIR --out FILE.svg
 */

import * as fs from "fs";
import * as path from "path";
import * as echarts from "echarts";
import { FIGURES } from "./figures";
import { SchemaError } from "./csv";

export interface RenderSpec {
  figure: number;
  inDir: string;
  outFile: string;
  width?: number;
  height?: number;
}

export function renderToSvg(spec: RenderSpec): string {
  const builder = FIGURES[spec.figure];
  if (!builder) {
    throw new SchemaError(`unknown figure ${spec.figure}; expected 1..4`);
  }
  const option = builder(spec.inDir);
  const chart = echarts.init(null as any, null, {
    renderer: "svg",
    ssr: true,
    width: spec.width ?? 960,
    height: spec.height ?? 540,
  });
  chart.setOption({ animation: false, ...option });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
}

export async function render(spec: RenderSpec): Promise<void> {
  const svg = renderToSvg(spec);
  const ext = path.extname(spec.outFile).toLowerCase();
  if (ext === ".png") {
    let Resvg: any;
    try {
      ({ Resvg } = await import("@resvg/resvg-js"));
    } catch {
      throw new Error(
        "PNG output needs the optional @resvg/resvg-js dependency; " +
          "install it or write an .svg file instead"
      );
    }
    const png = new Resvg(svg, { background: "white" }).render().asPng();
    fs.writeFileSync(spec.outFile, png);
    return;
  }
  fs.writeFileSync(spec.outFile, svg, "utf8");
}

function parseArgs(argv: string[]): RenderSpec {
  let figure: number | undefined;
  let inDir: string | undefined;
  let outFile: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--figure":
        figure = Number(argv[++i]);
        break;
      case "--in":
        inDir = argv[++i];
        break;
      case "--out":
        outFile = argv[++i];
        break;
      default:
        throw new Error(`unknown argument '${argv[i]}'`);
    }
  }
  if (!figure || !inDir || !outFile) {
    throw new Error("usage: render --figure <1|2|3|4> --in DIR --out FILE.svg");
  }
  return { figure, inDir, outFile };
}

export async function main(argv: string[]): Promise<number> {
  try {
    await render(parseArgs(argv));
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
